"""Backend selection for the Hamming kernels.

Prefers the compiled extension; falls back to the numpy implementation when
the extension was not built. ``BACKEND`` records which one is active.
"""

try:
    from bobsearch import _kernels as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from bobsearch import _kernels_py as _impl

    BACKEND = "python"

hamming_words = _impl.hamming_words
min_hamming = _impl.min_hamming
