import numpy as np
import pytest

from bobsearch import _kernels_py, kernels

try:
    from bobsearch import _kernels
except ImportError:
    _kernels = None


def random_words(rng, n, nwords, pad_bits=0):
    words = rng.integers(0, 2**64, size=(n, nwords), dtype=np.uint64)
    if pad_bits:
        words[:, -1] &= np.uint64((1 << (64 - pad_bits)) - 1)
    return np.ascontiguousarray(words)


def test_fallback_popcount_matches_int_bit_count():
    rng = np.random.default_rng(0)
    a = random_words(rng, 50, 4)[0]
    b = random_words(rng, 50, 4)[1]
    expected = sum((int(x) ^ int(y)).bit_count() for x, y in zip(a, b))
    assert _kernels_py.hamming_words(a, b) == expected


def test_fallback_min_hamming_matches_loop():
    rng = np.random.default_rng(1)
    q = random_words(rng, 6, 3, pad_bits=5)
    t = random_words(rng, 9, 3, pad_bits=5)
    mins = _kernels_py.min_hamming(q, t)
    for i in range(6):
        expected = min(
            sum((int(x) ^ int(y)).bit_count() for x, y in zip(q[i], t[j]))
            for j in range(9)
        )
        assert mins[i] == expected


@pytest.mark.skipif(_kernels is None, reason="compiled extension not built")
def test_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(50):
        nwords = int(rng.integers(1, 20))
        q = random_words(rng, int(rng.integers(1, 12)), nwords)
        t = random_words(rng, int(rng.integers(1, 12)), nwords)
        assert np.array_equal(_kernels.min_hamming(q, t), _kernels_py.min_hamming(q, t))
        assert _kernels.hamming_words(q[0], t[0]) == _kernels_py.hamming_words(q[0], t[0])


def test_selected_backend_exposes_kernels():
    assert kernels.BACKEND in ("compiled", "python")
    assert callable(kernels.min_hamming)
    assert callable(kernels.hamming_words)
