"""Pure-numpy Hamming kernels.

Fallback used when the compiled extension is unavailable. Same contract as
``bobsearch._kernels``: inputs are C-contiguous uint64 arrays of packed
barcode words with zeroed padding bits.
"""

import numpy as np

if hasattr(np, "bitwise_count"):
    _popcount = np.bitwise_count
else:
    # SWAR popcount for numpy < 2.0
    _M1 = np.uint64(0x5555555555555555)
    _M2 = np.uint64(0x3333333333333333)
    _M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
    _H01 = np.uint64(0x0101010101010101)

    def _popcount(x):
        x = x - ((x >> np.uint64(1)) & _M1)
        x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
        x = (x + (x >> np.uint64(4))) & _M4
        return (x * _H01) >> np.uint64(56)


def hamming_words(a, b):
    """Hamming distance between two packed word vectors."""
    return int(_popcount(np.bitwise_xor(a, b)).sum())


def min_hamming(q, t):
    """Per-row minimum Hamming distance from rows of q to rows of t.

    q: (nq, W) uint64, t: (nt, W) uint64 -> (nq,) int64
    """
    x = np.bitwise_xor(q[:, None, :], t[None, :, :])
    d = _popcount(x).sum(axis=2, dtype=np.int64)
    return d.min(axis=1)
