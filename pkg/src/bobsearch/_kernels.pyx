# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Hamming kernels over packed uint64 barcode words."""

from libc.stdint cimport uint64_t, int64_t

import numpy as np


cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define bob_popcount64(x) ((int)__builtin_popcountll(x))
    #else
    static int bob_popcount64(unsigned long long x) {
        int c = 0;
        while (x) { x &= x - 1; ++c; }
        return c;
    }
    #endif
    """
    int bob_popcount64(uint64_t x) nogil


def hamming_words(const uint64_t[::1] a, const uint64_t[::1] b):
    """Hamming distance between two packed word vectors."""
    cdef Py_ssize_t i, n = a.shape[0]
    cdef int64_t total = 0
    for i in range(n):
        total += bob_popcount64(a[i] ^ b[i])
    return total


def min_hamming(const uint64_t[:, ::1] q, const uint64_t[:, ::1] t):
    """Per-row minimum Hamming distance from rows of q to rows of t."""
    cdef Py_ssize_t nq = q.shape[0]
    cdef Py_ssize_t nt = t.shape[0]
    cdef Py_ssize_t width = q.shape[1]
    cdef Py_ssize_t i, j, w
    cdef int64_t d, best
    out = np.empty(nq, dtype=np.int64)
    cdef int64_t[::1] ov = out
    with nogil:
        for i in range(nq):
            best = -1
            for j in range(nt):
                d = 0
                for w in range(width):
                    d += bob_popcount64(q[i, w] ^ t[j, w])
                if best < 0 or d < best:
                    best = d
            ov[i] = best
    return out
