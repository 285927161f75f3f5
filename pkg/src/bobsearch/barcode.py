"""MinMax barcodes, packed Hamming distance, and slide-to-slide matching."""

from __future__ import annotations

import numpy as np

from bobsearch import kernels
from bobsearch.errors import DimensionError, EmptyInput

WORD_BITS = 64


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean vector into uint64 words.

    Bit i lands in word i // 64, position i % 64 (LSB first); padding bits
    in the last word are zero.
    """
    bits = np.asarray(bits, dtype=bool).ravel()
    nwords = (bits.size + WORD_BITS - 1) // WORD_BITS
    padded = np.zeros(nwords * WORD_BITS, dtype=np.uint8)
    padded[: bits.size] = bits
    packed = np.packbits(padded, bitorder="little")
    return np.ascontiguousarray(packed.view("<u8").astype(np.uint64))


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of pack_bits."""
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:nbits].astype(bool)


class Barcode:
    """A fixed-width bit vector tagged with its source patch."""

    __slots__ = ("words", "nbits", "origin")

    def __init__(self, words, nbits, origin=None):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.ndim != 1 or words.size != (nbits + WORD_BITS - 1) // WORD_BITS:
            raise DimensionError(f"expected {(nbits + 63) // 64} words for {nbits} bits")
        self.words = words
        self.nbits = int(nbits)
        self.origin = origin

    @classmethod
    def from_bits(cls, bits, origin=None):
        bits = np.asarray(bits, dtype=bool).ravel()
        return cls(pack_bits(bits), bits.size, origin)

    @property
    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.nbits)

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return self.nbits == other.nbits and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.nbits, self.words.tobytes()))

    def __repr__(self):
        return f"Barcode(nbits={self.nbits}, origin={self.origin!r})"


def minmax_barcode(values, origin=None) -> Barcode:
    """Binarize a feature vector by the sign of adjacent differences.

    Bit i is 1 iff values[i+1] - values[i] > 0; ties give 0. Width is one
    less than the feature dimension.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2:
        raise DimensionError("feature dimension must be at least 2")
    return Barcode.from_bits(np.diff(values) > 0, origin)


def hamming(a: Barcode, b: Barcode) -> int:
    """Number of differing bit positions between two barcodes."""
    if a.nbits != b.nbits:
        raise DimensionError(f"width mismatch: {a.nbits} vs {b.nbits}")
    return int(kernels.hamming_words(a.words, b.words))


class BunchOfBarcodes:
    """The per-slide index unit: one barcode per mosaic patch."""

    __slots__ = ("slide_id", "barcodes", "nbits", "_matrix")

    def __init__(self, slide_id: str, barcodes):
        barcodes = list(barcodes)
        if not barcodes:
            raise EmptyInput(f"slide {slide_id!r}: empty bunch")
        widths = {b.nbits for b in barcodes}
        if len(widths) != 1:
            raise DimensionError(f"slide {slide_id!r}: mixed barcode widths {sorted(widths)}")
        self.slide_id = slide_id
        self.barcodes = barcodes
        self.nbits = barcodes[0].nbits
        self._matrix = None

    @property
    def matrix(self) -> np.ndarray:
        """(n_barcodes, n_words) uint64 view used by the kernels."""
        if self._matrix is None:
            self._matrix = np.ascontiguousarray(
                np.vstack([b.words for b in self.barcodes])
            )
        return self._matrix

    def __len__(self):
        return len(self.barcodes)

    def __eq__(self, other):
        if not isinstance(other, BunchOfBarcodes):
            return NotImplemented
        return (
            self.slide_id == other.slide_id
            and self.nbits == other.nbits
            and len(self) == len(other)
            and all(a == b for a, b in zip(self.barcodes, other.barcodes))
        )


def bob_distance(query: BunchOfBarcodes, target: BunchOfBarcodes) -> float:
    """Median over query barcodes of the minimum Hamming distance to the target.

    Not symmetric in general; zero whenever every query barcode appears
    verbatim in the target.
    """
    if query.nbits != target.nbits:
        raise DimensionError(f"width mismatch: {query.nbits} vs {target.nbits}")
    mins = kernels.min_hamming(query.matrix, target.matrix)
    return float(np.median(mins))
