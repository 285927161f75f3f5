"""Per-patch feature vectors: reference extractor plus import/export of
externally computed features (e.g. from a pre-trained network run offline)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bobsearch.errors import DimensionError, EmptyImage

REFERENCE_DIM = 1024
_COLOR_DIMS = 768  # 3 channels x 256 bins
_ORIENT_BINS = 16
_SPATIAL_CELLS = 16  # 4 x 4 grid


@dataclass(frozen=True)
class FeatureVector:
    slide_id: str
    x: int
    y: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError(f"slide {self.slide_id!r} patch ({self.x},{self.y}): non-finite feature value")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size


_cell_cache: dict = {}


def _cell_indices(h: int, w: int) -> np.ndarray:
    """4x4 spatial cell id per pixel, cached by patch shape."""
    key = (h, w)
    if key not in _cell_cache:
        rows = np.minimum((np.arange(h) * 4) // max(h, 1), 3)
        cols = np.minimum((np.arange(w) * 4) // max(w, 1), 3)
        _cell_cache[key] = (rows[:, None] * 4 + cols[None, :]).astype(np.intp)
    return _cell_cache[key]


def extract_features_reference(patch: np.ndarray, slide_id: str = "", x: int = 0, y: int = 0) -> FeatureVector:
    """Deterministic 1024-dim descriptor.

    Dims 0..767: per-channel 256-bin normalized intensity histograms.
    Dims 768..1023: gradient-orientation histogram of the grayscale patch,
    16 orientations x 16 spatial cells, magnitude-weighted and normalized
    to unit sum when any gradient is present.
    """
    patch = np.asarray(patch)
    if patch.size == 0:
        raise EmptyImage("cannot featurize an empty patch")
    if patch.ndim != 3 or patch.shape[2] != 3:
        raise ValueError(f"expected an RGB patch, got shape {patch.shape}")
    h, w = patch.shape[:2]
    npix = h * w
    out = np.zeros(REFERENCE_DIM, dtype=np.float64)
    for ch in range(3):
        out[ch * 256 : (ch + 1) * 256] = np.bincount(patch[:, :, ch].ravel(), minlength=256) / npix

    gray = patch[:, :, 0] * 0.299 + patch[:, :, 1] * 0.587 + patch[:, :, 2] * 0.114
    gy, gx = np.gradient(gray.astype(np.float64))
    mag = np.hypot(gx, gy)
    angle = np.arctan2(gy, gx)  # [-pi, pi]
    orient = np.floor((angle + math.pi) / (2.0 * math.pi) * _ORIENT_BINS).astype(np.intp)
    orient = np.minimum(orient, _ORIENT_BINS - 1)
    flat = _cell_indices(h, w) * _ORIENT_BINS + orient
    hist = np.bincount(flat.ravel(), weights=mag.ravel(), minlength=_SPATIAL_CELLS * _ORIENT_BINS)
    total = hist.sum()
    if total > 0:
        hist = hist / total
    out[_COLOR_DIMS:] = hist
    return FeatureVector(slide_id=slide_id, x=x, y=y, values=out)


def import_features(path) -> list[FeatureVector]:
    """Read a feature file.

    Line 1 is "slide_id,x,y,<d>" declaring the dimension; every following
    row is "slide_id,x,y,v1,...,vd". Rows with a deviating value count
    raise DimensionError; non-finite values raise ValueError.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        parts = header.split(",")
        if len(parts) != 4 or parts[:3] != ["slide_id", "x", "y"]:
            raise ValueError(f"bad feature file header: {header!r}")
        try:
            dim = int(parts[3])
        except ValueError:
            raise ValueError(f"bad feature file header: {header!r}") from None
        if dim < 1:
            raise ValueError(f"declared dimension must be positive, got {dim}")
        vectors = []
        for line_num, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 3 + dim:
                raise DimensionError(
                    f"row {line_num}: expected {dim} values, got {len(fields) - 3}"
                )
            values = np.array(fields[3:], dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise ValueError(f"row {line_num}: non-finite feature value")
            vectors.append(FeatureVector(fields[0], int(fields[1]), int(fields[2]), values))
    return vectors


def export_features(vectors, path) -> None:
    """Write the feature file format read by import_features (floats at 9
    significant digits)."""
    vectors = list(vectors)
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise DimensionError(f"mixed dimensions: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"slide_id,x,y,{dim}\n")
        for v in vectors:
            vals = ",".join(f"{x:.9g}" for x in v.values)
            fh.write(f"{v.slide_id},{v.x},{v.y},{vals}\n")


def group_by_slide(vectors) -> dict[str, list[FeatureVector]]:
    """Bucket feature vectors by slide id, preserving input order."""
    grouped: dict[str, list[FeatureVector]] = {}
    for v in vectors:
        grouped.setdefault(v.slide_id, []).append(v)
    return grouped
