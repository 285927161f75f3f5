"""Slide preprocessing: tissue mask, patch grid, clustering, mosaic selection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from bobsearch.errors import EmptyImage, EmptyInput

DEFAULT_BRIGHTNESS_THRESHOLD = 220
DEFAULT_K = 9
DEFAULT_SELECTION_FRACTION = 0.15
KMEANS_MAX_ITER = 300


@dataclass
class TissueMask:
    """Binary tissue map at thumbnail scale (1 = tissue)."""

    bits: np.ndarray  # (height, width) bool
    scale: float = 1.0  # thumbnail pixels per native pixel

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def tissue_fraction(self) -> float:
        return float(self.bits.mean())


@dataclass(frozen=True)
class PatchSpec:
    physical_size_um: float = 500.0
    magnification_mpp: float = 0.5
    min_tissue_fraction: float = 0.5

    def __post_init__(self):
        if not self.physical_size_um > 0:
            raise ValueError("physical_size_um must be positive")
        if not self.magnification_mpp > 0:
            raise ValueError("magnification_mpp must be positive")
        if not 0.0 <= self.min_tissue_fraction <= 1.0:
            raise ValueError("min_tissue_fraction must be in [0, 1]")
        if self.patch_px < 1:
            raise ValueError("derived patch pixel size must be >= 1")

    @property
    def patch_px(self) -> int:
        """Patch edge length in native pixels."""
        return int(round(self.physical_size_um / self.magnification_mpp))


@dataclass
class Mosaic:
    """Selected representative patches of one slide."""

    slide_id: str
    patches: list  # (x, y, cluster_id) in native pixels
    k: int
    selection_fraction: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "slide_id": self.slide_id,
                "k": self.k,
                "selection_fraction": self.selection_fraction,
                "patches": [[int(x), int(y), int(c)] for x, y, c in self.patches],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Mosaic":
        doc = json.loads(text)
        return cls(
            slide_id=doc["slide_id"],
            patches=[tuple(p) for p in doc["patches"]],
            k=doc["k"],
            selection_fraction=doc["selection_fraction"],
        )


def segment_tissue(image: np.ndarray, brightness_threshold: int = DEFAULT_BRIGHTNESS_THRESHOLD) -> TissueMask:
    """Threshold out the bright background; a pixel is tissue unless all
    three channels exceed the brightness threshold."""
    image = np.asarray(image)
    if image.size == 0:
        raise EmptyImage("cannot segment a zero-sized image")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an RGB raster, got shape {image.shape}")
    background = image.min(axis=2) > brightness_threshold
    return TissueMask(bits=~background, scale=1.0)


def grid_patches(mask: TissueMask, spec: PatchSpec) -> list:
    """Non-overlapping grid tiling from (0, 0); keeps tiles whose tissue
    fraction meets the spec minimum. Returns (x, y) in native pixels,
    row-major. Partial border tiles are discarded."""
    size = spec.patch_px
    native_h = int(round(mask.height / mask.scale))
    native_w = int(round(mask.width / mask.scale))
    rows = native_h // size
    cols = native_w // size
    kept = []
    for r in range(rows):
        for c in range(cols):
            x, y = c * size, r * size
            # nearest-neighbor window into the (possibly downscaled) mask
            my0 = int(round(y * mask.scale))
            my1 = max(my0 + 1, int(round((y + size) * mask.scale)))
            mx0 = int(round(x * mask.scale))
            mx1 = max(mx0 + 1, int(round((x + size) * mask.scale)))
            window = mask.bits[my0:my1, mx0:mx1]
            if window.size and window.mean() >= spec.min_tissue_fraction:
                kept.append((x, y))
    return kept


def patch_descriptor(patch: np.ndarray) -> np.ndarray:
    """Cheap clustering feature: concatenated per-channel 8-bin normalized
    intensity histograms (24 dims, sums to 3.0)."""
    patch = np.asarray(patch)
    if patch.size == 0:
        raise EmptyImage("cannot describe an empty patch")
    out = np.empty(24, dtype=np.float64)
    npix = patch.shape[0] * patch.shape[1]
    for ch in range(3):
        binned = patch[:, :, ch].astype(np.uint16) >> 5  # 256 / 8 levels per bin
        out[ch * 8 : (ch + 1) * 8] = np.bincount(binned.ravel(), minlength=8) / npix
    return out


def kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted sampling of k initial centroids."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all points coincide with chosen centroids; fall back to uniform
            idx = int(rng.integers(n))
        else:
            target = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), target, side="right"))
            idx = min(idx, n - 1)
        centroids[i] = points[idx]
        closest = np.minimum(closest, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def cluster_patches(descriptors, k: int, seed: int):
    """Deterministic Lloyd's k-means with k-means++ seeding.

    Ties in nearest-centroid assignment go to the lowest centroid id.
    Empty clusters are dropped and ids compacted. Returns (assignments,
    centroids, inertia).
    """
    points = np.asarray(descriptors, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] == 0:
        raise EmptyInput("no descriptors to cluster")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, points.shape[0])

    rng = np.random.default_rng(seed)
    centroids = kmeans_pp_init(points, k, rng)
    labels = None
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # argmin takes the lowest id on ties
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)

    used = np.unique(labels)
    remap = {int(c): i for i, c in enumerate(used)}
    labels = np.array([remap[int(c)] for c in labels], dtype=np.intp)
    centroids = centroids[used]
    d2 = ((points - centroids[labels]) ** 2).sum(axis=1)
    return labels, centroids, float(d2.sum())


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def select_mosaic(patches, assignments, selection_fraction: float, seed: int = 0, slide_id: str = "") -> Mosaic:
    """Pick max(1, round(fraction * m)) patches per cluster at a uniform
    index stride over the cluster's patches sorted by (y, x)."""
    if not 0.0 < selection_fraction <= 1.0:
        raise ValueError("selection_fraction must be in (0, 1]")
    assignments = np.asarray(assignments)
    if len(assignments) != len(patches):
        raise ValueError("assignments must cover patches")
    k = int(assignments.max()) + 1 if len(assignments) else 0
    selected = []
    for c in range(k):
        members = sorted(
            ((x, y) for (x, y), a in zip(patches, assignments) if a == c),
            key=lambda p: (p[1], p[0]),
        )
        m = len(members)
        if m == 0:
            continue
        target = max(1, _round_half_up(selection_fraction * m))
        for i in range(target):
            x, y = members[(i * m) // target]
            selected.append((x, y, c))
    return Mosaic(slide_id=slide_id, patches=selected, k=k, selection_fraction=selection_fraction)


def build_mosaic(
    image: np.ndarray,
    slide_id: str,
    spec: PatchSpec,
    k: int = DEFAULT_K,
    selection_fraction: float = DEFAULT_SELECTION_FRACTION,
    seed: int = 0,
    brightness_threshold: int = DEFAULT_BRIGHTNESS_THRESHOLD,
) -> Mosaic:
    """Full per-slide preprocessing: segment, grid, cluster, select."""
    mask = segment_tissue(image, brightness_threshold)
    coords = grid_patches(mask, spec)
    if not coords:
        return Mosaic(slide_id=slide_id, patches=[], k=0, selection_fraction=selection_fraction)
    size = spec.patch_px
    descriptors = np.vstack([patch_descriptor(image[y : y + size, x : x + size]) for x, y in coords])
    labels, _, _ = cluster_patches(descriptors, k, seed)
    return select_mosaic(coords, labels, selection_fraction, seed=seed, slide_id=slide_id)
