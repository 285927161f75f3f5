"""End-to-end indexing pipeline shared by the CLI and library callers."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from PIL import Image

from bobsearch import features, preprocess
from bobsearch.barcode import BunchOfBarcodes, minmax_barcode
from bobsearch.corpus import Catalog
from bobsearch.errors import MissingSlide
from bobsearch.index import Index, build_index


@dataclass(frozen=True)
class RunConfig:
    seed: int  # mandatory, no entropy default
    physical_size_um: float = 500.0
    magnification_mpp: float = 0.5
    min_tissue_fraction: float = 0.5
    k: int = preprocess.DEFAULT_K
    selection_fraction: float = preprocess.DEFAULT_SELECTION_FRACTION
    brightness_threshold: int = preprocess.DEFAULT_BRIGHTNESS_THRESHOLD
    feature_source: str = "reference"  # "reference" or a feature file path

    def patch_spec(self) -> preprocess.PatchSpec:
        return preprocess.PatchSpec(
            physical_size_um=self.physical_size_um,
            magnification_mpp=self.magnification_mpp,
            min_tissue_fraction=self.min_tissue_fraction,
        )


def load_image(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def bunch_from_vectors(slide_id: str, vectors) -> BunchOfBarcodes:
    return BunchOfBarcodes(
        slide_id,
        [minmax_barcode(v.values, origin=(v.slide_id, v.x, v.y)) for v in vectors],
    )


def slide_bunch_reference(record, config: RunConfig, image: np.ndarray | None = None):
    """Preprocess one slide and featurize its mosaic with the reference
    extractor. Returns (bunch, mosaic)."""
    if image is None:
        if not record.image_path:
            raise MissingSlide(f"slide {record.slide_id!r}: no image path and no imported features")
        image = load_image(record.image_path)
    spec = config.patch_spec()
    mosaic = preprocess.build_mosaic(
        image,
        record.slide_id,
        spec,
        k=config.k,
        selection_fraction=config.selection_fraction,
        seed=config.seed,
        brightness_threshold=config.brightness_threshold,
    )
    if not mosaic.patches:
        raise MissingSlide(f"slide {record.slide_id!r}: no tissue patches found")
    size = spec.patch_px
    vectors = [
        features.extract_features_reference(
            image[y : y + size, x : x + size], slide_id=record.slide_id, x=x, y=y
        )
        for x, y, _ in mosaic.patches
    ]
    return bunch_from_vectors(record.slide_id, vectors), mosaic


def index_catalog(catalog: Catalog, config: RunConfig, images: dict | None = None):
    """Build the archive index.

    With feature_source "reference", every slide image is preprocessed and
    featurized here (images may be supplied in-memory via ``images``).
    Otherwise feature_source names a feature file and slides are indexed
    from the imported vectors directly. Returns (index, manifest_dict).
    """
    bunches: dict[str, BunchOfBarcodes] = {}
    mosaic_sizes: dict[str, int] = {}
    if config.feature_source == "reference":
        for rec in catalog.records:
            image = images.get(rec.slide_id) if images else None
            bunch, mosaic = slide_bunch_reference(rec, config, image=image)
            bunches[rec.slide_id] = bunch
            mosaic_sizes[rec.slide_id] = len(mosaic.patches)
    else:
        grouped = features.group_by_slide(features.import_features(config.feature_source))
        for rec in catalog.records:
            vectors = grouped.get(rec.slide_id)
            if not vectors:
                raise MissingSlide(f"slide {rec.slide_id!r}: no features in {config.feature_source}")
            bunches[rec.slide_id] = bunch_from_vectors(rec.slide_id, vectors)
            mosaic_sizes[rec.slide_id] = len(vectors)

    idx = build_index(catalog, bunches)
    manifest = {
        "config": asdict(config),
        "slide_count": len(idx),
        "barcode_width": idx.width,
        "mosaic_sizes": mosaic_sizes,
        "total_barcodes": int(sum(mosaic_sizes.values())),
    }
    return idx, manifest
