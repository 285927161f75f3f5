"""Synthetic corpora for demos, benchmarks, and the test suite."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from bobsearch.corpus import HEADER, Catalog, SectionType, SlideRecord
from bobsearch.pipeline import bunch_from_vectors
from bobsearch.features import FeatureVector

SUBTYPE_PALETTES = {
    # per-subtype tissue color ranges, loosely stain-like
    0: ((150, 200), (40, 90), (90, 140)),
    1: ((90, 140), (40, 90), (150, 200)),
    2: ((190, 230), (120, 160), (140, 180)),
    3: ((120, 160), (90, 130), (60, 100)),
    4: ((200, 235), (170, 205), (90, 130)),
    5: ((70, 110), (130, 170), (120, 160)),
}


def make_slide_image(rng: np.random.Generator, width: int, height: int, palette_id: int = 0, n_blobs: int = 12) -> np.ndarray:
    """White background with overlapping colored tissue blobs."""
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    ranges = SUBTYPE_PALETTES[palette_id % len(SUBTYPE_PALETTES)]
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(n_blobs):
        cx = rng.uniform(0, width)
        cy = rng.uniform(0, height)
        rx = rng.uniform(width * 0.1, width * 0.35)
        ry = rng.uniform(height * 0.1, height * 0.35)
        inside = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
        color = [rng.integers(lo, hi) for lo, hi in ranges]
        noise = rng.integers(-15, 16, size=(int(inside.sum()), 3))
        img[inside] = np.clip(np.array(color)[None, :] + noise, 0, 255).astype(np.uint8)
    return img


def write_image_corpus(
    out_dir,
    n_slides: int = 30,
    seed: int = 0,
    width: int = 256,
    height: int = 192,
    subtypes=("AAA", "BBB", "CCC"),
    sites=("site1", "site1", "site2"),
    slides_per_patient: int = 2,
) -> Path:
    """Write PNG slides plus a catalog CSV; returns the catalog path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_slides):
        subtype_idx = i % len(subtypes)
        # same-subtype slides share a patient in blocks of slides_per_patient
        patient = f"P{subtype_idx}{i // (len(subtypes) * slides_per_patient):04d}"
        slide_id = f"S{i:04d}"
        img = make_slide_image(rng, width, height, palette_id=subtype_idx)
        path = out_dir / f"{slide_id}.png"
        Image.fromarray(img).save(path)
        section = ("frozen", "permanent")[i % 2]
        rows.append(
            [slide_id, patient, sites[subtype_idx], subtypes[subtype_idx], section, str(path), "0.5"]
        )
    catalog_path = out_dir / "catalog.csv"
    with open(catalog_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerows(rows)
    return catalog_path


def feature_corpus(
    class_spec,
    dim: int = 256,
    noise: float = 0.05,
    patches_per_slide: int = 8,
    slides_per_patient: int = 1,
    seed: int = 0,
    section: str = "permanent",
):
    """Catalog plus per-slide bunches drawn from per-subtype feature
    distributions.

    class_spec: iterable of (subtype_code, anatomic_site, n_patients).
    Each subtype gets a random base vector; patch features are the base
    plus Gaussian noise, so ``noise`` controls class overlap. Returns
    (catalog, bunches).
    """
    rng = np.random.default_rng(seed)
    records = []
    bunches = {}
    counter = 0
    for code, site, n_patients in class_spec:
        base = rng.normal(0.0, 1.0, size=dim)
        for p in range(n_patients):
            patient_id = f"{code}-pat{p:04d}"
            for s in range(slides_per_patient):
                slide_id = f"{code}-{counter:05d}"
                counter += 1
                records.append(
                    SlideRecord(
                        slide_id=slide_id,
                        patient_id=patient_id,
                        anatomic_site=site,
                        subtype_code=code,
                        section_type=SectionType(section),
                        image_path=None,
                    )
                )
                vectors = [
                    FeatureVector(slide_id, j, 0, base + rng.normal(0.0, noise, size=dim))
                    for j in range(patches_per_slide)
                ]
                bunches[slide_id] = bunch_from_vectors(slide_id, vectors)
    return Catalog(records), bunches


def random_bunch(rng: np.random.Generator, slide_id: str, n_barcodes: int, width_bits: int):
    """Bunch of uniformly random barcodes with zeroed padding bits."""
    from bobsearch.barcode import Barcode

    nwords = (width_bits + 63) // 64
    words = rng.integers(0, 2**64, size=(n_barcodes, nwords), dtype=np.uint64)
    pad = nwords * 64 - width_bits
    if pad:
        words[:, -1] &= np.uint64((1 << (64 - pad)) - 1)
    return [Barcode(words[i], width_bits, origin=(slide_id, i, 0)) for i in range(n_barcodes)]
