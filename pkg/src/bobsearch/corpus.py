"""Slide catalog: schema, ingest, validation, and summary statistics."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path

from bobsearch.errors import DuplicateId, EmptyCatalog, SchemaError

REQUIRED_COLUMNS = ("slide_id", "patient_id", "anatomic_site", "subtype_code", "section_type", "image_path")
HEADER = REQUIRED_COLUMNS + ("mpp",)

DEFAULT_MPP = 0.5  # 20x scan resolution


class SectionType(enum.Enum):
    FROZEN = "frozen"
    PERMANENT = "permanent"
    UNSPECIFIED = "unspecified"


@dataclass(frozen=True)
class SlideRecord:
    slide_id: str
    patient_id: str
    anatomic_site: str
    subtype_code: str
    section_type: SectionType
    image_path: str | None
    mpp: float = DEFAULT_MPP

    def __post_init__(self):
        if not self.slide_id:
            raise ValueError("slide_id must be non-empty")
        if not self.patient_id:
            raise ValueError(f"slide {self.slide_id!r}: patient_id must be non-empty")
        if not self.subtype_code:
            raise ValueError(f"slide {self.slide_id!r}: subtype_code must be non-empty")
        if not self.mpp > 0:
            raise ValueError(f"slide {self.slide_id!r}: mpp must be positive, got {self.mpp}")


class Catalog:
    """Immutable collection of slide records with site and patient indices."""

    def __init__(self, records):
        self.records = list(records)
        seen = set()
        for rec in self.records:
            if rec.slide_id in seen:
                raise DuplicateId(f"duplicate slide_id {rec.slide_id!r}")
            seen.add(rec.slide_id)
        self.site_index: dict[str, list[str]] = {}
        self.patient_index: dict[str, list[str]] = {}
        self.by_id: dict[str, SlideRecord] = {}
        for rec in self.records:
            self.site_index.setdefault(rec.anatomic_site, []).append(rec.slide_id)
            self.patient_index.setdefault(rec.patient_id, []).append(rec.slide_id)
            self.by_id[rec.slide_id] = rec

    def __len__(self):
        return len(self.records)


def _parse_row(row_num: int, row: dict) -> SlideRecord:
    token = (row["section_type"] or "").strip().lower()
    try:
        section = SectionType(token)
    except ValueError:
        raise ValueError(f"row {row_num}: unknown section_type {row['section_type']!r}") from None
    mpp_raw = row.get("mpp")
    mpp = DEFAULT_MPP if mpp_raw in (None, "") else float(mpp_raw)
    image_path = row.get("image_path") or None
    return SlideRecord(
        slide_id=row["slide_id"].strip(),
        patient_id=row["patient_id"].strip(),
        anatomic_site=row["anatomic_site"].strip(),
        subtype_code=row["subtype_code"].strip(),
        section_type=section,
        image_path=image_path,
        mpp=mpp,
    )


def ingest_catalog(source) -> Catalog:
    """Read a comma-delimited catalog from a path, file object, or text.

    Required header columns: slide_id, patient_id, anatomic_site,
    subtype_code, section_type, image_path. mpp is optional and defaults
    to 0.5 (20x).
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _ingest(fh)
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return _ingest(source)
    raise TypeError(f"unsupported catalog source: {type(source)!r}")


def ingest_catalog_text(text: str) -> Catalog:
    return _ingest(io.StringIO(text))


def _ingest(fh) -> Catalog:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        raise SchemaError("catalog has no header row")
    missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    records = [_parse_row(i, row) for i, row in enumerate(reader, start=2)]
    return Catalog(records)


def write_catalog(catalog: Catalog, path) -> None:
    """Serialize a catalog back to the CSV interchange format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for rec in catalog.records:
            writer.writerow(
                [
                    rec.slide_id,
                    rec.patient_id,
                    rec.anatomic_site,
                    rec.subtype_code,
                    rec.section_type.value,
                    rec.image_path or "",
                    repr(rec.mpp),
                ]
            )


def catalog_stats(catalog: Catalog) -> dict:
    """Per-subtype slide count, distinct patient count, and section split."""
    if not catalog.records:
        raise EmptyCatalog("cannot summarize an empty catalog")
    stats: dict[str, dict] = {}
    for rec in catalog.records:
        entry = stats.setdefault(
            rec.subtype_code,
            {"slides": 0, "patients": set(), "sections": {s.value: 0 for s in SectionType}},
        )
        entry["slides"] += 1
        entry["patients"].add(rec.patient_id)
        entry["sections"][rec.section_type.value] += 1
    return {
        code: {
            "slides": e["slides"],
            "patients": len(e["patients"]),
            "sections": e["sections"],
        }
        for code, e in sorted(stats.items())
    }
