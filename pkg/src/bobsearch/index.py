"""Archive-wide BoB index: build, persist, load, and query with horizontal /
vertical scoping and leave-one-patient-out exclusion."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from bobsearch.barcode import Barcode, BunchOfBarcodes, bob_distance
from bobsearch.corpus import Catalog, SectionType
from bobsearch.errors import CorruptIndex, DimensionError, FormatError, MissingSlide, NotFound

MAGIC = b"BOBIDX1\0"
VERSION = 1

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass
class SlideIndexEntry:
    slide_id: str
    patient_id: str
    anatomic_site: str
    subtype_code: str
    section_type: SectionType
    bunch: BunchOfBarcodes


@dataclass(frozen=True)
class SearchHit:
    slide_id: str
    subtype_code: str
    patient_id: str
    distance: float


class Index:
    """Immutable archive of per-slide bunches; safe for concurrent reads."""

    def __init__(self, entries):
        self.entries = list(entries)
        widths = {e.bunch.nbits for e in self.entries}
        if len(widths) > 1:
            raise DimensionError(f"mixed barcode widths in index: {sorted(widths)}")
        self.width = widths.pop() if widths else 0
        self.by_id = {e.slide_id: e for e in self.entries}

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, Index):
            return NotImplemented
        if len(self) != len(other) or self.width != other.width:
            return False
        for a, b in zip(self.entries, other.entries):
            if (
                a.slide_id != b.slide_id
                or a.patient_id != b.patient_id
                or a.anatomic_site != b.anatomic_site
                or a.subtype_code != b.subtype_code
                or a.section_type != b.section_type
                or a.bunch != b.bunch
            ):
                return False
        return True


def build_index(catalog: Catalog, bunches: dict[str, BunchOfBarcodes]) -> Index:
    """One entry per catalog slide, in catalog order."""
    entries = []
    width = None
    for rec in catalog.records:
        bunch = bunches.get(rec.slide_id)
        if bunch is None:
            raise MissingSlide(f"no bunch for slide {rec.slide_id!r}")
        if width is None:
            width = bunch.nbits
        elif bunch.nbits != width:
            raise DimensionError(
                f"slide {rec.slide_id!r}: barcode width {bunch.nbits} != index width {width}"
            )
        entries.append(
            SlideIndexEntry(
                slide_id=rec.slide_id,
                patient_id=rec.patient_id,
                anatomic_site=rec.anatomic_site,
                subtype_code=rec.subtype_code,
                section_type=rec.section_type,
                bunch=bunch,
            )
        )
    return Index(entries)


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptIndex("index file truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def save_index(index: Index, path) -> None:
    """Write the bit-exact binary index format (little-endian, trailing
    64-bit checksum of all preceding bytes)."""
    parts = [MAGIC, struct.pack("<III", VERSION, index.width, len(index.entries))]
    for e in index.entries:
        parts.append(_pack_str(e.slide_id))
        parts.append(_pack_str(e.patient_id))
        parts.append(_pack_str(e.anatomic_site))
        parts.append(_pack_str(e.subtype_code))
        parts.append(_pack_str(e.section_type.value))
        parts.append(struct.pack("<I", len(e.bunch)))
        for bc in e.bunch.barcodes:
            origin = bc.origin or (e.slide_id, 0, 0)
            parts.append(struct.pack("<qq", int(origin[1]), int(origin[2])))
            parts.append(bc.words.astype("<u8").tobytes())
    body = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(_checksum(body))


def load_index(path) -> Index:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC):
        raise CorruptIndex("index file too short")
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic bytes")
    if len(data) < len(MAGIC) + 12 + 8:
        raise CorruptIndex("index file truncated")
    body, stored = data[:-8], data[-8:]
    if _checksum(body) != stored:
        raise CorruptIndex("checksum mismatch")
    reader = _Reader(body, offset=len(MAGIC))
    version = reader.u32()
    if version != VERSION:
        raise FormatError(f"unsupported index version {version}")
    width = reader.u32()
    count = reader.u32()
    nwords = (width + 63) // 64
    entries = []
    for _ in range(count):
        slide_id = reader.string()
        patient_id = reader.string()
        site = reader.string()
        subtype = reader.string()
        try:
            section = SectionType(reader.string())
        except ValueError as exc:
            raise CorruptIndex(f"slide {slide_id!r}: bad section type") from exc
        n_barcodes = reader.u32()
        barcodes = []
        for _ in range(n_barcodes):
            x = reader.i64()
            y = reader.i64()
            words = np.frombuffer(reader.take(nwords * 8), dtype="<u8").astype(np.uint64)
            barcodes.append(Barcode(words, width, origin=(slide_id, x, y)))
        entries.append(
            SlideIndexEntry(
                slide_id=slide_id,
                patient_id=patient_id,
                anatomic_site=site,
                subtype_code=subtype,
                section_type=section,
                bunch=BunchOfBarcodes(slide_id, barcodes),
            )
        )
    if reader.pos != len(body):
        raise CorruptIndex("trailing bytes after last entry")
    return Index(entries)


def rank_candidates(query: BunchOfBarcodes, candidates, n: int) -> list[SearchHit]:
    """Score candidate entries against a query bunch; top n by ascending
    distance, ties broken by ascending slide_id."""
    scored = sorted(
        (
            (bob_distance(query, e.bunch), e.slide_id, e)
            for e in candidates
        ),
        key=lambda item: (item[0], item[1]),
    )
    return [
        SearchHit(
            slide_id=e.slide_id,
            subtype_code=e.subtype_code,
            patient_id=e.patient_id,
            distance=dist,
        )
        for dist, _, e in scored[:n]
    ]


def search(index: Index, query_slide_id: str, scope: str = HORIZONTAL, n: int = 10, site: str | None = None) -> list[SearchHit]:
    """Leave-one-patient-out nearest-slide search.

    Horizontal scope scans the whole archive; vertical scope restricts to
    one anatomic site (the query's own site unless given). No distance
    threshold is applied: the result is the full top-n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    entry = index.by_id.get(query_slide_id)
    if entry is None:
        raise NotFound(f"slide {query_slide_id!r} not in index")
    candidates = [e for e in index.entries if e.patient_id != entry.patient_id]
    if scope == VERTICAL:
        target_site = site if site is not None else entry.anatomic_site
        candidates = [e for e in candidates if e.anatomic_site == target_site]
    elif scope != HORIZONTAL:
        raise ValueError(f"unknown scope {scope!r}")
    return rank_candidates(entry.bunch, candidates, n)


def pairwise_distances(index: Index, slide_ids) -> np.ndarray:
    """M[i][j] = bunch distance from slide i to slide j; zero diagonal."""
    bunches = []
    for sid in slide_ids:
        entry = index.by_id.get(sid)
        if entry is None:
            raise NotFound(f"slide {sid!r} not in index")
        bunches.append(entry.bunch)
    m = len(bunches)
    out = np.zeros((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(m):
            if i != j:
                out[i, j] = bob_distance(bunches[i], bunches[j])
    return out
