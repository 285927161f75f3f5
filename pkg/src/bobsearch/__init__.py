"""Content-based slide search via bunches of MinMax barcodes."""

__version__ = "0.1.0"

from bobsearch.barcode import Barcode, BunchOfBarcodes, bob_distance, hamming, minmax_barcode
from bobsearch.corpus import Catalog, SectionType, SlideRecord, catalog_stats, ingest_catalog
from bobsearch.index import Index, SearchHit, build_index, load_index, save_index, search

__all__ = [
    "Barcode",
    "BunchOfBarcodes",
    "Catalog",
    "Index",
    "SearchHit",
    "SectionType",
    "SlideRecord",
    "bob_distance",
    "build_index",
    "catalog_stats",
    "hamming",
    "ingest_catalog",
    "load_index",
    "minmax_barcode",
    "save_index",
    "search",
]
