"""Exception types shared across the package."""


class BobSearchError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(BobSearchError):
    """Input table is missing a required column."""


class DuplicateId(BobSearchError):
    """A slide id occurs more than once in a catalog."""


class EmptyCatalog(BobSearchError):
    """Operation requires a non-empty catalog."""


class EmptyImage(BobSearchError):
    """Operation requires a non-empty raster."""


class EmptyInput(BobSearchError):
    """Operation requires a non-empty input collection."""


class DimensionError(BobSearchError):
    """Vector / barcode dimensions are inconsistent."""


class MissingSlide(BobSearchError):
    """A catalog slide has no corresponding data."""


class NotFound(BobSearchError):
    """Requested slide id is not present in the index."""


class FormatError(BobSearchError):
    """Index file has wrong magic bytes or unsupported version."""


class CorruptIndex(BobSearchError):
    """Index file is truncated or fails its checksum."""


class DivisionError(BobSearchError):
    """Rescaling denominator is zero."""


class UndefinedCorrelation(BobSearchError):
    """Correlation is undefined for constant input."""


class DegenerateSequence(BobSearchError):
    """Trend test has no untied pairs to work with."""
