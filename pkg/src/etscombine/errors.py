"""Exception types shared across the package."""


class EtsCombineError(Exception):
    """Base class for all package-specific errors."""


class CorpusFormatError(EtsCombineError):
    """Raised when a corpus file cannot be parsed into valid series."""


class SeriesTooShortError(EtsCombineError):
    """Raised when a series cannot be split for the requested horizon."""


class UnfittableModelError(EtsCombineError):
    """Raised when no optimizer start produces a finite likelihood."""


class NoCandidateModelsError(EtsCombineError):
    """Raised when every model in the pool is unavailable for a series."""


class NoUsableSeriesError(EtsCombineError):
    """Raised when a table build finds no series with any usable model."""


class TableInvariantError(EtsCombineError):
    """Raised when a contingency table violates its invariants."""


class TablePoolMismatchError(EtsCombineError):
    """Raised when a stored table does not match the requested model pool."""


class DegenerateTableError(EtsCombineError):
    """Raised when a table row/column carries no mass for the selected model."""


class UndefinedScaleError(EtsCombineError):
    """Raised when the seasonal-naive scale of a series is zero."""
