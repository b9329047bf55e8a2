"""Exception hierarchy shared across the package."""


class DpSparseError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DpSparseError, ValueError):
    """Raised when data passed to an operation violates its preconditions."""


class InvalidConfigError(DpSparseError, ValueError):
    """Raised when a configuration object violates its invariants."""


class InvalidParameterError(DpSparseError, ValueError):
    """Raised when a scalar parameter is out of range."""


class NumericalFailureError(DpSparseError, RuntimeError):
    """Raised when an iterate becomes non-finite; carries the iteration index."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class CsvParseError(DpSparseError, ValueError):
    """Raised on malformed dataset CSV; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line
