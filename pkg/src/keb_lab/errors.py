"""Exception hierarchy shared by all keb_lab modules."""


class KebError(Exception):
    """Base class for keb_lab errors."""


class DimensionError(KebError, ValueError):
    """Shapes or factor dimensions are inconsistent."""


class NotHermitianError(KebError, ValueError):
    """A matrix expected to be Hermitian deviates by more than eps_herm."""


class NumericGateError(KebError, ArithmeticError):
    """A factorization failed its reconstruction residual check."""


class InvalidParameterError(KebError, ValueError):
    """A family or operation parameter is outside its admissible range."""


class LimitExceededError(KebError):
    """A requested dimension exceeds the configured maximum."""


class NotCompletelyPositiveError(KebError, ValueError):
    """A Kraus form was requested for a map whose Choi matrix is not PSD."""


class SpecError(KebError, ValueError):
    """Malformed input file (JSON syntax or schema)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column
