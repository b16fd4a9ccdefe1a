"""Exception hierarchy. Every domain error derives from :class:`TSDPError`."""


class TSDPError(Exception):
    """Base class for all domain errors."""


class DimensionMismatch(TSDPError, ValueError):
    pass


class NegativeEntry(TSDPError, ValueError):
    pass


class RowSumViolation(TSDPError, ValueError):
    pass


class NotIrreducible(TSDPError, ValueError):
    pass


class NotStationary(TSDPError, ValueError):
    pass


class OutOfRange(TSDPError, ValueError):
    pass


class EmptySupport(TSDPError, ValueError):
    pass


class NonPositiveTarget(TSDPError, ValueError):
    pass


class BadArity(TSDPError, ValueError):
    pass


class ParseError(TSDPError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyRow(TSDPError, ValueError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"row {row + 1} has no outgoing edges")


class Reducible(TSDPError, ValueError):
    pass


class Infeasible(TSDPError):
    """The LP (or phase 1 of it) has no feasible point."""


class Unbounded(TSDPError):
    """The LP is unbounded; impossible for valid TSDP inputs."""


class PivotLimit(TSDPError):
    """The simplex exceeded its pivot budget."""


class BackendError(TSDPError):
    """A backend returned a solution that violates its own contract."""


__all__ = [
    "TSDPError", "DimensionMismatch", "NegativeEntry", "RowSumViolation",
    "NotIrreducible", "NotStationary", "OutOfRange", "EmptySupport", "NonPositiveTarget",
    "BadArity", "ParseError", "EmptyRow", "Reducible", "Infeasible", "Unbounded",
    "PivotLimit", "BackendError",
]
