"""Exception hierarchy shared by all modules."""


class SflowError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(SflowError, ValueError):
    """Input violates a documented precondition."""


class NumericalFailure(SflowError, ArithmeticError):
    """A numerical procedure could not certify or converge."""

    def __init__(self, message, lam=None):
        super().__init__(message)
        self.lam = lam


class DegenerateCrossing(NumericalFailure):
    """A crossing form turned out to be degenerate.

    The offending crossing record is attached as ``record``.
    """

    def __init__(self, message, record):
        super().__init__(message, lam=getattr(record, "lambda_star", None))
        self.record = record


class ContinuumOfCrossings(NumericalFailure):
    """Crossings fill a whole parameter interval instead of being isolated."""
