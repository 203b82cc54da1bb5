"""Exception types raised across the package."""


class ClobsError(Exception):
    """Base class for all package errors."""


class InvalidArgument(ClobsError, ValueError):
    pass


class UndefinedValue(ClobsError, ArithmeticError):
    """A ratio whose denominator vanishes (e.g. zero second moment)."""


class ZeroMeanViolation(ClobsError, ValueError):
    """The operator has a non-zero time-averaged expectation value."""


class ResourceExhausted(ClobsError, RuntimeError):
    pass


class IllConditionedBasis(ClobsError, ArithmeticError):
    """The overlap matrix cannot be factored even after deflation.

    ``directions`` holds the offending near-null coefficient vectors
    as rows.
    """

    def __init__(self, message, directions=None):
        super().__init__(message)
        self.directions = directions


class UnsupportedConfiguration(ClobsError, ValueError):
    pass


class ReportWriteError(ClobsError, OSError):
    pass
