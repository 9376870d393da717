"""Exception types shared across the package."""


class SubmaxError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(SubmaxError, ValueError):
    """Input data or arguments violate a documented precondition."""


class NumericalError(SubmaxError, ArithmeticError):
    """A numerical routine failed (degenerate variance, non-PSD matrix, ...)."""
