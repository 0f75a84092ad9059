"""Exception types shared across the package."""


class SilvarError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SilvarError, ValueError):
    """Raised when inputs violate a documented precondition or invariant."""


class NumericalError(SilvarError, RuntimeError):
    """Raised when a numerical routine fails (divergence, SVD breakdown, ...)."""
