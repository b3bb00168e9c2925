"""Exception types shared across the solver."""


class HpsError(Exception):
    """Base class for solver errors."""


class ConfigurationError(HpsError, ValueError):
    """Invalid problem or partition configuration."""


class UsageError(HpsError, ValueError):
    """Arguments inconsistent with the objects they are applied to."""


class NumericError(HpsError, ArithmeticError):
    """A factorization or pivot that should be definite was not."""


class ResourceGuardError(HpsError):
    """A configuration would exceed the configured memory budget."""
