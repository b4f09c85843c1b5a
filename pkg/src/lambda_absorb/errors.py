"""Exception hierarchy shared by all modules."""


class LambdaAbsorbError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(LambdaAbsorbError, ValueError):
    """Unknown labels, invalid parameters, malformed configuration."""


class DimensionMismatchError(LambdaAbsorbError, ValueError):
    """Operands live on incompatible Hilbert spaces."""


class DegenerateStateError(LambdaAbsorbError, ValueError):
    """Attempt to normalize a (near-)zero state vector."""


class IntegratorError(LambdaAbsorbError, RuntimeError):
    """Time integration failed (step too large, trace drift, ...)."""


class NumericalInstabilityError(IntegratorError):
    """Non-finite amplitudes appeared during integration."""


class JumpLogicError(LambdaAbsorbError, RuntimeError):
    """A jump was triggered although no channel carries any weight."""
