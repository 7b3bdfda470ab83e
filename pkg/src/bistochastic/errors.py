"""Exception hierarchy shared by every module."""


class BistochasticError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(BistochasticError, ValueError):
    """Malformed matrices, wrong dimensions, out-of-range parameters."""


class ChannelError(InvalidInput):
    """A Kraus list that fails a structural requirement.

    ``residual`` carries the offending numerical residual when there is one.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotBistochastic(ChannelError):
    pass


class NotErgodic(BistochasticError):
    pass


class InvariantViolation(BistochasticError):
    """A computed quantity left its mathematically allowed range."""


class OrbitDrift(InvariantViolation):
    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class DecompositionError(BistochasticError):
    pass
