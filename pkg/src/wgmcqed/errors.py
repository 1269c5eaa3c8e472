"""Exception hierarchy shared by all modules."""


class CQEDError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(CQEDError, ValueError):
    pass


class LayoutMismatchError(CQEDError, ValueError):
    pass


class ParameterError(CQEDError, ValueError):
    """A physical parameter violates its domain or an invariant."""


class DegenerateCouplingError(CQEDError, ZeroDivisionError):
    pass


class NonUniqueSteadyStateError(CQEDError):
    pass


class ConvergenceError(CQEDError):
    pass


class StepSizeError(CQEDError):
    pass


class InvalidStateError(CQEDError):
    """A density matrix failed its Hermiticity, trace or positivity check."""


class ConfigError(CQEDError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
