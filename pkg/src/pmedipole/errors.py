class PMEError(Exception):
    """Base class for all errors raised by pmedipole."""


class InvalidParameter(PMEError, ValueError):
    pass


class DomainError(PMEError, ValueError):
    """An argument lies outside the set where an operation is defined."""


class NumericError(PMEError, ArithmeticError):
    pass


class ConfigError(PMEError, ValueError):
    pass


class ResizeError(PMEError):
    """The support of the numerical solution reached the far end of the grid."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StepLimitError(PMEError, RuntimeError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
