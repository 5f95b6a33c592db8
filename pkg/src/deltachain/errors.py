"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class DeltaChainError(Exception):
    """Base class for all errors raised by deltachain."""

    exit_code = 1


class ConfigError(DeltaChainError, ValueError):
    exit_code = 2


class ParameterError(DeltaChainError, ValueError):
    exit_code = 4


class DimensionError(ParameterError):
    pass


class PreconditionError(DeltaChainError, ValueError):
    exit_code = 4


class RegimeError(PreconditionError):
    """Raised when a closed-form path is asked for an energy on a channel threshold."""


class InsufficientData(PreconditionError):
    pass


class NumericalBreakdown(DeltaChainError, ArithmeticError):
    exit_code = 3
