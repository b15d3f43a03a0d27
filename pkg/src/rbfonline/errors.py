"""Exception hierarchy shared by every module."""


class RbfOnlineError(Exception):
    """Base class for all package errors."""


class ConfigError(RbfOnlineError, ValueError):
    """Invalid configuration value or parameter."""


class InputFormatError(RbfOnlineError, ValueError):
    """Unparseable input file content."""


class ValidationError(RbfOnlineError, ValueError):
    """Data violates a structural invariant (ordering, positivity, ...)."""


class DomainError(RbfOnlineError, ValueError):
    """Value outside the mathematical domain of an operation."""


class DataError(RbfOnlineError, ValueError):
    """Non-finite or otherwise unusable observation."""


class ShapeError(RbfOnlineError, ValueError):
    """Array dimensions do not match."""


class SizingError(RbfOnlineError, ValueError):
    """Not enough rows for the requested model size."""


class SelectionError(RbfOnlineError, ValueError):
    """Feature selection cannot run on the given target."""


class SolverError(RbfOnlineError, ArithmeticError):
    """Linear system could not be solved."""


class ProtocolError(RbfOnlineError, RuntimeError):
    """Streaming protocol misuse (unknown label, empty history, ...)."""
