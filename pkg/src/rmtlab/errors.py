"""Exception hierarchy shared by every module."""


class RmtLabError(Exception):
    """Base class for all library errors."""


class InvalidParams(RmtLabError, ValueError):
    pass


class DimensionError(RmtLabError, ValueError):
    pass


class BadK(RmtLabError, ValueError):
    pass


class TooLarge(RmtLabError, ValueError):
    pass


class NotUnit(RmtLabError, ValueError):
    pass


class IndexOutOfRange(RmtLabError, IndexError):
    pass


class UnknownKind(RmtLabError, ValueError):
    pass


class UnboundedSpec(RmtLabError, ValueError):
    pass


class ConfigError(RmtLabError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericError(RmtLabError, ArithmeticError):
    """A numerical routine failed to meet its accuracy contract (CLI exit code 3)."""


class QuadratureError(NumericError):
    pass


class EigensolverError(NumericError):
    pass


class DecompositionFailed(NumericError):
    pass


class NotFound(NumericError):
    pass
