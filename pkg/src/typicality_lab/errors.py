"""Exception types raised across the package."""


class TypicalityError(Exception):
    """Base class for all errors raised by typicality_lab."""


class InvalidDimensionError(TypicalityError, ValueError):
    pass


class DimensionMismatchError(TypicalityError, ValueError):
    pass


class DegenerateSamplingError(TypicalityError, RuntimeError):
    pass


class SingularDeformationError(TypicalityError, ValueError):
    pass


class OutOfRangeError(TypicalityError, ValueError):
    pass


class NumericError(TypicalityError, ArithmeticError):
    pass


class ResourceLimitError(TypicalityError, ValueError):
    pass


class UnsupportedOrderError(TypicalityError, ValueError):
    pass


class DomainError(TypicalityError, ValueError):
    pass


class ConfigError(TypicalityError, ValueError):
    pass
