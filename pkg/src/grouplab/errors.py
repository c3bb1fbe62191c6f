"""Exception types shared across the package."""


class GroupLabError(Exception):
    """Base class for all errors raised by grouplab."""


class RankDeficient(GroupLabError, ArithmeticError):
    """A Gram-Schmidt residual fell below the rank tolerance."""


class Unsupported(GroupLabError, ValueError):
    """The requested operation is not available for this group family."""


class InvalidShape(GroupLabError, ValueError):
    """A partition or index set violates the constraints of its family."""


class NonIntegerResult(GroupLabError, ArithmeticError):
    """An exact formula that must produce an integer did not."""


class TooLarge(GroupLabError, ValueError):
    """Input exceeds an expansion size guard."""


class FieldMismatch(GroupLabError, TypeError):
    """Scalar fields of two operands disagree."""


class NotComfortable(GroupLabError, ValueError):
    """A monomial index is not (column) comfortable."""


class InsufficientSamples(GroupLabError, ValueError):
    """Too few Monte-Carlo samples for the requested estimate."""


class MeasureTooSmall(GroupLabError, ValueError):
    """A set is too small for rejection sampling at desk scale."""


class MultiplicityTooHigh(GroupLabError, ValueError):
    """A matrix entry appears more often than an estimator allows."""


class ConfigError(GroupLabError, ValueError):
    """Invalid run configuration."""
