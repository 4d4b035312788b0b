"""Exception taxonomy shared by all modules."""


class EllipticalWishartError(Exception):
    """Base class for all errors raised by this package."""


class NumericInputError(EllipticalWishartError, ValueError):
    """An input array contains NaN or infinite entries."""


class RangeError(EllipticalWishartError, OverflowError):
    """A result exceeds the representable floating-point range."""


class SingularityError(EllipticalWishartError, ValueError):
    """A matrix required to be positive definite is (numerically) singular."""


class ParameterError(EllipticalWishartError, ValueError):
    """A scalar parameter or option is outside its valid domain."""


class ModelError(EllipticalWishartError, ValueError):
    """A statistical model violates one of its validity conditions."""


class DivergenceError(EllipticalWishartError, ArithmeticError):
    """An iterative solver produced non-finite values."""


class TrainingError(EllipticalWishartError, ValueError):
    """A supervised training set is unusable (e.g. an empty class)."""
