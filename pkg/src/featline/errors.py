"""Exception types shared across the solver core and the model layers."""


class FeatlineError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDomainError(FeatlineError):
    """A variable was created with no values."""


class ArityMismatchError(FeatlineError):
    """A constraint was built with inconsistent shapes (e.g. table row width)."""


class IntegerOverflowError(FeatlineError):
    """A bound computation left the signed 64-bit range."""


class NotReifiableError(FeatlineError):
    """The requested formula cannot appear under a truth variable."""


class UnknownLevelError(FeatlineError):
    """pop_to targeted a level that is not currently open."""


class CompileError(FeatlineError):
    """Lowering was attempted on a model that fails validation."""


class ExprTypeError(FeatlineError):
    """An expression mixes boolean and integer positions or misuses a name."""


class UnknownNameError(FeatlineError):
    """A feature, attribute, or code name is not declared in the model."""


class VoidModelError(FeatlineError):
    """The analysis needs at least one valid configuration."""


class UnknownGoalError(FeatlineError):
    """The named optimization goal is not declared in the model."""


class OutOfRangeError(FeatlineError):
    """An undo count or similar argument is outside its allowed range."""


class UnsatisfiableError(FeatlineError):
    """Optimization ran to completion without finding any solution."""
