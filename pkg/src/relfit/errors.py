"""Exception hierarchy shared across the package.

``ParseError`` and ``ValidationError`` (with its subclasses) signal bad
inputs; ``NonConvergence`` signals a solver that hit its iteration cap.
The CLI maps these to exit codes 1 and 2 respectively.
"""


class RelfitError(Exception):
    """Base class for every error raised by this package."""


class ParseError(RelfitError):
    """A model or data file could not be parsed."""


class ValidationError(RelfitError):
    """An input violates a documented precondition."""


class DuplicateSubset(ValidationError):
    """Two effect subsets contain exactly the same cells."""


class EmptyColumn(ValidationError):
    """Some cell belongs to no effect subset."""


class RankDeficient(ValidationError):
    """The design rows are linearly dependent."""


class IndexOutOfRange(ValidationError):
    """A cell index lies outside the valid range."""


class InvalidArgument(ValidationError):
    """An argument value is outside its documented domain."""


class DimensionMismatch(ValidationError):
    """Vector or matrix dimensions do not agree."""


class ZeroTotal(ValidationError):
    """Multinomial fitting needs at least one observed count."""


class NonPositiveFitted(ValidationError):
    """Fitted values must be strictly positive."""


class NonPositiveParameter(ValidationError):
    """Cell parameters must be strictly positive."""


class NotInModel(ValidationError):
    """The parameter vector does not satisfy the model constraints."""


class NotNormalized(ValidationError):
    """A probability vector must sum to one."""


class NoOverallEffect(ValidationError):
    """The operation requires a model with the overall effect."""


class EmptySample(ValidationError):
    """The sample must contain at least one value."""


class NonConvergence(RelfitError):
    """The solver stopped at its iteration cap above tolerance."""

    def __init__(self, message: str, iterations: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
