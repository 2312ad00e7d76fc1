"""Exception hierarchy shared by all stabkit modules."""


class StabkitError(Exception):
    """Base class for every error raised by stabkit."""


class MatrixParseError(StabkitError, ValueError):
    """Input data could not be read as a finite square matrix."""


class DimensionError(StabkitError, ValueError):
    pass


class UnstableMatrixError(StabkitError, ValueError):
    """A measure defined for stable equilibria was requested for alpha(A) >= 0."""


class MarginallyStableError(UnstableMatrixError):
    """alpha(A) lies within tolerance of zero; the measures diverge there."""


class SingularMatrixError(StabkitError, ValueError):
    pass


class DefectiveMatrixError(StabkitError, ValueError):
    """Eigenvector basis too ill-conditioned for an eigenpair-based check."""


class NumericalError(StabkitError, ArithmeticError):
    """An eigen/singular value iteration or linear solve failed."""


class InvariantViolation(StabkitError, AssertionError):
    """A computed result broke one of the identities it must satisfy."""
