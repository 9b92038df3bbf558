"""Exception types shared across the package."""


class QvelabError(Exception):
    """Base class for all qvelab errors."""


class ExactTooLarge(QvelabError):
    """Exact enumeration requested beyond the supported part count."""


class PartMeasureMismatch(QvelabError):
    """Operation requires equal (or matching) part measures."""


class AsymmetricInput(QvelabError):
    """A symmetric matrix was expected."""


class NotConverged(QvelabError):
    """Iterative solver failed to reach tolerance.

    Carries the list of offending points in ``args[1]`` when applicable.
    """

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = list(points) if points is not None else []


class GridTooNarrow(QvelabError):
    """Spectral grid captured less than the required mass."""


class PreconditionViolated(QvelabError):
    """Input outside the admissible region of the operation."""


class KTooLarge(QvelabError):
    """Tree enumeration requested beyond the supported edge count."""


class PartitionMismatch(QvelabError):
    """Kernels were expected to share a partition."""


class NoConvergence(QvelabError):
    """Root bracketing / inversion failed (indicates a numeric bug)."""


class NegativeInput(QvelabError):
    """Argument must be nonnegative."""


class DomainError(QvelabError):
    """Argument outside the function's domain."""


class KernelNotPositive(QvelabError):
    """Tilting kernel must have strictly positive values."""


class DivisibilityError(QvelabError):
    """Block count must divide the matrix dimension."""


class NoFeasibleKernel(QvelabError):
    """No member of the search family met the distance tolerance."""


class SolveFailure(QvelabError):
    """Dense linear solve failed."""


class EigFailure(QvelabError):
    """Symmetric eigendecomposition failed."""
