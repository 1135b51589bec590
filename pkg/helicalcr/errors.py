"""Error types."""

from typing import Optional


class HelicalError(Exception):
    """Base class for all library errors."""


class DomainError(HelicalError, ValueError):
    """Input violates a structural precondition."""


class NumericalError(HelicalError, ArithmeticError):
    """A numerical procedure failed to meet its tolerance."""


# Matrices


class NotFinite(DomainError):
    """Entries contain NaN or infinity."""


class NotSquare(DomainError):
    """Matrix is not square."""


class NotSkew(DomainError):
    """Matrix fails the skew-symmetry check."""

    def __init__(self, deviation: float, tolerance: float):
        self.deviation = deviation
        self.tolerance = tolerance
        super().__init__(
            f"max |A + A^T| entry is {deviation:.3e}, tolerance {tolerance:.3e}"
        )


class ZeroMatrix(DomainError):
    """Matrix has an empty coimage."""


class DimensionMismatch(DomainError):
    """Operand dimensions do not agree."""


class InvalidDegree(DomainError):
    """Degree or order outside the supported range."""


class NotOrthogonal(DomainError):
    """Matrix is not orthogonal within ortho_tol."""


class NotInvertible(DomainError):
    """Skew generator of a helical structure has a kernel."""


# Curves


class DegenerateHorizontal(DomainError):
    """Curve has no horizontal component."""


class InsufficientSamples(DomainError):
    """Too few or repeated sample parameters."""


class AffineCurve(DomainError):
    """Q1 curve with v = 0."""


# Algebras and correspondences


class EmptyAlgebra(DomainError):
    """No structure matrices given."""


class DependentStructureMatrices(DomainError):
    """Structure matrices are linearly dependent."""


class TooManyVerticals(DomainError):
    """More structure matrices than skew directions."""


class NotCompletelyNontrivial(DomainError):
    """Helical structure needs n > 0 and p > 0."""


class NotContact(DomainError):
    """Algebra is not of contact type (p != 1)."""


class ZeroStructureMatrix(DomainError):
    """A structure matrix vanishes."""


class MismatchedHorizontalSpaces(DomainError):
    """Curves of a tuple do not share one horizontal space."""


class DependentVerticals(DomainError):
    """Vertical directions of a tuple are linearly dependent."""


class BasepointMismatch(DomainError):
    """Lift basepoint does not project to the curve start."""


class NotHorizontal(DomainError):
    """Curve velocity leaves the horizontal distribution."""


# Numerical failures


class EigenFailure(NumericalError):
    """Symmetric eigenproblem did not produce a usable basis."""


class FitFailed(NumericalError):
    """Sampled curve could not be reproduced within fit_tol."""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        super().__init__(message)


class Inconclusive(NumericalError):
    """Frequency ratio too close to call rational or irrational."""

    def __init__(self, ratio: float, denominator: int, message: str):
        self.ratio = ratio
        self.denominator = denominator
        super().__init__(message)


class StepSizeUnderflow(NumericalError):
    """Adaptive integrator step dropped below the minimum."""


class VerificationMismatch(NumericalError):
    """A built-in consistency check exceeded its tolerance."""


class SingularATau(UserWarning):
    """A_tau is nonzero but singular; solved by coimage/kernel split."""


class UnnormalizedTau(UserWarning):
    """Contact geodesic with tau0 != 1; horizontal projections differ from the marked curve."""
