"""Homogeneous curves gamma_m, their generators L_m, and Q0 closure operations."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike
from scipy import linalg
from scipy.special import comb

from .errors import DimensionMismatch, InvalidDegree, VerificationMismatch
from .helical import (
    HelicalCR,
    Q0Curve,
    ambient_generator,
    check_orthogonal,
    decompose,
    eval_q0,
)
from .skewlin import SkewMatrix, imaginary_spectrum

logger = logging.getLogger(__name__)


def _binomial_roots(m: int) -> np.ndarray:
    return np.sqrt(comb(m, np.arange(m + 1), exact=False))


def gamma_m_eval(m: int, s: float) -> np.ndarray:
    """Component j is sqrt(C(m, j)) cos^{m-j}(s) sin^j(s)."""
    if m < 0:
        raise InvalidDegree(f"degree must be >= 0, got {m}")
    j = np.arange(m + 1)
    return _binomial_roots(m) * np.cos(s) ** (m - j) * np.sin(s) ** j


def gamma_m_samples(m: int, grid: ArrayLike) -> np.ndarray:
    return np.array([gamma_m_eval(m, s) for s in np.asarray(grid, dtype=float)])


def build_L_m(m: int) -> SkewMatrix:
    """Bidiagonal skew generator with D gamma_m = L_m gamma_m."""
    if m < 1:
        raise InvalidDegree(f"L_m needs m >= 1, got {m}")
    j = np.arange(m)
    sub = np.sqrt((j + 1.0) * (m - j))
    L = np.diag(sub, -1) - np.diag(sub, 1)
    return SkewMatrix(L)


@dataclass(frozen=True, eq=False)
class GammaM:
    """gamma_m together with its generator."""

    m: int
    L: SkewMatrix

    @classmethod
    def of_degree(cls, m: int) -> "GammaM":
        return cls(m, build_L_m(m))

    def __call__(self, s: float) -> np.ndarray:
        return gamma_m_eval(self.m, s)

    def as_q0(self) -> Q0Curve:
        """exp(L_m s) E_0 as a canonical Q0 curve."""
        e0 = np.zeros(self.m + 1)
        e0[0] = 1.0
        return decompose(self.L, e0)[1]


def expected_spectrum_L_m(m: int) -> np.ndarray:
    return np.array([m - 2 * j for j in range(m + 1)], dtype=float)


def spectrum_L_m(m: int) -> np.ndarray:
    """Imaginary parts of the eigenvalues of L_m, checked against {m - 2j}."""
    values = imaginary_spectrum(build_L_m(m))
    rounded = np.round(values)
    distance = float(np.abs(values - rounded).max())
    if distance > 1e-8 or not np.array_equal(rounded, expected_spectrum_L_m(m)):
        raise VerificationMismatch(f"spectrum of L_{m} is {values}, rounding distance {distance:.2e}")
    return values


def char_poly_L_m(m: int) -> Polynomial:
    """-x prod_{j=1}^{k} (x^2 + (2j)^2) for m = 2k, prod_{j=0}^{k} (x^2 + (2j+1)^2) for m = 2k+1."""
    if m < 1:
        raise InvalidDegree(f"L_m needs m >= 1, got {m}")
    k = m // 2
    if m % 2 == 0:
        p = Polynomial([0.0, -1.0])
        roots = [2 * j for j in range(1, k + 1)]
    else:
        p = Polynomial([1.0])
        roots = [2 * j + 1 for j in range(k + 1)]
    for r in roots:
        p = p * Polynomial([float(r * r), 0.0, 1.0])
    return p


# Homogeneous polynomial curves


def homogeneous_eval(H: ArrayLike, s: float) -> np.ndarray:
    """H(cos s, sin s); column k of H multiplies cos^{m-k} sin^k."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    m = H.shape[1] - 1
    k = np.arange(m + 1)
    return H @ (np.cos(s) ** (m - k) * np.sin(s) ** k)


def homogeneous_to_B(H: ArrayLike) -> np.ndarray:
    """B with H(cos s, sin s) = B gamma_m(s)."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    m = H.shape[1] - 1
    if m < 0:
        raise InvalidDegree("coefficient array has no columns")
    B = H / _binomial_roots(m)
    grid = np.linspace(0.0, 2 * np.pi, 20, endpoint=False)
    residual = max(
        float(np.abs(homogeneous_eval(H, s) - B @ gamma_m_eval(m, s)).max()) for s in grid
    )
    if residual > 1e-10:
        raise VerificationMismatch(f"homogeneous coefficients mismatch by {residual:.3e}")
    return B


@dataclass(frozen=True, eq=False)
class HomogeneousCurve:
    """s -> B gamma_m(s)."""

    degree: int
    B: np.ndarray

    @classmethod
    def from_polynomial(cls, H: ArrayLike) -> "HomogeneousCurve":
        B = homogeneous_to_B(H)
        return cls(B.shape[1] - 1, B)

    def __call__(self, s: float) -> np.ndarray:
        return self.B @ gamma_m_eval(self.degree, s)


@dataclass(frozen=True)
class Hyperplane:
    """{u : <normal, u> = offset} with unit normal."""

    normal: np.ndarray
    offset: float
    residual: float


def gamma_m_hyperplane_check(m: int, samples: int = 50) -> Optional[Hyperplane]:
    """Affine hyperplane containing the image of gamma_m (even m only)."""
    L = build_L_m(m)
    if m % 2:
        return None
    normal = L.spectral.kernel[:, 0].copy()
    if normal[0] < 0:
        normal = -normal
    offset = float(normal[0])
    grid = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    residual = float(np.abs(gamma_m_samples(m, grid) @ normal - offset).max())
    if residual > 1e-9:
        raise VerificationMismatch(f"gamma_{m} leaves its hyperplane by {residual:.3e}")
    return Hyperplane(normal, offset, residual)


def affine_span_gap(samples: ArrayLike) -> float:
    """Smallest singular value of [points, 1] / sqrt(N); near 0 iff in a hyperplane."""
    points = np.atleast_2d(np.asarray(samples, dtype=float))
    moment = np.column_stack([points, np.ones(len(points))]) / np.sqrt(len(points))
    return float(linalg.svdvals(moment).min())


# Closure operations on Q0


def postcompose_orthogonal(T: ArrayLike, c: Q0Curve) -> Q0Curve:
    """T o gamma, generated by T (A + 0) T^{-1} in ambient coordinates."""
    T = check_orthogonal(T)
    h = c.structure
    if T.shape[0] != h.d:
        raise DimensionMismatch(f"T is {T.shape[0]}-dimensional, curve lives in R^{h.d}")
    return Q0Curve(HelicalCR(h.A, h.w, T @ h.basis), c.v)


def juxtapose(theta: float, c1: Q0Curve, c2: Q0Curve) -> Q0Curve:
    """cos(theta) gamma_1 + sin(theta) gamma_2 in R^{d1 + d2}."""
    h1, h2 = c1.structure, c2.structure
    n1, n2 = 2 * h1.n, 2 * h2.n
    d1, d2 = h1.d, h2.d
    # split coordinates (h1, h2, w1, w2) -> ambient (gamma_1, gamma_2)
    B = np.zeros((d1 + d2, d1 + d2))
    B[:d1, :n1] = h1.basis[:, :n1]
    B[d1:, n1 : n1 + n2] = h2.basis[:, :n2]
    B[:d1, n1 + n2 : n1 + n2 + h1.p] = h1.basis[:, n1:]
    B[d1:, n1 + n2 + h1.p :] = h2.basis[:, n2:]
    ct, st = np.cos(theta), np.sin(theta)
    structure = HelicalCR(
        SkewMatrix(linalg.block_diag(h1.A.array, h2.A.array)),
        np.concatenate([ct * h1.w, st * h2.w]),
        B,
    )
    return Q0Curve(structure, np.concatenate([ct * c1.v, st * c2.v]))


def tensor_eval(c1: Q0Curve, c2: Q0Curve, s: float) -> np.ndarray:
    """gamma_1(s) (x) gamma_2(s), row-major."""
    return np.kron(eval_q0(c1, s), eval_q0(c2, s))


def tensor_generator(c1: Q0Curve, c2: Q0Curve) -> np.ndarray:
    """C_1 (x) I + I (x) C_2 on R^{d1 d2}."""
    C1, C2 = ambient_generator(c1), ambient_generator(c2)
    return np.kron(C1, np.eye(c2.d)) + np.kron(np.eye(c1.d), C2)


def tensor_curve(c1: Q0Curve, c2: Q0Curve) -> Q0Curve:
    """The tensor product as a canonical Q0 curve."""
    generator = SkewMatrix.trusted(tensor_generator(c1, c2))
    return decompose(generator, tensor_eval(c1, c2, 0.0))[1]
