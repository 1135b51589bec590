"""Step-two stratified Lie algebras and their groups in exponential coordinates.

An algebra of type (m, p) is given by p skew structure matrices C^a on R^m.
Frame fields are X_i = d/dx_i + 1/2 sum_j c_ij^a x_j d/dt_a, and the product
t = t_P + t_Q + 1/2 x_Q^T C^a x_P is the one that makes them left-invariant.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from .config import get_tolerances
from .errors import (
    AffineCurve,
    DependentStructureMatrices,
    DependentVerticals,
    DimensionMismatch,
    EmptyAlgebra,
    InvalidDegree,
    MismatchedHorizontalSpaces,
    NotCompletelyNontrivial,
    NotContact,
    NotSquare,
    TooManyVerticals,
    ZeroMatrix,
    ZeroStructureMatrix,
)
from .helical import HelicalCR, Q1Curve, as_vector
from .skewlin import J, SkewMatrix, as_matrix, restrict_to_coimage, validate_skew

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StratifiedAlgebra2:
    """Structure matrices C of shape (p, m, m)."""

    C: np.ndarray

    @property
    def m(self) -> int:
        return self.C.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def structure(self, alpha: int) -> SkewMatrix:
        return SkewMatrix(self.C[alpha])

    def __repr__(self) -> str:
        return f"StratifiedAlgebra2(m={self.m}, p={self.p})"


@dataclass(frozen=True, eq=False)
class CarnotPoint:
    """Point (x; t) in exponential coordinates."""

    x: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        object.__setattr__(self, "t", as_vector(self.t))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.t])


@dataclass(frozen=True, eq=False)
class GeodesicIVP:
    """Initial position (x0, t0) and momentum (xi0, tau0)."""

    x0: np.ndarray
    t0: np.ndarray
    xi0: np.ndarray
    tau0: np.ndarray

    def __post_init__(self):
        for name in ("x0", "t0", "xi0", "tau0"):
            object.__setattr__(self, name, as_vector(getattr(self, name)))

    def check(self, g: StratifiedAlgebra2) -> "GeodesicIVP":
        if len(self.x0) != g.m or len(self.xi0) != g.m:
            raise DimensionMismatch(f"horizontal data must have length {g.m}")
        if len(self.t0) != g.p or len(self.tau0) != g.p:
            raise DimensionMismatch(f"vertical data must have length {g.p}")
        return self


@dataclass(frozen=True, eq=False)
class ContactEmbedding:
    """Where a contact algebra sits inside the ambient space of a helical structure."""

    axis: np.ndarray  # w / |w| in R^p
    w: np.ndarray
    horizontal: np.ndarray  # d x 2n
    vertical: np.ndarray  # ambient direction of w


@dataclass(frozen=True, eq=False)
class AssembledTuple:
    algebra: StratifiedAlgebra2
    ivps: List[GeodesicIVP]
    vertical_basis: np.ndarray  # columns w_a


def _parallel_pair(stack: np.ndarray, tol: float) -> bool:
    for a, b in combinations(stack, 2):
        sv = linalg.svdvals(np.vstack([a, b]))
        if sv[1] <= tol * max(1.0, sv[0]):
            return True
    return False


def new_algebra(C: Sequence[ArrayLike]) -> StratifiedAlgebra2:
    """Validate structure matrices and build the algebra."""
    if len(C) == 0:
        raise EmptyAlgebra("at least one structure matrix is required")
    mats = [as_matrix(c) for c in C]
    shape = mats[0].shape
    if shape[0] != shape[1]:
        raise NotSquare(f"structure matrix of shape {shape}")
    if any(mat.shape != shape for mat in mats):
        raise DimensionMismatch("structure matrices differ in size")
    stack = np.array([validate_skew(mat).array for mat in mats])

    tol = get_tolerances().dep_tol
    p, m = stack.shape[0], shape[0]
    flat = stack.reshape(p, -1)
    sv = linalg.svdvals(flat)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    if rank < p:
        skew_dim = m * (m - 1) // 2
        if p > skew_dim and rank == skew_dim and not _parallel_pair(flat, tol):
            raise TooManyVerticals(f"p={p} exceeds m(m-1)/2={skew_dim}")
        raise DependentStructureMatrices(
            f"structure matrices span only {rank} of {p} directions (smallest singular value {sv[-1]:.3e})"
        )
    return StratifiedAlgebra2(stack)


def heisenberg(n: int) -> StratifiedAlgebra2:
    """C^1 = blockdiag(J, ..., J) on R^{2n}."""
    if n < 1:
        raise InvalidDegree(f"Heisenberg group needs n >= 1, got {n}")
    return new_algebra([linalg.block_diag(*([J] * n))])


def free_nilpotent(m: int) -> StratifiedAlgebra2:
    """E_ij - E_ji for i < j in lexicographic order."""
    if m < 2:
        raise InvalidDegree(f"free step-two algebra needs m >= 2, got {m}")
    mats = []
    for i, j in combinations(range(m), 2):
        c = np.zeros((m, m))
        c[i, j], c[j, i] = 1.0, -1.0
        mats.append(c)
    return new_algebra(mats)


def bracket(g: StratifiedAlgebra2, u: ArrayLike, v: ArrayLike) -> np.ndarray:
    """Component a is u^T C^a v."""
    u, v = as_vector(u), as_vector(v)
    if len(u) != g.m or len(v) != g.m:
        raise DimensionMismatch(f"bracket arguments must have length {g.m}")
    return np.einsum("i,aij,j->a", u, g.C, v)


def bracket_rank(g: StratifiedAlgebra2) -> int:
    """Rank of (u, v) -> [u, v]; equals p for every valid algebra."""
    flat = g.C.reshape(g.p, -1)
    sv = linalg.svdvals(flat)
    return int(np.sum(sv > get_tolerances().dep_tol * max(1.0, sv[0])))


def vector_field_at(g: StratifiedAlgebra2, i: int, P: CarnotPoint) -> np.ndarray:
    """X_i(P) = e_i + 1/2 sum_j c_ij^a x_j."""
    if not 0 <= i < g.m:
        raise DimensionMismatch(f"frame index {i} outside [0, {g.m})")
    e = np.zeros(g.m)
    e[i] = 1.0
    return np.concatenate([e, 0.5 * g.C[:, i, :] @ P.x])


def frame_bracket_fd(
    g: StratifiedAlgebra2, i: int, j: int, P: CarnotPoint, h: float = 1e-5
) -> np.ndarray:
    """Central-difference (grad X_i) X_j - (grad X_j) X_i at P.

    In this sign convention the frame satisfies [X_i, X_j] = 0 + bracket(e_i, e_j).
    """

    def derivative(k: int, direction: np.ndarray) -> np.ndarray:
        shift = direction[: g.m] * h
        ahead = CarnotPoint(P.x + shift, P.t)
        behind = CarnotPoint(P.x - shift, P.t)
        return (vector_field_at(g, k, ahead) - vector_field_at(g, k, behind)) / (2 * h)

    xi, xj = vector_field_at(g, i, P), vector_field_at(g, j, P)
    return derivative(i, xj) - derivative(j, xi)


def group_multiply(g: StratifiedAlgebra2, P: CarnotPoint, Q: CarnotPoint) -> CarnotPoint:
    """(x_P + x_Q; t_P + t_Q + 1/2 x_Q^T C x_P)."""
    if len(P.x) != g.m or len(Q.x) != g.m:
        raise DimensionMismatch("points do not match the algebra")
    correction = 0.5 * np.einsum("i,aij,j->a", Q.x, g.C, P.x)
    return CarnotPoint(P.x + Q.x, P.t + Q.t + correction)


def group_inverse(g: StratifiedAlgebra2, P: CarnotPoint) -> CarnotPoint:
    return CarnotPoint(-P.x, -P.t)


def identity(g: StratifiedAlgebra2) -> CarnotPoint:
    return CarnotPoint(np.zeros(g.m), np.zeros(g.p))


# Correspondences with helical structures


def helical_to_algebra(h: HelicalCR) -> Tuple[StratifiedAlgebra2, ContactEmbedding]:
    """Contact algebra with C^1 = A on R^{2n} + span(w)."""
    norm = float(np.linalg.norm(h.w)) if h.p else 0.0
    if not h.completely_nontrivial or norm == 0.0:
        raise NotCompletelyNontrivial(f"need n > 0 and w != 0 (n={h.n}, p={h.p})")
    algebra = new_algebra([h.A.array])
    axis = h.w / norm
    embedding = ContactEmbedding(axis, h.w, h.horizontal_frame, h.vertical_frame @ axis)
    return algebra, embedding


def algebra_to_helical(g: StratifiedAlgebra2, w: ArrayLike) -> HelicalCR:
    """Restrict C^1 to its coimage and attach the vertical direction w."""
    if g.p != 1:
        raise NotContact(f"contact algebras have p = 1, got p = {g.p}")
    w = as_vector(w)
    if not np.any(w):
        raise NotCompletelyNontrivial("vertical direction w must be nonzero")
    try:
        A, _ = restrict_to_coimage(g.structure(0))
    except ZeroMatrix as exc:
        raise ZeroStructureMatrix("C^1 vanishes") from exc
    return HelicalCR(A, w)


def assemble_from_tuple(curves: Sequence[Q1Curve]) -> AssembledTuple:
    """Algebra of type (2n, p) and p geodesic germs from p Q1 curves."""
    if not curves:
        raise EmptyAlgebra("at least one curve is required")
    tol = get_tolerances()
    p = len(curves)
    first = curves[0].structure
    for alpha, c in enumerate(curves):
        h = c.structure
        if h.A.dim != first.A.dim or h.p != first.p:
            raise MismatchedHorizontalSpaces(f"curve {alpha} has different dimensions")
        if np.abs(h.basis - first.basis).max() > tol.block_tol:
            raise MismatchedHorizontalSpaces(f"curve {alpha} is given in a different frame")
        if h.n == 0 or np.linalg.norm(c.v) <= tol.freq_floor:
            raise AffineCurve(f"curve {alpha} is affine (v = 0)")
    if first.p != p:
        raise DependentVerticals(f"{p} curves cannot have independent directions in R^{first.p}")

    W = np.column_stack([c.structure.w for c in curves])
    sv = linalg.svdvals(W)
    if sv[-1] <= tol.dep_tol * max(1.0, sv[0]):
        raise DependentVerticals(f"vertical directions are dependent (singular value {sv[-1]:.3e})")

    algebra = new_algebra([c.structure.A.array for c in curves])
    ivps = []
    for alpha, c in enumerate(curves):
        tau = np.zeros(p)
        tau[alpha] = 1.0
        xi0 = c.v - 0.5 * c.structure.A.array @ c.v0
        ivps.append(GeodesicIVP(c.v0, np.linalg.solve(W, c.w0), xi0, tau))
    logger.info(f"assembled algebra of type ({algebra.m}, {algebra.p}) from {p} curves")
    return AssembledTuple(algebra, ivps, W)


def algebra_to_tuple(g: StratifiedAlgebra2, geodesics: Sequence[GeodesicIVP]) -> List[Q1Curve]:
    """One Q1 curve per structure matrix, with w_a the standard basis of R^p."""
    if len(geodesics) != g.p:
        raise DimensionMismatch(f"need {g.p} geodesics, got {len(geodesics)}")
    curves = []
    for alpha, ivp in enumerate(geodesics):
        ivp.check(g)
        C = g.structure(alpha)
        try:
            A, embed = restrict_to_coimage(C)
        except ZeroMatrix as exc:
            raise ZeroStructureMatrix(f"C^{alpha} vanishes") from exc
        w = np.zeros(g.p)
        w[alpha] = 1.0
        if not np.allclose(ivp.tau0, w):
            logger.warning(f"geodesic {alpha} has tau0={ivp.tau0}; using direction e_{alpha}")
        zeta0 = ivp.xi0 + 0.5 * C.array @ ivp.x0
        curves.append(Q1Curve(HelicalCR(A, w), embed.T @ zeta0, embed.T @ ivp.x0, ivp.t0))
    return curves
