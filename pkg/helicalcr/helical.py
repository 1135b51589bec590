"""Helical CR structures and the curve classes Q0 and Q1.

A helical structure is an orthogonal splitting R^d = R^{2n} + R^p with an
invertible skew generator A on the horizontal part and a vertical vector w.
The splitting itself is stored as an orthogonal d x d ``basis`` whose first
2n columns are horizontal, so every evaluation returns ambient coordinates.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike
from scipy import interpolate, linalg, optimize

from .config import get_tolerances
from .errors import (
    DegenerateHorizontal,
    DimensionMismatch,
    DomainError,
    FitFailed,
    Inconclusive,
    InsufficientSamples,
    InvalidDegree,
    NotFinite,
    NotInvertible,
    NotOrthogonal,
    VerificationMismatch,
)
from .skewlin import SkewMatrix, block_matrix, ensure_skew, is_invertible

logger = logging.getLogger(__name__)


def as_vector(x: ArrayLike) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise NotFinite("vector entries must be finite")
    return v


def check_orthogonal(T: ArrayLike) -> np.ndarray:
    """Return T as an array after checking T^T T = I within ortho_tol."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise NotOrthogonal(f"matrix of shape {T.shape} is not square")
    deviation = float(np.abs(T.T @ T - np.eye(T.shape[0])).max()) if T.size else 0.0
    if deviation > get_tolerances().ortho_tol:
        raise NotOrthogonal(f"max |T^T T - I| entry is {deviation:.3e}")
    return T


def orthonormal_complement(frame: np.ndarray, d: int) -> np.ndarray:
    """Sign-normalized orthonormal basis of the complement of span(frame)."""
    if frame.shape[1] == 0:
        return np.eye(d)
    if frame.shape[1] >= d:
        return np.zeros((d, 0))
    comp = linalg.null_space(frame.T)
    for j in range(comp.shape[1]):
        k = int(np.argmax(np.abs(comp[:, j])))
        if comp[k, j] < 0:
            comp[:, j] = -comp[:, j]
    return comp


@dataclass(frozen=True, eq=False)
class HelicalCR:
    """Invertible skew A on R^{2n}, vertical w in R^p, ambient frame."""

    A: SkewMatrix
    w: np.ndarray
    basis: Optional[np.ndarray] = None

    def __post_init__(self):
        A = ensure_skew(self.A)
        if A.dim % 2 or (A.dim and not is_invertible(A)):
            raise NotInvertible("helical generator must be invertible")
        w = as_vector(self.w)
        d = A.dim + len(w)
        basis = np.eye(d) if self.basis is None else check_orthogonal(self.basis)
        if basis.shape[0] != d:
            raise DimensionMismatch(f"basis of size {basis.shape[0]} for d={d}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "basis", basis)

    @property
    def n(self) -> int:
        return self.A.dim // 2

    @property
    def p(self) -> int:
        return len(self.w)

    @property
    def d(self) -> int:
        return 2 * self.n + self.p

    @property
    def completely_nontrivial(self) -> bool:
        return self.n > 0 and self.p > 0

    @property
    def horizontal_frame(self) -> np.ndarray:
        return self.basis[:, : 2 * self.n]

    @property
    def vertical_frame(self) -> np.ndarray:
        return self.basis[:, 2 * self.n :]

    def to_ambient(self, horizontal: np.ndarray, vertical: np.ndarray) -> np.ndarray:
        return self.basis @ np.concatenate([horizontal, vertical])


def _check_horizontal(structure: HelicalCR, name: str, x: np.ndarray) -> None:
    if len(x) != 2 * structure.n:
        raise DimensionMismatch(f"{name} has length {len(x)}, expected {2 * structure.n}")


@dataclass(frozen=True, eq=False)
class MarkedHelicalCR:
    """Helical structure with a marking (v, u0 = v0 + w0)."""

    base: HelicalCR
    v: np.ndarray
    v0: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        for name in ("v", "v0", "w0"):
            object.__setattr__(self, name, as_vector(getattr(self, name)))
        _check_horizontal(self.base, "v", self.v)
        _check_horizontal(self.base, "v0", self.v0)
        if len(self.w0) != self.base.p:
            raise DimensionMismatch(f"w0 has length {len(self.w0)}, expected {self.base.p}")

    @property
    def u0(self) -> np.ndarray:
        return np.concatenate([self.v0, self.w0])

    def curve(self) -> "Q1Curve":
        return Q1Curve(self.base, self.v, self.v0, self.w0)


@dataclass(frozen=True, eq=False)
class Q0Curve:
    """gamma(s) = exp(As) v + w."""

    structure: HelicalCR
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", as_vector(self.v))
        _check_horizontal(self.structure, "v", self.v)

    @property
    def d(self) -> int:
        return self.structure.d

    def __call__(self, s: float) -> np.ndarray:
        return eval_q0(self, s)


@dataclass(frozen=True, eq=False)
class Q1Curve:
    """mu(s) = ((exp(As) - I) A^{-1} v + v0) + (w s + w0)."""

    structure: HelicalCR
    v: np.ndarray
    v0: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        for name in ("v", "v0", "w0"):
            object.__setattr__(self, name, as_vector(getattr(self, name)))
        _check_horizontal(self.structure, "v", self.v)
        _check_horizontal(self.structure, "v0", self.v0)
        if len(self.w0) != self.structure.p:
            raise DimensionMismatch(f"w0 has length {len(self.w0)}")

    @property
    def d(self) -> int:
        return self.structure.d

    def derivative(self) -> Q0Curve:
        return Q0Curve(self.structure, self.v)

    def __call__(self, s: float) -> np.ndarray:
        return eval_q1(self, s)


@dataclass(frozen=True, eq=False)
class CanonicalDecomposition:
    """Curve-determined data gamma(s) = sum x_j cos(eta_j s) - y_j sin(eta_j s) + w."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    x: np.ndarray  # (n, d)
    y: np.ndarray  # (n, d)
    v: np.ndarray
    w: np.ndarray
    change_of_basis: np.ndarray
    degenerate: bool = False

    @property
    def horizontal_dim(self) -> int:
        return 2 * len(self.frequencies)

    @property
    def vertical_dim(self) -> int:
        return len(self.w)

    def to_curve(self) -> Q0Curve:
        A = SkewMatrix(block_matrix(self.frequencies))
        return Q0Curve(HelicalCR(A, self.w, self.change_of_basis), self.v)


class InjectivityVerdict(NamedTuple):
    injective: bool
    period: Optional[float]


@dataclass(frozen=True)
class PlaneProjection:
    center: np.ndarray
    radius: float
    basis: np.ndarray  # (d, 2)
    frequency: float
    max_deviation: float = field(default=0.0)


# Evaluation


def eval_q0(c: Q0Curve, s: float) -> np.ndarray:
    h = c.structure
    return h.to_ambient(h.A.spectral.exp(s) @ c.v, h.w)


def eval_q1(c: Q1Curve, s: float) -> np.ndarray:
    h = c.structure
    horizontal = h.A.spectral.integrated_exp(s) @ c.v + c.v0
    return h.to_ambient(horizontal, h.w * s + c.w0)


def derivative_q0(c: Q0Curve, k: int, s: float) -> np.ndarray:
    """D^k gamma(s) = exp(As) A^k v + (w if k = 0)."""
    if k < 0:
        raise InvalidDegree(f"derivative order must be >= 0, got {k}")
    h = c.structure
    akv = np.linalg.matrix_power(h.A.array, k) @ c.v if h.n else c.v
    vertical = h.w if k == 0 else np.zeros(h.p)
    return h.to_ambient(h.A.spectral.exp(s) @ akv, vertical)


def _plane_amplitudes(structure: HelicalCR, v: np.ndarray) -> np.ndarray:
    coords = structure.A.spectral.basis.T @ v
    return np.hypot(coords[0::2], coords[1::2])


def gram_e_kl(c: Q0Curve, k: int, l: int) -> float:
    """<D^k gamma, D^l gamma>, independent of s; exactly 0 when k - l is odd."""
    if k < 0 or l < 0:
        raise InvalidDegree("derivative orders must be >= 0")
    h = c.structure
    value = 0.0
    if (l - k) % 2 == 0 and h.n:
        sign = -1.0 if ((l - k) // 2) % 2 else 1.0
        etas = h.A.spectral.frequencies
        value = sign * float(np.sum(etas ** (k + l) * _plane_amplitudes(h, c.v) ** 2))
    if k == 0 and l == 0:
        value += float(h.w @ h.w)
    return value


def _frequency_groups(frequencies: np.ndarray) -> List[Tuple[float, List[int]]]:
    """Cluster descending frequencies closer than freq_sep."""
    sep = get_tolerances().freq_sep
    groups: List[Tuple[float, List[int]]] = []
    for j, eta in enumerate(frequencies):
        if groups and abs(groups[-1][0] - eta) <= sep * max(1.0, eta):
            groups[-1][1].append(j)
        else:
            groups.append((float(eta), [j]))
    return groups


def minimal_annihilating_poly(c: Q0Curve) -> Polynomial:
    """Monic x^eps * prod(x^2 + eta_j^2) over frequencies carried by v."""
    tol = get_tolerances()
    h = c.structure
    norm_u0 = float(np.sqrt(c.v @ c.v + h.w @ h.w))
    p = Polynomial([1.0])
    if h.n:
        amps = _plane_amplitudes(h, c.v)
        for eta, idx in _frequency_groups(h.A.spectral.frequencies):
            if np.sqrt(np.sum(amps[idx] ** 2)) > tol.amp_tol * norm_u0:
                p = p * Polynomial([eta**2, 0.0, 1.0])
            else:
                logger.debug(f"plane at frequency {eta:.6g} carries no amplitude")
    if np.linalg.norm(h.w) > tol.freq_floor:
        p = p * Polynomial([0.0, 1.0])
    return p


# Canonical decomposition


def decompose(
    A: SkewMatrix, u0: ArrayLike, require_nontrivial: bool = False
) -> Tuple[CanonicalDecomposition, Q0Curve]:
    """Canonical decomposition of s -> exp(As) u0."""
    A = ensure_skew(A)
    u0 = as_vector(u0)
    if len(u0) != A.dim:
        raise DimensionMismatch(f"u0 has length {len(u0)}, A is {A.dim}x{A.dim}")
    tol = get_tolerances()
    a = A.array
    sf = A.spectral
    threshold = tol.amp_tol * float(np.linalg.norm(u0))

    frames: List[np.ndarray] = []
    freqs: List[float] = []
    amps: List[float] = []
    for eta, idx in _frequency_groups(sf.frequencies):
        cols = np.concatenate([[2 * j, 2 * j + 1] for j in idx])
        P = sf.basis[:, cols]
        part = P @ (P.T @ u0)
        r = float(np.linalg.norm(part))
        if r <= threshold:
            logger.debug(f"dropping inactive frequency {eta:.6g} (amplitude {r:.3e})")
            continue
        x = part / r
        y = a @ x / eta
        if frames:
            F = np.column_stack(frames)
            y = y - F @ (F.T @ y)
        y = y - x * (x @ y)
        frames += [x, y / np.linalg.norm(y)]
        freqs.append(eta)
        amps.append(r)

    d = A.dim
    H = np.column_stack(frames) if frames else np.zeros((d, 0))
    V = orthonormal_complement(H, d)
    K = sf.kernel
    w = V.T @ (K @ (K.T @ u0))
    n = len(freqs)
    amplitudes = np.array(amps)
    v = np.zeros(2 * n)
    v[0::2] = amplitudes

    degenerate = n == 0 and sf.n_blocks > 0
    if degenerate:
        if require_nontrivial:
            raise DegenerateHorizontal("u0 has no component in the coimage of A")
        logger.warning("horizontal part of u0 vanishes; decomposition is constant")

    Q = np.column_stack([H, V])
    decomposition = CanonicalDecomposition(
        frequencies=np.array(freqs),
        amplitudes=amplitudes,
        x=(amplitudes[:, None] * H[:, 0::2].T) if n else np.zeros((0, d)),
        y=(-amplitudes[:, None] * H[:, 1::2].T) if n else np.zeros((0, d)),
        v=v,
        w=w,
        change_of_basis=Q,
        degenerate=degenerate,
    )
    return decomposition, decomposition.to_curve()


# Fitting


def _design(s: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    cols = [np.ones_like(s)]
    for eta in freqs:
        cols += [np.cos(eta * s), np.sin(eta * s)]
    return np.column_stack(cols)


def _uniform(s: np.ndarray, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    steps = np.diff(s)
    if np.ptp(steps) <= 1e-9 * steps.mean():
        return s, points
    grid = np.linspace(s[0], s[-1], len(s))
    logger.info("resampling non-uniform samples onto a uniform grid")
    return grid, interpolate.CubicSpline(s, points, axis=0)(grid)


def _estimate_frequencies(grid: np.ndarray, data: np.ndarray, max_freqs: int) -> np.ndarray:
    """Matrix-pencil estimate from a block Hankel matrix of all components."""
    N = len(grid)
    dt = grid[1] - grid[0]
    L = N // 2
    hankel = np.hstack([linalg.hankel(data[:L, c], data[L - 1 :, c]) for c in range(data.shape[1])])
    U, sv, _ = linalg.svd(hankel, full_matrices=False)
    if sv[0] == 0.0:
        return np.zeros(0)
    rank = min(int(np.sum(sv > 1e-9 * sv[0])), 2 * max_freqs + 1)
    Ur = U[:, :rank]
    pencil, *_ = np.linalg.lstsq(Ur[:-1], Ur[1:], rcond=None)
    angles = np.abs(np.angle(linalg.eigvals(pencil)))
    etas = np.sort(angles[angles > 1e-6] / dt)[::-1]

    merged: List[List[float]] = []
    for eta in etas:
        if merged and abs(merged[-1][0] - eta) <= 1e-6 * max(1.0, eta):
            merged[-1].append(eta)
        else:
            merged.append([eta])
    return np.array([np.mean(m) for m in merged])


def _linear_fit(s: np.ndarray, points: np.ndarray, freqs: np.ndarray):
    design = _design(s, freqs)
    coef, *_ = np.linalg.lstsq(design, points, rcond=None)
    return coef, design @ coef - points


def _rms(residual: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))


def fit_from_samples(samples: Sequence[Tuple[float, ArrayLike]], max_freqs: int = 4) -> Q0Curve:
    """Recover a Q0 curve from sampled points.

    Frequencies come from a matrix pencil on uniformly spaced data and are
    polished by variable-projection least squares; the linear coefficients
    are then an ordinary least-squares problem.
    """
    tol = get_tolerances()
    if len(samples) < 4 * max_freqs + 2:
        raise InsufficientSamples(f"need at least {4 * max_freqs + 2} samples, got {len(samples)}")
    s = np.array([float(si) for si, _ in samples])
    points = np.array([as_vector(p) for _, p in samples])
    order = np.argsort(s)
    s, points = s[order], points[order]
    if np.any(np.diff(s) <= 0):
        raise InsufficientSamples("sample parameters must be distinct")

    grid, data = _uniform(s, points)
    freqs = _estimate_frequencies(grid, data, max_freqs)
    if len(freqs) > max_freqs:
        raise FitFailed(f"found {len(freqs)} frequencies, max_freqs={max_freqs}")

    coef, residual = _linear_fit(s, points, freqs)
    if len(freqs) and _rms(residual) > 1e-10:

        def objective(f):
            return _linear_fit(s, points, f)[1].ravel()

        solution = optimize.least_squares(objective, freqs, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        freqs = np.abs(solution.x)
        coef, residual = _linear_fit(s, points, freqs)

    scale = max(1.0, float(np.abs(points).max()))
    constant = coef[0]
    planes = []
    for j, eta in enumerate(freqs):
        a, b = coef[1 + 2 * j], coef[2 + 2 * j]
        if np.sqrt(a @ a + b @ b) > tol.amp_tol * scale:
            planes.append((eta, a, b))
    planes.sort(key=lambda item: -item[0])

    d = points.shape[1]
    if 2 * len(planes) > d:
        raise FitFailed(f"{len(planes)} frequencies do not fit in dimension {d}")
    if planes:
        Qh, R = np.linalg.qr(np.column_stack([col for _, a, b in planes for col in (a, b)]))
        Qh = Qh * np.where(np.diag(R) < 0, -1.0, 1.0)
        v = Qh.T @ sum(a for _, a, _ in planes)
    else:
        Qh, v = np.zeros((d, 0)), np.zeros(0)
    V = orthonormal_complement(Qh, d)
    A = SkewMatrix(block_matrix([eta for eta, _, _ in planes]))
    curve = Q0Curve(HelicalCR(A, V.T @ constant, np.column_stack([Qh, V])), v)

    fitted = np.array([eval_q0(curve, si) for si in s])
    rms = _rms(fitted - points)
    if rms > tol.fit_tol:
        raise FitFailed(f"fit residual {rms:.3e} exceeds {tol.fit_tol:.1e}", residual=rms)
    logger.info(f"fitted {len(planes)} frequencies, residual {rms:.3e}")
    return curve


# Injectivity, equivalence, projections


def ambient_generator(c: Q0Curve) -> np.ndarray:
    """The d x d skew generator B (A + 0_p) B^T of a Q0 curve."""
    h = c.structure
    full = linalg.block_diag(h.A.array, np.zeros((h.p, h.p)))
    return h.basis @ full @ h.basis.T


def _rational(ratio: float) -> Optional[Fraction]:
    """Best rational match of ratio, None if irrational; Inconclusive near the bound."""
    tol = get_tolerances()
    bound = tol.rat_denom_bound
    frac = Fraction(ratio).limit_denominator(bound)
    err = abs(ratio - float(frac))
    allowed = tol.rat_tol * max(1.0, abs(ratio))
    if err <= allowed:
        if frac.denominator > bound // 10:
            raise Inconclusive(
                ratio,
                frac.denominator,
                f"ratio {ratio!r} matches {frac} only near the denominator bound {bound}",
            )
        return frac
    if err <= 10 * allowed:
        raise Inconclusive(
            ratio, frac.denominator, f"ratio {ratio!r} is within {err:.1e} of {frac}"
        )
    return None


def is_injective(
    c: Union[CanonicalDecomposition, Q0Curve, Q1Curve]
) -> InjectivityVerdict:
    """Periodicity test on the frequency ratios eta_j / eta_1."""
    tol = get_tolerances()
    if isinstance(c, Q1Curve):
        if np.linalg.norm(c.structure.w) > tol.freq_floor:
            return InjectivityVerdict(True, None)
        freqs = decompose(c.structure.A, c.v)[0].frequencies
        curve = c
    elif isinstance(c, Q0Curve):
        freqs = decompose(ambient_generator(c), eval_q0(c, 0.0))[0].frequencies
        curve = c
    else:
        freqs = c.frequencies
        curve = c.to_curve()
    if len(freqs) == 0:
        raise DegenerateHorizontal("injectivity needs at least one frequency")

    top = float(freqs[0])
    denominators = []
    for eta in freqs[1:]:
        frac = _rational(float(eta) / top)
        if frac is None:
            logger.info(f"ratio {eta / top:.12g} is irrational: curve is injective")
            return InjectivityVerdict(True, None)
        denominators.append(frac.denominator)

    period = 2 * np.pi * reduce(lcm, denominators, 1) / top
    gap = float(np.linalg.norm(curve(0.0) - curve(period)))
    if gap > 1e-8:
        raise Inconclusive(top, 0, f"period witness {period:.12g} fails by {gap:.3e}")
    return InjectivityVerdict(False, float(period))


def equivalent(h1: HelicalCR, h2: HelicalCR) -> Tuple[bool, Optional[float]]:
    """Whether A2 = lambda A1 for a single nonzero lambda (w is not compared)."""
    a1, a2 = h1.A.array, h2.A.array
    if a1.shape != a2.shape or a1.size == 0:
        return False, None
    i, j = np.unravel_index(np.argmax(np.abs(a1)), a1.shape)
    lam = float(a2[i, j] / a1[i, j])
    if lam == 0.0:
        return False, None
    deviation = float(np.abs(a2 - lam * a1).max())
    if deviation <= 1e-9 * max(1.0, float(np.abs(a2).max())):
        return True, lam
    return False, None


def reparameterize(c: Q0Curve, lam: float, b: float) -> Q0Curve:
    """s -> gamma(lam s + b) as a Q0 curve: A -> lam A, v -> exp(Ab) v."""
    if lam == 0:
        raise DomainError("reparameterization scale must be nonzero")
    h = c.structure
    scaled = HelicalCR(SkewMatrix(lam * h.A.array), h.w, h.basis)
    return Q0Curve(scaled, h.A.spectral.exp(b) @ c.v)


def plane_projections(c: Q0Curve, samples: int = 64) -> List[PlaneProjection]:
    """Circles traced by gamma in each canonical plane."""
    decomposition, _ = decompose(ambient_generator(c), eval_q0(c, 0.0))
    if decomposition.horizontal_dim == 0:
        raise DegenerateHorizontal("curve has no canonical planes")
    slowest = float(decomposition.frequencies.min())
    grid = np.linspace(0.0, 2 * np.pi / slowest, samples)
    points = np.array([eval_q0(c, s) for s in grid])

    result = []
    for j, (eta, r) in enumerate(zip(decomposition.frequencies, decomposition.amplitudes)):
        P = decomposition.change_of_basis[:, 2 * j : 2 * j + 2]
        deviation = float(np.abs(np.linalg.norm(points @ P, axis=1) - r).max())
        if deviation > 1e-9 * max(1.0, r):
            raise VerificationMismatch(f"projection onto plane {j} deviates by {deviation:.3e}")
        result.append(PlaneProjection(np.zeros(2), float(r), P, float(eta), deviation))
    return result
