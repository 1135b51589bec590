"""Normal sub-Riemannian geodesics of step-two Carnot groups.

Hamilton's equations for H = 1/2 |zeta|^2, zeta = xi + 1/2 A_tau x, read

    x' = zeta,  t_a' = 1/2 zeta^T C^a x,  xi' = 1/2 A_tau zeta,  tau' = 0,

so zeta(s) = exp(s A_tau) zeta0 and x is its integral.
"""

import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate, linalg

from .carnot import (
    CarnotPoint,
    GeodesicIVP,
    StratifiedAlgebra2,
    algebra_to_helical,
    heisenberg,
    helical_to_algebra,
)
from .config import get_tolerances
from .errors import (
    BasepointMismatch,
    DimensionMismatch,
    NotContact,
    NotHorizontal,
    SingularATau,
    StepSizeUnderflow,
    UnnormalizedTau,
)
from .helical import MarkedHelicalCR, as_vector
from .skewlin import J, SkewMatrix, restrict_to_coimage

logger = logging.getLogger(__name__)

__all__ = [
    "GeodesicCase",
    "GeodesicIVP",
    "HorizontalLift",
    "NormalGeodesic",
    "PhaseState",
    "a_tau",
    "cc_length",
    "geodesic_closed_form",
    "geodesic_to_marked_helical",
    "hamiltonian",
    "heisenberg_geodesic",
    "heisenberg_ivp",
    "horizontal_lift",
    "marked_helical_to_geodesic",
    "normalize_tau",
    "ode_oracle",
    "phase_state",
    "to_classical_heisenberg",
    "trajectory_table",
]


class GeodesicCase(str, Enum):
    STRAIGHT = "straight"
    ROTATIONAL = "rotational"
    SPLIT = "split"


@dataclass(frozen=True, eq=False)
class PhaseState:
    x: np.ndarray
    t: np.ndarray
    xi: np.ndarray
    tau: np.ndarray
    zeta: np.ndarray


def a_tau(g: StratifiedAlgebra2, tau: ArrayLike) -> np.ndarray:
    """sum_a tau_a C^a."""
    return np.einsum("a,aij->ij", as_vector(tau), g.C)


def phase_state(g: StratifiedAlgebra2, x, t, xi, tau) -> PhaseState:
    x, t, xi, tau = (as_vector(z) for z in (x, t, xi, tau))
    return PhaseState(x, t, xi, tau, xi + 0.5 * a_tau(g, tau) @ x)


def hamiltonian(g: StratifiedAlgebra2, state: PhaseState) -> float:
    if len(state.x) != g.m or len(state.tau) != g.p:
        raise DimensionMismatch("phase state does not match the algebra")
    zeta = state.xi + 0.5 * a_tau(g, state.tau) @ state.x
    return 0.5 * float(zeta @ zeta)


def _integral_quadratic(M: np.ndarray, N: np.ndarray, z0: np.ndarray, s: float) -> float:
    """Integral over [0, s] of z^T N z along z' = M z (Van Loan block exponential)."""
    k = M.shape[0]
    block = np.zeros((2 * k, 2 * k))
    block[:k, :k] = -M.T
    block[:k, k:] = N
    block[k:, k:] = M
    E = linalg.expm(s * block)
    return float(z0 @ (E[k:, k:].T @ E[:k, k:]) @ z0)


class NormalGeodesic:
    """Closed-form evaluator of a normal geodesic."""

    def __init__(self, g: StratifiedAlgebra2, ivp: GeodesicIVP):
        self.algebra = g
        self.ivp = ivp.check(g)
        self.A = SkewMatrix.trusted(a_tau(g, ivp.tau0))
        self.zeta0 = ivp.xi0 + 0.5 * self.A.array @ ivp.x0

        tol = get_tolerances()
        sf = self.A.spectral
        if sf.n_blocks == 0:
            self.case = GeodesicCase.STRAIGHT
        elif sf.kernel_dim == 0:
            self.case = GeodesicCase.ROTATIONAL
        else:
            self.case = GeodesicCase.SPLIT
            message = f"A_tau is singular (kernel dimension {sf.kernel_dim}); using coimage/kernel split"
            logger.warning(message)
            warnings.warn(SingularATau(message), stacklevel=2)
            self._coimage, self._embed = restrict_to_coimage(self.A)

        a = self.A.array
        scale = max(1.0, float(np.abs(a).max()))
        self._commuting = self.case is GeodesicCase.ROTATIONAL and all(
            np.abs(a @ c - c @ a).max() <= tol.block_tol * scale * max(1.0, np.abs(c).max())
            for c in g.C
        )

    @property
    def a(self) -> Optional[np.ndarray]:
        """1/2 x0 - A^{-1} xi0 (rotational case only)."""
        if self.case is not GeodesicCase.ROTATIONAL:
            return None
        return 0.5 * self.ivp.x0 - np.linalg.solve(self.A.array, self.ivp.xi0)

    @property
    def b(self) -> Optional[np.ndarray]:
        """1/2 x0 + A^{-1} xi0 (rotational case only)."""
        if self.case is not GeodesicCase.ROTATIONAL:
            return None
        return 0.5 * self.ivp.x0 + np.linalg.solve(self.A.array, self.ivp.xi0)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.zeta0))

    def zeta(self, s: float) -> np.ndarray:
        return self.A.spectral.exp(s) @ self.zeta0

    def x(self, s: float) -> np.ndarray:
        x0 = self.ivp.x0
        if self.case is GeodesicCase.STRAIGHT:
            return x0 + s * self.zeta0
        if self.case is GeodesicCase.ROTATIONAL:
            return self.a + self.A.spectral.exp(s) @ self.b
        E = self._embed
        rotating = E @ (self._coimage.spectral.integrated_exp(s) @ (E.T @ self.zeta0))
        drifting = self.zeta0 - E @ (E.T @ self.zeta0)
        return x0 + s * drifting + rotating

    def xi(self, s: float) -> np.ndarray:
        return self.zeta(s) - 0.5 * self.A.array @ self.x(s)

    def t(self, s: float) -> np.ndarray:
        g, ivp = self.algebra, self.ivp
        if self.case is GeodesicCase.STRAIGHT:
            return ivp.t0 + 0.5 * s * np.einsum("i,aij,j->a", self.zeta0, g.C, ivp.x0)
        if self._commuting:
            return self._t_commuting(s)
        m = g.m
        M = np.zeros((2 * m, 2 * m))
        M[:m, :m] = self.A.array
        M[m:, :m] = np.eye(m)
        z0 = np.concatenate([self.zeta0, ivp.x0])
        out = np.empty(g.p)
        for alpha, c in enumerate(g.C):
            N = np.zeros((2 * m, 2 * m))
            N[:m, m:] = c
            out[alpha] = ivp.t0[alpha] + 0.5 * _integral_quadratic(M, N, z0, s)
        return out

    def _t_commuting(self, s: float) -> np.ndarray:
        # x(s) = c0 + exp(sA) q with q = A^{-1} zeta0; C commutes with exp(sA)
        a = self.A.array
        q = np.linalg.solve(a, self.zeta0)
        c0 = self.ivp.x0 - q
        left = np.linalg.solve(a.T, self.zeta0) @ (np.eye(len(q)) - self.A.spectral.exp(-s))
        drift = np.einsum("aij,i,j->a", self.algebra.C, self.zeta0, q)
        return self.ivp.t0 + 0.5 * (np.einsum("i,aij,j->a", left, self.algebra.C, c0) + s * drift)

    def position(self, s: float) -> CarnotPoint:
        return CarnotPoint(self.x(s), self.t(s))

    def state(self, s: float) -> PhaseState:
        return PhaseState(self.x(s), self.t(s), self.xi(s), self.ivp.tau0, self.zeta(s))

    def __call__(self, s: float) -> CarnotPoint:
        return self.position(s)


def geodesic_closed_form(g: StratifiedAlgebra2, ivp: GeodesicIVP) -> NormalGeodesic:
    return NormalGeodesic(g, ivp)


def normalize_tau(
    g: StratifiedAlgebra2, ivp: GeodesicIVP
) -> Tuple[StratifiedAlgebra2, GeodesicIVP, float]:
    """Rescale a contact ivp to tau0 in {0, 1}.

    Returns (g', ivp', lam) with x'(lam s) = x(s) and t'(lam s) = sign(tau0) t(s);
    a negative tau0 is absorbed by flipping C^1.
    """
    if g.p != 1:
        raise NotContact(f"tau normalization needs p = 1, got {g.p}")
    ivp.check(g)
    tau = float(ivp.tau0[0])
    if tau == 0.0:
        return g, ivp, 1.0
    lam, sign = abs(tau), float(np.sign(tau))
    flipped = g if sign > 0 else StratifiedAlgebra2(-g.C)
    return flipped, GeodesicIVP(ivp.x0, sign * ivp.t0, ivp.xi0 / lam, [1.0]), lam


# Hamiltonian oracle

_RK4_A = (
    (),
    (0.5,),
    (0.0, 0.5),
    (0.0, 0.0, 1.0),
)
_RK4_B = (1 / 6, 1 / 3, 1 / 3, 1 / 6)
_EPS = np.finfo(float).eps


class _HamiltonianFlow:
    def __init__(self, g: StratifiedAlgebra2, tau: np.ndarray):
        self.g = g
        self.tau = tau
        self.A = a_tau(g, tau)
        self.m = g.m

    def split(self, y):
        m, p = self.m, self.g.p
        return y[:m], y[m : m + p], y[m + p :]

    def rhs(self, y: np.ndarray) -> np.ndarray:
        x, _, xi = self.split(y)
        zeta = xi + 0.5 * self.A @ x
        dt = 0.5 * np.einsum("i,aij,j->a", zeta, self.g.C, x)
        return np.concatenate([zeta, dt, 0.5 * self.A @ zeta])

    def energy(self, y: np.ndarray) -> float:
        x, _, xi = self.split(y)
        zeta = xi + 0.5 * self.A @ x
        return 0.5 * float(zeta @ zeta)

    def step(self, y: np.ndarray, h: float) -> np.ndarray:
        ks: List[np.ndarray] = []
        for row in _RK4_A:
            ks.append(self.rhs(y + h * sum(a * k for a, k in zip(row, ks))))
        return y + h * sum(b * k for b, k in zip(_RK4_B, ks))


def _advance(
    flow: _HamiltonianFlow,
    y: np.ndarray,
    s: float,
    target: float,
    h: float,
    local_tol: float,
    drift_tol: float,
) -> Tuple[np.ndarray, float]:
    """Step-doubling RK4 from s to target; returns (state, last step size)."""
    h_min = 1e-12 * max(1.0, abs(target))
    direction = 1.0 if target >= s else -1.0
    while direction * (target - s) > 0:
        h = direction * min(abs(h), abs(target - s))
        full = flow.step(y, h)
        half = flow.step(flow.step(y, h / 2), h / 2)
        err = float(np.abs(full - half).max()) / 15.0
        energy = flow.energy(y)
        drift = abs(flow.energy(half) - energy)
        # short steps cannot beat the round-off in H itself
        drift_allowed = drift_tol * abs(h) + 64 * _EPS * max(1.0, energy)
        scale = 1.0 + float(np.abs(half).max())
        if err <= local_tol * scale and drift <= drift_allowed:
            y, s = half, s + h
            ratio = (local_tol * scale / err) ** 0.2 if err > 0 else 4.0
            h *= min(4.0, max(1.0, 0.9 * ratio))
        else:
            h *= 0.5
        if abs(h) < h_min and direction * (target - s) > h_min:
            raise StepSizeUnderflow(f"step size {abs(h):.2e} below minimum at s={s:.6g}")
    return y, abs(h)


def ode_oracle(
    g: StratifiedAlgebra2,
    ivp: GeodesicIVP,
    s_grid: Sequence[float],
    local_tol: float = 1e-12,
    drift_tol: float = 1e-10,
) -> List[PhaseState]:
    """Adaptive classical RK4 integration of Hamilton's equations; tau is never updated."""
    ivp.check(g)
    grid = np.asarray(s_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise DimensionMismatch("s_grid must be sorted")
    tau = ivp.tau0.copy()
    flow = _HamiltonianFlow(g, tau)
    y0 = np.concatenate([ivp.x0, ivp.t0, ivp.xi0])

    states: List[Optional[PhaseState]] = [None] * len(grid)
    for indices in (np.flatnonzero(grid >= 0), np.flatnonzero(grid < 0)[::-1]):
        y, s, h = y0, 0.0, 1e-2
        for idx in indices:
            y, h = _advance(flow, y, s, grid[idx], h, local_tol, drift_tol)
            s = grid[idx]
            x, t, xi = flow.split(y)
            states[idx] = PhaseState(x.copy(), t.copy(), xi.copy(), tau, xi + 0.5 * flow.A @ x)
    logger.debug(f"oracle integrated {len(grid)} grid points")
    return states


# Lifts and lengths


def _central_difference(f: Callable[[float], np.ndarray], s: float, h: float) -> np.ndarray:
    return (np.asarray(f(s + h), dtype=float) - np.asarray(f(s - h), dtype=float)) / (2 * h)


class HorizontalLift:
    """s -> (gamma(s), t(s)) with t' = 1/2 gamma'^T C gamma."""

    def __init__(
        self,
        g: StratifiedAlgebra2,
        gamma: Callable[[float], ArrayLike],
        interval: Tuple[float, float],
        P: CarnotPoint,
        gamma_dot: Optional[Callable[[float], ArrayLike]] = None,
    ):
        self.algebra = g
        self.gamma = gamma
        self.a, self.b = interval
        self.P = P
        self.gamma_dot = gamma_dot or (lambda s: _central_difference(gamma, s, 1e-6))

    def vertical_rate(self, s: float) -> np.ndarray:
        x = np.asarray(self.gamma(s), dtype=float)
        dx = np.asarray(self.gamma_dot(s), dtype=float)
        return 0.5 * np.einsum("i,aij,j->a", dx, self.algebra.C, x)

    def __call__(self, s: float) -> CarnotPoint:
        gain, _ = integrate.quad_vec(self.vertical_rate, self.a, s, epsabs=1e-10, epsrel=1e-12)
        return CarnotPoint(self.gamma(s), self.P.t + gain)


def horizontal_lift(
    g: StratifiedAlgebra2,
    gamma: Callable[[float], ArrayLike],
    interval: Tuple[float, float],
    P: CarnotPoint,
    gamma_dot: Optional[Callable[[float], ArrayLike]] = None,
) -> HorizontalLift:
    start = as_vector(gamma(interval[0]))
    if len(start) != g.m or len(P.t) != g.p:
        raise DimensionMismatch("curve and basepoint must match the algebra")
    gap = float(np.linalg.norm(P.x - start))
    if gap > 1e-9:
        raise BasepointMismatch(f"basepoint is {gap:.3e} away from gamma(a)")
    return HorizontalLift(g, gamma, interval, P, gamma_dot)


def cc_length(
    g: StratifiedAlgebra2,
    curve: Callable[[float], CarnotPoint],
    interval: Tuple[float, float],
    curve_dot: Optional[Callable[[float], ArrayLike]] = None,
    checks: int = 17,
) -> float:
    """Length of a horizontal curve: integral of |x'|."""
    a, b = interval

    def velocity(s: float) -> np.ndarray:
        if curve_dot is not None:
            return as_vector(curve_dot(s))
        return _central_difference(lambda u: curve(u).as_vector(), s, 1e-5)

    for s in np.linspace(a, b, checks):
        point = curve(s)
        v = velocity(s)
        dx, dt = v[: g.m], v[g.m :]
        expected = 0.5 * np.einsum("i,aij,j->a", dx, g.C, point.x)
        gap = float(np.abs(dt - expected).max()) if g.p else 0.0
        if gap > 1e-8 * max(1.0, float(np.abs(dt).max())):
            raise NotHorizontal(f"vertical velocity off the frame by {gap:.3e} at s={s:.6g}")

    length, _ = integrate.quad(
        lambda s: float(np.linalg.norm(velocity(s)[: g.m])), a, b, epsabs=1e-10, limit=200
    )
    return float(length)


# Heisenberg group


def heisenberg_geodesic(a: ArrayLike, b: ArrayLike, c: float, s: float) -> CarnotPoint:
    """(a + b e^{-is}, c + |b|^2 s - Im(conj(a) b e^{-is})) with complex numbers as 2-vectors."""
    za, zb = complex(*as_vector(a)), complex(*as_vector(b))
    e = np.exp(-1j * s)
    z = za + zb * e
    t = c + abs(zb) ** 2 * s - (za.conjugate() * zb * e).imag
    return CarnotPoint([z.real, z.imag], [t])


def heisenberg_ivp(a: ArrayLike, b: ArrayLike, c: float) -> Tuple[StratifiedAlgebra2, GeodesicIVP]:
    """Heisenberg(1) data whose geodesic is heisenberg_geodesic(a, b, c, .).

    Multiplication by e^{-is} is exp(sA) with A = -J, i.e. tau0 = -1, and the
    classical vertical coordinate is -2 t.
    """
    a, b = as_vector(a), as_vector(b)
    A = -J
    za, zb = complex(*a), complex(*b)
    t0 = -0.5 * (c - (za.conjugate() * zb).imag)
    return heisenberg(1), GeodesicIVP(a + b, [t0], 0.5 * A @ (b - a), [-1.0])


def to_classical_heisenberg(point: CarnotPoint) -> CarnotPoint:
    return CarnotPoint(point.x, -2.0 * point.t)


# Marked helical structures


def marked_helical_to_geodesic(mh: MarkedHelicalCR) -> Tuple[StratifiedAlgebra2, GeodesicIVP]:
    """Geodesic germ with x0 = v0, t0 = <w0, w>/|w|^2, tau0 = 1 and zeta0 = v."""
    algebra, _ = helical_to_algebra(mh.base)
    w = mh.base.w
    t0 = float(mh.w0 @ w) / float(w @ w)
    off_axis = float(np.linalg.norm(mh.w0 - t0 * w))
    if off_axis > get_tolerances().freq_floor * max(1.0, float(np.linalg.norm(mh.w0))):
        logger.warning(f"dropping component of w0 off span(w) (norm {off_axis:.3e})")
    if not np.any(mh.v):
        logger.warning("v = 0: the geodesic is constant in the horizontal layer")
    xi0 = mh.v - 0.5 * mh.base.A.array @ mh.v0
    return algebra, GeodesicIVP(mh.v0, [t0], xi0, [1.0])


def geodesic_to_marked_helical(
    g: StratifiedAlgebra2, ivp: GeodesicIVP, w: ArrayLike
) -> MarkedHelicalCR:
    """Marked structure with v = 1/2 A x0 + xi0 and u0 = x0 + t0 w."""
    if g.p != 1:
        raise NotContact(f"contact algebras have p = 1, got p = {g.p}")
    ivp.check(g)
    base = algebra_to_helical(g, w)
    _, embed = restrict_to_coimage(g.structure(0))
    if not np.isclose(ivp.tau0[0], 1.0):
        message = f"tau0 = {ivp.tau0[0]:.6g}; projections coincide only for tau0 = 1"
        logger.warning(message)
        warnings.warn(UnnormalizedTau(message), stacklevel=2)
    v = embed.T @ (0.5 * g.C[0] @ ivp.x0 + ivp.xi0)
    if not np.any(v):
        logger.warning("v = 0: degenerate marking")
    return MarkedHelicalCR(base, v, embed.T @ ivp.x0, ivp.t0[0] * base.w)


def trajectory_table(geodesic: NormalGeodesic, grid: Sequence[float]) -> Tuple[List[str], np.ndarray]:
    """Header s,x1..xm,t1..tp,xi1..xim,H and one row per grid point."""
    g = geodesic.algebra
    header = (
        ["s"]
        + [f"x{i + 1}" for i in range(g.m)]
        + [f"t{a + 1}" for a in range(g.p)]
        + [f"xi{i + 1}" for i in range(g.m)]
        + ["H"]
    )
    rows = []
    for s in grid:
        state = geodesic.state(float(s))
        energy = hamiltonian(g, state)
        rows.append(np.concatenate([[s], state.x, state.t, state.xi, [energy]]))
    return header, np.array(rows)
