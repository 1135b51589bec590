"""Skew-symmetric linear algebra.

Validation, exponentials through the real spectral form, characteristic
polynomials and coimage restriction. The spectral form pairs eigenvectors of
the positive semidefinite matrix A^T A = -A^2 into planes (x, Ax/eta) on
which A acts as eta * J.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike
from scipy import linalg

from .config import get_tolerances
from .errors import EigenFailure, NotFinite, NotSkew, NotSquare, ZeroMatrix

logger = logging.getLogger(__name__)

J = np.array([[0.0, -1.0], [1.0, 0.0]])

_EPS = np.finfo(float).eps


def as_matrix(M: ArrayLike) -> np.ndarray:
    """Return M as a finite 2-d float array."""
    a = np.array(M, dtype=float)
    if a.ndim != 2:
        raise NotSquare(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotFinite("matrix entries must be finite")
    return a


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    """Real square matrix with A^T = -A."""

    array: np.ndarray

    @classmethod
    def trusted(cls, a: np.ndarray) -> "SkewMatrix":
        """Wrap a computed matrix, projecting it onto the skew part."""
        a = np.asarray(a, dtype=float)
        return cls(0.5 * (a - a.T))

    @property
    def dim(self) -> int:
        return self.array.shape[0]

    @property
    def spectral(self) -> "SpectralForm":
        """Spectral form under the active freq_floor, computed once per floor."""
        floor = get_tolerances().freq_floor
        cache = self.__dict__.setdefault("_spectral", {})
        if floor not in cache:
            cache[floor] = spectral_form(self)
        return cache[floor]

    def __repr__(self) -> str:
        return f"SkewMatrix(dim={self.dim})"


def block_matrix(frequencies: ArrayLike, kernel_dim: int = 0) -> np.ndarray:
    """blockdiag(eta_1 J, ..., eta_n J, 0_k)."""
    freqs = np.asarray(frequencies, dtype=float)
    n = len(freqs)
    out = np.zeros((2 * n + kernel_dim, 2 * n + kernel_dim))
    idx = 2 * np.arange(n)
    out[idx + 1, idx] = freqs
    out[idx, idx + 1] = -freqs
    return out


def _rotations(freqs: np.ndarray, kernel_dim: int, s: float) -> np.ndarray:
    n = len(freqs)
    out = np.zeros((2 * n + kernel_dim, 2 * n + kernel_dim))
    idx = 2 * np.arange(n)
    c, sn = np.cos(freqs * s), np.sin(freqs * s)
    out[idx, idx] = c
    out[idx + 1, idx + 1] = c
    out[idx, idx + 1] = -sn
    out[idx + 1, idx] = sn
    out[2 * n :, 2 * n :] = np.eye(kernel_dim)
    return out


def _integrated_rotations(freqs: np.ndarray, kernel_dim: int, s: float) -> np.ndarray:
    n = len(freqs)
    out = np.zeros((2 * n + kernel_dim, 2 * n + kernel_dim))
    idx = 2 * np.arange(n)
    si = np.sin(freqs * s) / freqs
    ci = (1.0 - np.cos(freqs * s)) / freqs
    out[idx, idx] = si
    out[idx + 1, idx + 1] = si
    out[idx, idx + 1] = -ci
    out[idx + 1, idx] = ci
    out[2 * n :, 2 * n :] = s * np.eye(kernel_dim)
    return out


@dataclass(frozen=True, eq=False)
class SpectralForm:
    """Orthogonal Q with Q^T A Q = blockdiag(eta_j J, 0_k)."""

    frequencies: np.ndarray
    basis: np.ndarray
    kernel_dim: int

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def n_blocks(self) -> int:
        return len(self.frequencies)

    @property
    def planes(self) -> np.ndarray:
        """Columns spanning the rotation planes (the coimage)."""
        return self.basis[:, : 2 * self.n_blocks]

    @property
    def kernel(self) -> np.ndarray:
        return self.basis[:, 2 * self.n_blocks :]

    def blocks(self) -> np.ndarray:
        return block_matrix(self.frequencies, self.kernel_dim)

    def reconstruct(self) -> np.ndarray:
        return self.basis @ self.blocks() @ self.basis.T

    def exp(self, s: float) -> np.ndarray:
        """exp(sA), one rotation per plane."""
        return self.basis @ _rotations(self.frequencies, self.kernel_dim, s) @ self.basis.T

    def integrated_exp(self, s: float) -> np.ndarray:
        """Integral of exp(sigma A) for sigma in [0, s]."""
        rot = _integrated_rotations(self.frequencies, self.kernel_dim, s)
        return self.basis @ rot @ self.basis.T


def validate_skew(M: ArrayLike) -> SkewMatrix:
    """Check that M is skew within skew_tol (relative) and wrap it."""
    a = as_matrix(M)
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"matrix of shape {a.shape} is not square")
    if a.size == 0:
        return SkewMatrix(a)
    tol = get_tolerances().skew_tol
    deviation = float(np.abs(a + a.T).max())
    allowed = tol * max(1.0, float(np.abs(a).max()))
    if deviation > allowed:
        raise NotSkew(deviation, allowed)
    return SkewMatrix(a)


def ensure_skew(M) -> SkewMatrix:
    return M if isinstance(M, SkewMatrix) else validate_skew(M)


def expm_skew(A: SkewMatrix, s: float) -> np.ndarray:
    """exp(sA) evaluated through the spectral form."""
    return ensure_skew(A).spectral.exp(s)


def _sign_normalized(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if out[k, j] < 0:
            out[:, j] = -out[:, j]
    return out


def _clusters(vals: np.ndarray, gap: float) -> List[np.ndarray]:
    """Group indices of descending eigenvalues whose neighbours differ by <= gap."""
    groups: List[List[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[i - 1] - vals[i] > gap:
            groups.append([])
        groups[-1].append(i)
    return [np.array(g) for g in groups]


def _orthogonalize(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        v = v - basis @ (basis.T @ v)
    return v


def _pair_planes(a: np.ndarray, vals: np.ndarray, vecs: np.ndarray, cutoff: float) -> Tuple[np.ndarray, List[float]]:
    """Planes (x, Ax/eta) from eigenvectors of A^T A clearly above zero."""
    d = a.shape[0]
    gap = 1e3 * d * _EPS * vals[0]
    basis = np.zeros((d, 0))
    freqs: List[float] = []
    for group in _clusters(vals, gap):
        # eigenvalues within round-off of 0 are resolved on the restricted matrix
        if vals[group].min() <= gap:
            break
        # lexicographic order inside a repeated eigenspace
        cands = vecs[:, group]
        cands = cands[:, np.lexsort(np.round(cands, 12)[::-1])[::-1]]
        while basis.shape[1] + 2 <= d:
            residuals = [_orthogonalize(c, basis) for c in cands.T]
            norms = np.array([np.linalg.norm(r) for r in residuals])
            if len(norms) == 0 or norms.max() < 0.1:
                break
            pick = int(np.flatnonzero(norms >= 0.5 * norms.max())[0])
            x = residuals[pick] / norms[pick]
            ax = a @ x
            eta = float(np.linalg.norm(ax))
            if eta <= cutoff:
                return basis, freqs
            y = _orthogonalize(ax / eta, np.column_stack([basis, x]))
            y_norm = float(np.linalg.norm(y))
            if y_norm < 0.5:
                raise EigenFailure(f"A x left the plane complement (|y| = {y_norm:.3e})")
            basis = np.column_stack([basis, x, y / y_norm])
            freqs.append(float(basis[:, -1] @ a @ x))
    return basis, freqs


def _canonical(a: np.ndarray, cutoff: float) -> Tuple[np.ndarray, List[float]]:
    """Orthogonal basis (planes first, kernel last) and plane frequencies.

    Frequencies too small to resolve next to the largest one are found by
    restricting A to the complement of the resolved planes.
    """
    d = a.shape[0]
    if d < 2:
        return np.eye(d), []
    try:
        vals, vecs = linalg.eigh(a.T @ a)
    except linalg.LinAlgError as exc:
        raise EigenFailure(f"symmetric eigenproblem failed: {exc}") from exc

    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = _sign_normalized(vecs[:, order])
    if np.sqrt(max(vals[0], 0.0)) <= cutoff:
        return np.eye(d), []

    basis, freqs = _pair_planes(a, vals, vecs, cutoff)
    if not freqs:
        raise EigenFailure("no rotation plane found above the frequency floor")
    if basis.shape[1] == d:
        return basis, freqs

    rest = linalg.null_space(basis.T)
    sub = rest.T @ a @ rest
    sub_basis, sub_freqs = _canonical(0.5 * (sub - sub.T), cutoff)
    k = 2 * len(sub_freqs)
    basis = np.column_stack([basis, rest @ sub_basis[:, :k]])
    kernel = _sign_normalized(rest @ sub_basis[:, k:])
    return np.column_stack([basis, kernel]), freqs + sub_freqs


def spectral_form(A: SkewMatrix) -> SpectralForm:
    """Real canonical form of a skew matrix."""
    A = ensure_skew(A)
    a = A.array
    d = A.dim
    if d == 0:
        return SpectralForm(np.zeros(0), np.zeros((0, 0)), 0)

    top = float(np.linalg.norm(a, 2))
    cutoff = max(get_tolerances().freq_floor, 16 * d * _EPS * top)
    basis, freqs = _canonical(a, cutoff)
    n = len(freqs)
    if basis.shape != (d, d):
        raise EigenFailure("plane pairing did not produce a complete basis")

    order = np.argsort(-np.array(freqs), kind="stable")
    cols = np.concatenate([[2 * j, 2 * j + 1] for j in order]).astype(int) if n else []
    Q = np.column_stack([basis[:, cols], basis[:, 2 * n :]]) if n else basis
    logger.debug(f"spectral form: d={d}, n={n}, kernel={d - 2 * n}")
    return SpectralForm(np.array(freqs)[order], Q, d - 2 * n)


def char_poly(A: SkewMatrix) -> Polynomial:
    """det(A - xI) = (-1)^d x^k prod(x^2 + eta_j^2)."""
    sf = ensure_skew(A).spectral
    p = Polynomial([1.0])
    for eta in sf.frequencies:
        p = p * Polynomial([eta**2, 0.0, 1.0])
    p = p * Polynomial([0.0, 1.0]) ** sf.kernel_dim
    if sf.dim % 2:
        p = -p
    return p.trim(get_tolerances().poly_tol)


def restrict_to_coimage(B: SkewMatrix) -> Tuple[SkewMatrix, np.ndarray]:
    """Restrict B to the orthocomplement of its null space.

    Returns (A, embed) with embed^T embed = I and embed A embed^T = B.
    Invertible input comes back unchanged with embed = I.
    """
    B = ensure_skew(B)
    sf = B.spectral
    if sf.n_blocks == 0:
        raise ZeroMatrix("zero matrix has an empty coimage")
    if sf.kernel_dim == 0:
        return B, np.eye(B.dim)
    embed = sf.planes
    return SkewMatrix.trusted(embed.T @ B.array @ embed), embed


def is_invertible(A: SkewMatrix) -> bool:
    sf = ensure_skew(A).spectral
    floor = get_tolerances().freq_floor
    return sf.kernel_dim == 0 and bool(np.all(sf.frequencies > floor))


def imaginary_spectrum(A: SkewMatrix) -> np.ndarray:
    """Imaginary parts of the eigenvalues, sorted descending."""
    sf = ensure_skew(A).spectral
    values = np.concatenate([sf.frequencies, -sf.frequencies, np.zeros(sf.kernel_dim)])
    return np.sort(values)[::-1]
