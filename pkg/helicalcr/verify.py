"""Built-in verification suites.

Each suite draws its random instances from its own child of the run seed, so
suites are independent of execution order and a run is reproducible.
"""

import logging
import time
import warnings
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Tuple, TypeVar

import numpy as np

from .carnot import (
    GeodesicIVP,
    StratifiedAlgebra2,
    algebra_to_helical,
    algebra_to_tuple,
    assemble_from_tuple,
    free_nilpotent,
    helical_to_algebra,
    new_algebra,
)
from .config import DEFAULT_SEED, Tolerances, get_tolerances, use_tolerances
from .errors import HelicalError, Inconclusive, SingularATau
from .geodesic import (
    NormalGeodesic,
    geodesic_to_marked_helical,
    hamiltonian,
    heisenberg_geodesic,
    heisenberg_ivp,
    marked_helical_to_geodesic,
    ode_oracle,
    to_classical_heisenberg,
)
from .helical import (
    CanonicalDecomposition,
    HelicalCR,
    MarkedHelicalCR,
    Q0Curve,
    Q1Curve,
    ambient_generator,
    decompose,
    derivative_q0,
    equivalent,
    eval_q0,
    eval_q1,
    fit_from_samples,
    gram_e_kl,
    is_injective,
)
from .homcurves import (
    affine_span_gap,
    build_L_m,
    char_poly_L_m,
    expected_spectrum_L_m,
    gamma_m_hyperplane_check,
    gamma_m_samples,
    juxtapose,
    postcompose_orthogonal,
    spectrum_L_m,
    tensor_curve,
    tensor_eval,
)
from .models import SuiteResult, VerificationReport
from .skewlin import SkewMatrix, block_matrix, char_poly, imaginary_spectrum, validate_skew

logger = logging.getLogger(__name__)

T = TypeVar("T")


# Random instances


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def random_frequencies(
    rng: np.random.Generator, n: int, low: float = 0.5, high: float = 2.5, gap: float = 0.2
) -> np.ndarray:
    """n frequencies in [low, high], pairwise at least gap apart, descending."""
    while True:
        freqs = np.sort(rng.uniform(low, high, n))[::-1]
        if n < 2 or np.min(-np.diff(freqs)) >= gap:
            return freqs


def random_invertible_skew(rng: np.random.Generator, n: int, freqs: Optional[np.ndarray] = None) -> SkewMatrix:
    """Q blockdiag(eta_j J) Q^T with a random orthogonal Q."""
    freqs = random_frequencies(rng, n) if freqs is None else np.asarray(freqs, dtype=float)
    Q = random_orthogonal(rng, 2 * n)
    return validate_skew(Q @ block_matrix(freqs) @ Q.T)


def random_helical(rng: np.random.Generator, n: int, p: int, framed: bool = True) -> HelicalCR:
    basis = random_orthogonal(rng, 2 * n + p) if framed else None
    return HelicalCR(random_invertible_skew(rng, n), rng.standard_normal(p), basis)


def random_q0(rng: np.random.Generator, n_max: int = 4, p_max: int = 2) -> Q0Curve:
    n = int(rng.integers(1, n_max + 1))
    p = int(rng.integers(0, p_max + 1))
    return Q0Curve(random_helical(rng, n, p), rng.standard_normal(2 * n))


def random_marked(rng: np.random.Generator, n: int) -> MarkedHelicalCR:
    h = random_helical(rng, n, 1, framed=False)
    return MarkedHelicalCR(h, rng.standard_normal(2 * n), rng.standard_normal(2 * n), rng.standard_normal(1))


def random_contact_instance(rng: np.random.Generator, n_max: int = 4) -> Tuple[StratifiedAlgebra2, GeodesicIVP]:
    n = int(rng.integers(1, n_max + 1))
    g = new_algebra([random_invertible_skew(rng, n, random_frequencies(rng, n, high=2.0)).array])
    tau = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    ivp = GeodesicIVP(rng.standard_normal(2 * n), rng.standard_normal(1), rng.standard_normal(2 * n), [tau])
    return g, ivp


def random_free_instance(rng: np.random.Generator) -> Tuple[StratifiedAlgebra2, GeodesicIVP]:
    g = free_nilpotent(3)
    ivp = GeodesicIVP(rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(3), rng.uniform(-1, 1, 3))
    return g, ivp


def random_tuple(rng: np.random.Generator, n: int, p: int) -> List[Q1Curve]:
    W = random_orthogonal(rng, p) * rng.uniform(0.5, 2.0, p)
    curves = []
    for alpha in range(p):
        h = HelicalCR(random_invertible_skew(rng, n), W[:, alpha])
        curves.append(Q1Curve(h, rng.standard_normal(2 * n), rng.standard_normal(2 * n), rng.standard_normal(p)))
    return curves


def unit_curve(c: Q0Curve) -> Q0Curve:
    """c scaled onto the unit sphere."""
    h = c.structure
    r = float(np.linalg.norm(eval_q0(c, 0.0)))
    return Q0Curve(HelicalCR(h.A, h.w / r, h.basis), c.v / r)


def derivative_norm_spread(c: Q0Curve, max_order: int, grid: np.ndarray) -> float:
    """Largest relative standard deviation of |D^k gamma| over the grid, k <= max_order."""
    spread = 0.0
    for k in range(max_order + 1):
        norms = np.array([np.linalg.norm(derivative_q0(c, k, s)) for s in grid])
        spread = max(spread, float(np.std(norms)) / max(1.0, float(np.mean(norms))))
    return spread


# Suites


class _Suite:
    def __init__(self, name: str):
        self.name = name
        self.cases = 0
        self.max_residual = 0.0
        self.failures: List[str] = []

    def record(self, label: str, residual: float, limit: float):
        self.cases += 1
        residual = float(residual)
        self.max_residual = max(self.max_residual, residual) if np.isfinite(residual) else np.inf
        if not residual <= limit:
            self.failures.append(f"{label}: residual {residual:.3e} exceeds {limit:.1e}")

    def expect(self, label: str, condition: bool, detail: str = ""):
        self.cases += 1
        if not condition:
            self.failures.append(f"{label}: {detail or 'check failed'}")

    @contextmanager
    def case(self, label: str) -> Iterator[None]:
        try:
            yield
        except (HelicalError, np.linalg.LinAlgError) as exc:
            self.cases += 1
            self.failures.append(f"{label}: {type(exc).__name__}: {exc}")

    def build(self, label: str, factory: Callable[..., T], *args) -> Optional[T]:
        """Construct an instance inside a case; None when construction failed."""
        with self.case(f"{label} setup"):
            return factory(*args)
        return None

    def result(self) -> SuiteResult:
        return SuiteResult(
            name=self.name,
            passed=not self.failures,
            cases=self.cases,
            max_residual=self.max_residual,
            failures=self.failures,
        )


_PRINTED_L = {
    1: [[0, -1], [1, 0]],
    2: [[0, -np.sqrt(2), 0], [np.sqrt(2), 0, -np.sqrt(2)], [0, np.sqrt(2), 0]],
    3: [
        [0, -np.sqrt(3), 0, 0],
        [np.sqrt(3), 0, -2, 0],
        [0, 2, 0, -np.sqrt(3)],
        [0, 0, np.sqrt(3), 0],
    ],
}


def suite_generator_matrices(suite: _Suite, rng: np.random.Generator, quick: bool):
    for m, expected in _PRINTED_L.items():
        with suite.case(f"L_{m}"):
            suite.record(f"L_{m} entries", np.abs(build_L_m(m).array - np.array(expected)).max(), 1e-12)


def suite_spectra(suite: _Suite, rng: np.random.Generator, quick: bool):
    for m in range(1, 7 if quick else 13):
        with suite.case(f"L_{m}"):
            values = spectrum_L_m(m)
            suite.record(f"spectrum L_{m}", np.abs(values - expected_spectrum_L_m(m)).max(), 1e-8)
            computed = char_poly(build_L_m(m)).coef
            closed = char_poly_L_m(m).coef
            if len(computed) != len(closed):
                suite.expect(f"char poly L_{m}", False, f"degree {len(computed) - 1} != {len(closed) - 1}")
                continue
            suite.record(f"char poly L_{m}", np.abs(computed - closed).max() / np.abs(closed).max(), 1e-6)


def suite_heisenberg(suite: _Suite, rng: np.random.Generator, quick: bool):
    grid = np.linspace(0.0, 2 * np.pi, 41)
    for i in range(5 if quick else 20):
        a, b, c = rng.standard_normal(2), rng.standard_normal(2), float(rng.standard_normal())
        with suite.case(f"instance {i}"):
            geodesic = NormalGeodesic(*heisenberg_ivp(a, b, c))
            gap = max(
                float(np.abs(to_classical_heisenberg(geodesic(s)).as_vector() - heisenberg_geodesic(a, b, c, s).as_vector()).max())
                for s in grid
            )
            suite.record(f"heisenberg {i}", gap, 1e-9)
    a = rng.standard_normal(2)
    with suite.case("origin family"):
        geodesic = NormalGeodesic(*heisenberg_ivp(a, -a, 0.0))
        za = complex(*a)
        gap = 0.0
        for s in grid:
            z = za - za * np.exp(-1j * s)
            expected = np.array([z.real, z.imag, abs(za) ** 2 * (s - np.sin(s))])
            gap = max(gap, float(np.abs(to_classical_heisenberg(geodesic(s)).as_vector() - expected).max()))
        suite.record("origin family", gap, 1e-9)


def suite_oracle(suite: _Suite, rng: np.random.Generator, quick: bool):
    grid = np.linspace(0.0, 2 * np.pi, 17)
    factories = [("contact", random_contact_instance)] * (5 if quick else 50)
    factories += [("free", random_free_instance)] * (2 if quick else 10)
    for i, (kind, factory) in enumerate(factories):
        instance = suite.build(f"{kind} {i}", factory, rng)
        if instance is None:
            continue
        g, ivp = instance
        with suite.case(f"{kind} {i}"), warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularATau)
            geodesic = NormalGeodesic(g, ivp)
            states = ode_oracle(g, ivp, grid)
            gap = max(
                float(np.abs(np.concatenate([st.x - geodesic.x(s), st.t - geodesic.t(s), st.xi - geodesic.xi(s)])).max())
                for s, st in zip(grid, states)
            )
            suite.record(f"{kind} {i} closed form vs oracle", gap, 1e-6)
            energies = [hamiltonian(g, st) for st in states]
            suite.record(f"{kind} {i} energy drift", max(energies) - min(energies), 1e-8)
            suite.expect(f"{kind} {i} tau", all(np.array_equal(st.tau, ivp.tau0) for st in states), "tau changed")


def suite_q0_invariants(suite: _Suite, rng: np.random.Generator, quick: bool):
    grid = np.linspace(0.0, 7.0, 100)
    for i in range(20 if quick else 100):
        c = suite.build(f"curve {i}", random_q0, rng)
        if c is None:
            continue
        with suite.case(f"curve {i}"):
            suite.record(f"curve {i} derivative norms", derivative_norm_spread(c, 6, grid), 1e-9)
            parity, gram = 0.0, 0.0
            for k in range(5):
                for l in range(5):
                    for s in grid[:4]:
                        dk, dl = derivative_q0(c, k, s), derivative_q0(c, l, s)
                        scale = max(1.0, float(np.linalg.norm(dk) * np.linalg.norm(dl)))
                        inner = float(dk @ dl)
                        if (k - l) % 2:
                            parity = max(parity, abs(inner) / scale, abs(gram_e_kl(c, k, l)))
                        else:
                            gram = max(gram, abs(inner - gram_e_kl(c, k, l)) / scale)
            suite.record(f"curve {i} parity zeros", parity, 1e-12)
            suite.record(f"curve {i} gram blocks", gram, 1e-9)


def _random_decomposition_case(rng: np.random.Generator) -> Tuple[Q0Curve, np.ndarray]:
    n = int(rng.integers(1, 4))
    freqs = random_frequencies(rng, n)
    p = int(rng.integers(0, 3))
    h = HelicalCR(random_invertible_skew(rng, n, freqs), rng.standard_normal(p), random_orthogonal(rng, 2 * n + p))
    return Q0Curve(h, rng.standard_normal(2 * n)), freqs


def _repeated_frequency_case(rng: np.random.Generator) -> Tuple[Q0Curve, np.ndarray]:
    h = HelicalCR(random_invertible_skew(rng, 2, [1.5, 1.5]), rng.standard_normal(1), random_orthogonal(rng, 5))
    return Q0Curve(h, rng.standard_normal(4)), np.array([1.5])


def _singular_generator_case(rng: np.random.Generator) -> Tuple[Q0Curve, np.ndarray]:
    h = HelicalCR(random_invertible_skew(rng, 1, [1.2]), rng.standard_normal(2), random_orthogonal(rng, 4))
    return Q0Curve(h, rng.standard_normal(2)), np.array([1.2])


def suite_decomposition(suite: _Suite, rng: np.random.Generator, quick: bool):
    grid = np.linspace(0.0, 4 * np.pi, 160)
    count = 10 if quick else 50
    factories = [(f"random {i}", _random_decomposition_case) for i in range(count - 2)]
    factories += [("repeated frequency", _repeated_frequency_case), ("singular generator", _singular_generator_case)]
    for label, factory in factories:
        instance = suite.build(label, factory, rng)
        if instance is None:
            continue
        c, freqs = instance
        points = suite.build(f"{label} samples", lambda: np.array([eval_q0(c, s) for s in grid]))
        if points is None:
            continue
        with suite.case(f"{label} decompose"):
            dec, curve = decompose(SkewMatrix.trusted(ambient_generator(c)), eval_q0(c, 0.0))
            _record_recovery(suite, f"{label} decompose", dec.frequencies, freqs, curve, grid, points)
        with suite.case(f"{label} fit"):
            fitted = fit_from_samples(list(zip(grid, points)))
            dec, _ = decompose(SkewMatrix.trusted(ambient_generator(fitted)), eval_q0(fitted, 0.0))
            _record_recovery(suite, f"{label} fit", dec.frequencies, freqs, fitted, grid, points)


def _record_recovery(suite, label, found, expected, curve, grid, points):
    if len(found) != len(expected):
        suite.expect(f"{label} frequencies", False, f"found {np.round(found, 9)}, expected {expected}")
        return
    suite.record(f"{label} frequencies", np.abs(np.asarray(found) - expected).max(), 1e-6)
    rebuilt = np.array([eval_q0(curve, s) for s in grid])
    suite.record(f"{label} reconstruction", np.sqrt(np.mean(np.sum((rebuilt - points) ** 2, axis=1))), 1e-9)


def suite_correspondences(suite: _Suite, rng: np.random.Generator, quick: bool):
    grid = np.linspace(0.0, 2 * np.pi, 13)
    count = 4 if quick else 15
    for i in range(count):
        n = int(rng.integers(1, 4))
        with suite.case(f"helical {i}"):
            h = random_helical(rng, n, 1, framed=False)
            g, _ = helical_to_algebra(h)
            back = algebra_to_helical(g, h.w)
            same, lam = equivalent(h, back)
            suite.expect(f"helical {i} equivalence", same and lam is not None and abs(lam - 1.0) <= 1e-9, f"lambda={lam}")
            suite.record(f"helical {i} spectra", np.abs(imaginary_spectrum(h.A) - imaginary_spectrum(back.A)).max(), 1e-8)
        with suite.case(f"marked {i}"):
            mh = random_marked(rng, n)
            g, ivp = marked_helical_to_geodesic(mh)
            back = geodesic_to_marked_helical(g, ivp, mh.base.w)
            gap = max(np.abs(back.v - mh.v).max(), np.abs(back.u0 - mh.u0).max())
            suite.record(f"marked {i} round trip", gap, 1e-12)
            geodesic, mu = NormalGeodesic(g, ivp), mh.curve()
            projection = max(float(np.abs(eval_q1(mu, s)[: 2 * n] - geodesic.x(s)).max()) for s in grid)
            suite.record(f"marked {i} horizontal projections", projection, 1e-9)
        with suite.case(f"tuple {i}"):
            p = int(rng.integers(1, min(3, n * (2 * n - 1)) + 1))
            curves = random_tuple(rng, n, p)
            assembled = assemble_from_tuple(curves)
            back = algebra_to_tuple(assembled.algebra, assembled.ivps)
            gap = max(float(np.abs(c.structure.A.array - b.structure.A.array).max()) for c, b in zip(curves, back))
            suite.record(f"tuple {i} structure matrices", gap, 1e-9)


def suite_injectivity(suite: _Suite, rng: np.random.Generator, quick: bool):
    def curve(freqs):
        A = SkewMatrix(block_matrix(freqs))
        return Q0Curve(HelicalCR(A, []), np.tile([1.0, 0.0], len(freqs)))

    for freqs in ([1.0, 2.0], [2.0, 3.0, 6.0]):
        with suite.case(f"frequencies {freqs}"):
            c = curve(freqs)
            verdict = is_injective(c)
            suite.expect(f"{freqs} periodic", not verdict.injective, "reported injective")
            if verdict.period is not None:
                suite.record(f"{freqs} period witness", np.linalg.norm(c(verdict.period) - c(0.0)), 1e-8)
    with suite.case("skew line"):
        verdict = is_injective(curve([1.0, np.sqrt(2.0)]))
        suite.expect("(1, sqrt 2) injective", verdict.injective, "reported periodic")
    eta = 1.0 - 1.0 / 999983
    near = CanonicalDecomposition(
        frequencies=np.array([1.0, eta]),
        amplitudes=np.ones(2),
        x=np.eye(4)[[0, 2]],
        y=-np.eye(4)[[1, 3]],
        v=np.array([1.0, 0.0, 1.0, 0.0]),
        w=np.zeros(0),
        change_of_basis=np.eye(4),
    )
    try:
        is_injective(near)
    except Inconclusive:
        suite.expect("near-rational ratio", True)
    except HelicalError as exc:
        suite.expect("near-rational ratio", False, f"{type(exc).__name__}: {exc}")
    else:
        suite.expect("near-rational ratio", False, "returned a verdict")


def suite_hyperplanes(suite: _Suite, rng: np.random.Generator, quick: bool):
    with suite.case("gamma_2"):
        plane = gamma_m_hyperplane_check(2)
        # x0 + x2 = 1 after normalization
        suite.record("gamma_2 plane", np.abs(plane.normal / plane.offset - [1.0, 0.0, 1.0]).max(), 1e-9)
        suite.record("gamma_2 residual", plane.residual, 1e-9)
    with suite.case("gamma_4"):
        plane = gamma_m_hyperplane_check(4)
        suite.record("gamma_4 residual", plane.residual, 1e-9)
    with suite.case("gamma_3"):
        gap = affine_span_gap(gamma_m_samples(3, np.linspace(0.0, 2 * np.pi, 50, endpoint=False)))
        suite.expect("gamma_3 spans", gap > 1e-3, f"moment singular value {gap:.3e}")


def suite_closure(suite: _Suite, rng: np.random.Generator, quick: bool):
    grid = np.linspace(0.0, 5.0, 12)
    for i in range(3 if quick else 10):
        c1 = suite.build(f"closure {i} first", random_q0, rng, 2, 1)
        c2 = suite.build(f"closure {i} second", random_q0, rng, 2, 1)
        if c1 is None or c2 is None:
            continue
        with suite.case(f"closure {i}"):
            T = random_orthogonal(rng, c1.d)
            suite.record(f"{i} postcomposition", derivative_norm_spread(postcompose_orthogonal(T, c1), 4, grid), 1e-8)
            theta = float(rng.uniform(0, 2 * np.pi))
            suite.record(f"{i} juxtaposition", derivative_norm_spread(juxtapose(theta, c1, c2), 4, grid), 1e-8)
            tc = tensor_curve(c1, c2)
            suite.record(f"{i} tensor", derivative_norm_spread(tc, 4, grid), 1e-8)
            suite.record(f"{i} tensor evaluation", max(np.abs(tc(s) - tensor_eval(c1, c2, s)).max() for s in grid), 1e-9)
        with suite.case(f"product rule {i}"):
            u1, u2 = unit_curve(c1), unit_curve(c2)
            law = 0.0
            for s in grid:
                f, df = eval_q0(u1, s), derivative_q0(u1, 1, s)
                h, dh = eval_q0(u2, s), derivative_q0(u2, 1, s)
                lhs = np.linalg.norm(np.kron(df, h) + np.kron(f, dh)) ** 2
                rhs = (df @ df) * (h @ h) + (f @ f) * (dh @ dh)
                law = max(law, abs(lhs - rhs) / max(1.0, rhs))
            suite.record(f"{i} first-derivative law", law, 1e-9)


SUITES: Dict[str, Callable[[_Suite, np.random.Generator, bool], None]] = {
    "generator-matrices": suite_generator_matrices,
    "spectra": suite_spectra,
    "heisenberg": suite_heisenberg,
    "oracle": suite_oracle,
    "q0-invariants": suite_q0_invariants,
    "decomposition": suite_decomposition,
    "correspondences": suite_correspondences,
    "injectivity": suite_injectivity,
    "hyperplanes": suite_hyperplanes,
    "closure": suite_closure,
}


def run_verification(
    seed: int = DEFAULT_SEED,
    quick: bool = False,
    tolerances: Optional[Tolerances] = None,
    only: Optional[List[str]] = None,
) -> VerificationReport:
    """Run the suites under the given tolerances; failures become report content."""
    tolerances = tolerances or get_tolerances()
    names = only or list(SUITES)
    children = dict(zip(SUITES, np.random.SeedSequence(seed).spawn(len(SUITES))))
    results = []
    with use_tolerances(tolerances):
        for name in names:
            suite = _Suite(name)
            start = time.perf_counter()
            SUITES[name](suite, np.random.default_rng(children[name]), quick)
            result = suite.result()
            logger.info(
                f"suite {name}: {'pass' if result.passed else 'FAIL'} "
                f"({result.cases} checks, max residual {result.max_residual:.3e}, {time.perf_counter() - start:.1f}s)"
            )
            results.append(result)
    return VerificationReport(seed=seed, quick=quick, tolerances=tolerances, suites=results)
