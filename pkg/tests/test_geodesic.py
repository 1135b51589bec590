"""Tests for normal geodesics, the Hamiltonian oracle, lifts and lengths."""

import numpy as np
import pytest

from helicalcr.carnot import CarnotPoint, GeodesicIVP, free_nilpotent, heisenberg, new_algebra
from helicalcr.config import DEFAULT_SEED
from helicalcr.errors import (
    BasepointMismatch,
    DimensionMismatch,
    NotContact,
    NotHorizontal,
    SingularATau,
    UnnormalizedTau,
)
from helicalcr.geodesic import (
    GeodesicCase,
    NormalGeodesic,
    a_tau,
    cc_length,
    geodesic_closed_form,
    geodesic_to_marked_helical,
    hamiltonian,
    heisenberg_geodesic,
    heisenberg_ivp,
    horizontal_lift,
    marked_helical_to_geodesic,
    normalize_tau,
    ode_oracle,
    phase_state,
    to_classical_heisenberg,
    trajectory_table,
)
from helicalcr.helical import HelicalCR, MarkedHelicalCR
from helicalcr.skewlin import J, SkewMatrix
from helicalcr.verify import SUITES, random_contact_instance, random_free_instance, random_marked

GRID = np.linspace(0.0, 2 * np.pi, 13)


def circle(s):
    return np.array([np.cos(s), np.sin(s)])


def circle_dot(s):
    return np.array([-np.sin(s), np.cos(s)])


def assert_oracle_matches(g, ivp):
    grid = np.linspace(0.0, 2 * np.pi, 17)
    states = ode_oracle(g, ivp, grid)
    geo = geodesic_closed_form(g, ivp)
    for s, state in zip(grid, states):
        gap = np.concatenate([state.x - geo.x(s), state.t - geo.t(s), state.xi - geo.xi(s)])
        assert np.abs(gap).max() <= 1e-6
    energies = [hamiltonian(g, state) for state in states]
    assert max(energies) - min(energies) <= 1e-8


class TestHamiltonian:
    def test_zero_state(self):
        g = heisenberg(1)
        assert hamiltonian(g, phase_state(g, [0, 0], [0], [0, 0], [1])) == 0.0

    def test_heisenberg_unit_momentum(self):
        g = heisenberg(1)
        assert hamiltonian(g, phase_state(g, [0, 0], [0], [1, 0], [1])) == pytest.approx(0.5)

    def test_a_tau_combines_structure_matrices(self):
        g = free_nilpotent(3)
        expected = 1.0 * g.C[0] + 2.0 * g.C[1] - 0.5 * g.C[2]
        assert np.allclose(a_tau(g, [1.0, 2.0, -0.5]), expected)

    def test_dimension_checked(self):
        g = heisenberg(1)
        with pytest.raises(DimensionMismatch):
            hamiltonian(g, phase_state(free_nilpotent(3), [0, 0, 0], [0, 0, 0], [0, 0, 0], [1, 0, 0]))


class TestClosedForm:
    def test_initial_point(self, contact_instance):
        g, ivp = contact_instance
        P = geodesic_closed_form(g, ivp)(0.0)
        assert np.allclose(P.x, ivp.x0, atol=1e-12)
        assert np.allclose(P.t, ivp.t0, atol=1e-12)

    def test_straight(self):
        g = heisenberg(1)
        ivp = GeodesicIVP([1.0, 2.0], [0.5], [0.3, -0.4], [0.0])
        geo = NormalGeodesic(g, ivp)
        assert geo.case is GeodesicCase.STRAIGHT
        assert np.allclose(geo(2.0).x, [1.6, 1.2])

    def test_zero_ivp_is_constant(self):
        g = heisenberg(2)
        geo = NormalGeodesic(g, GeodesicIVP(np.zeros(4), [0.0], np.zeros(4), [0.0]))
        for s in GRID:
            assert np.allclose(geo(s).as_vector(), 0.0)

    def test_constant_speed(self, contact_instance):
        g, ivp = contact_instance
        geo = NormalGeodesic(g, ivp)
        speeds = [np.linalg.norm(geo.zeta(s)) for s in GRID]
        assert np.allclose(speeds, geo.speed)

    def test_dimensions_checked(self):
        with pytest.raises(DimensionMismatch):
            NormalGeodesic(heisenberg(1), GeodesicIVP([0, 0, 0], [0], [0, 0, 0], [1]))

    def test_singular_a_tau_warns(self):
        g, ivp = random_free_instance(np.random.default_rng(3))
        with pytest.warns(SingularATau):
            geo = NormalGeodesic(g, ivp)
        assert geo.case is GeodesicCase.SPLIT


class TestHeisenberg:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_classical_formula(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.standard_normal(2), rng.standard_normal(2), float(rng.standard_normal())
        g, ivp = heisenberg_ivp(a, b, c)
        geo = NormalGeodesic(g, ivp)
        for s in GRID:
            ours = to_classical_heisenberg(geo(s))
            expected = heisenberg_geodesic(a, b, c, s)
            assert np.abs(ours.as_vector() - expected.as_vector()).max() <= 1e-9

    def test_origin_family(self):
        a = np.array([0.6, -0.8])
        for s in GRID:
            P = heisenberg_geodesic(a, -a, 0.0, s)
            rotated = np.array([np.cos(s), -np.sin(s)])
            assert np.allclose(P.x, a - (a[0] * rotated + a[1] * np.array([np.sin(s), np.cos(s)])))
            assert P.t == pytest.approx(np.array([s - np.sin(s)]))

    def test_origin_at_zero(self):
        P = heisenberg_geodesic([1.0, 0.0], [-1.0, 0.0], 0.0, 0.0)
        assert np.allclose(P.as_vector(), 0.0)

    def test_half_turn(self):
        P = heisenberg_geodesic([1.0, 0.0], [-1.0, 0.0], 0.0, np.pi)
        assert np.allclose(P.x, [2.0, 0.0])
        assert P.t == pytest.approx(np.array([np.pi]))


class TestNormalizeTau:
    @pytest.mark.parametrize("tau", [2.0, -0.5])
    def test_rescaling(self, tau):
        g = new_algebra([np.array([[0.0, -1.5], [1.5, 0.0]])])
        ivp = GeodesicIVP([0.2, -0.1], [0.3], [1.0, 0.4], [tau])
        g2, ivp2, lam = normalize_tau(g, ivp)
        assert ivp2.tau0 == pytest.approx(np.array([1.0]))
        assert lam == pytest.approx(abs(tau))
        original, scaled = NormalGeodesic(g, ivp), NormalGeodesic(g2, ivp2)
        for s in GRID:
            assert np.allclose(scaled(lam * s).x, original(s).x, atol=1e-10)
            assert np.allclose(scaled(lam * s).t, np.sign(tau) * original(s).t, atol=1e-10)

    def test_zero_tau_unchanged(self):
        g = heisenberg(1)
        ivp = GeodesicIVP([0.0, 0.0], [0.0], [1.0, 0.0], [0.0])
        assert normalize_tau(g, ivp) == (g, ivp, 1.0)

    def test_needs_contact(self):
        g = free_nilpotent(3)
        with pytest.raises(NotContact):
            normalize_tau(g, GeodesicIVP(np.zeros(3), np.zeros(3), np.zeros(3), np.ones(3)))


class TestOracle:
    def test_contact_matches_closed_form(self, contact_instance):
        g, ivp = contact_instance
        grid = [-1.0, -0.25, 0.0, 0.5, 1.0, 2.0]
        states = ode_oracle(g, ivp, grid)
        geo = NormalGeodesic(g, ivp)
        H0 = hamiltonian(g, phase_state(g, ivp.x0, ivp.t0, ivp.xi0, ivp.tau0))
        for s, state in zip(grid, states):
            assert np.abs(state.x - geo.x(s)).max() <= 1e-7
            assert np.abs(state.t - geo.t(s)).max() <= 1e-7
            assert hamiltonian(g, state) == pytest.approx(H0, abs=1e-9)
            assert np.array_equal(state.tau, ivp.tau0)

    def test_free_matches_closed_form(self):
        g, ivp = random_free_instance(np.random.default_rng(11))
        grid = [0.0, 0.5, 1.5]
        states = ode_oracle(g, ivp, grid)
        with pytest.warns(SingularATau):
            geo = NormalGeodesic(g, ivp)
        for s, state in zip(grid, states):
            assert np.abs(state.x - geo.x(s)).max() <= 1e-7
            assert np.abs(state.t - geo.t(s)).max() <= 1e-7
            assert np.abs(state.xi - geo.xi(s)).max() <= 1e-7

    def test_unsorted_grid(self):
        g, ivp = heisenberg_ivp([1.0, 0.0], [0.0, 1.0], 0.0)
        with pytest.raises(DimensionMismatch):
            ode_oracle(g, ivp, [1.0, 0.0])

    @pytest.mark.parametrize("seed", range(20))
    def test_random_contact_over_full_turn(self, seed):
        g, ivp = random_contact_instance(np.random.default_rng(seed))
        assert_oracle_matches(g, ivp)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.filterwarnings("ignore::helicalcr.errors.SingularATau")
    def test_random_free_over_full_turn(self, seed):
        g, ivp = random_free_instance(np.random.default_rng(seed))
        assert_oracle_matches(g, ivp)

    @pytest.mark.parametrize("index", [17, 21])
    def test_short_final_steps_accept_round_off(self, index):
        # the default-seed oracle instances whose last steps end near a grid point
        child = np.random.SeedSequence(DEFAULT_SEED).spawn(len(SUITES))[list(SUITES).index("oracle")]
        rng = np.random.default_rng(child)
        instances = [random_contact_instance(rng) for _ in range(index + 1)]
        assert_oracle_matches(*instances[index])



class TestHorizontalLift:
    def test_constant_curve(self):
        g = heisenberg(1)
        P = CarnotPoint([1.0, 2.0], [0.5])
        lift = horizontal_lift(g, lambda s: np.array([1.0, 2.0]), (0.0, 1.0), P)
        assert np.allclose(lift(1.0).as_vector(), P.as_vector())

    def test_circle_matches_oracle(self):
        g = heisenberg(1)
        lift = horizontal_lift(g, circle, (0.0, 2 * np.pi), CarnotPoint([1.0, 0.0], [0.0]), circle_dot)
        # the circle is the geodesic with tau = 1 and zeta0 = (0, 1)
        ivp = GeodesicIVP([1.0, 0.0], [0.0], [0.0, 0.5], [1.0])
        (state,) = ode_oracle(g, ivp, [2 * np.pi])
        assert lift(2 * np.pi).t == pytest.approx(state.t, abs=1e-8)
        assert lift(2 * np.pi).t == pytest.approx(np.array([np.pi]), abs=1e-8)

    def test_basepoint_mismatch(self):
        with pytest.raises(BasepointMismatch):
            horizontal_lift(heisenberg(1), circle, (0.0, 1.0), CarnotPoint([0.0, 0.0], [0.0]))


class TestLength:
    def test_straight_segment(self):
        g = heisenberg(1)
        assert cc_length(g, lambda s: CarnotPoint([s, 0.0], [0.0]), (0.0, 1.0)) == pytest.approx(1.0)

    def test_geodesic(self, contact_instance):
        g, ivp = contact_instance
        geo = NormalGeodesic(g, ivp)
        assert cc_length(g, geo, (0.0, 1.5)) == pytest.approx(1.5 * geo.speed, rel=1e-6)

    def test_circle_lift(self):
        g = heisenberg(1)
        lift = horizontal_lift(g, circle, (0.0, 2 * np.pi), CarnotPoint([1.0, 0.0], [0.0]), circle_dot)

        def velocity(s):
            return np.concatenate([circle_dot(s), [0.5]])

        assert cc_length(g, lift, (0.0, 2 * np.pi), curve_dot=velocity) == pytest.approx(2 * np.pi)

    def test_not_horizontal(self):
        g = heisenberg(1)
        with pytest.raises(NotHorizontal):
            cc_length(g, lambda s: CarnotPoint([s, 0.0], [s]), (0.0, 1.0))


class TestMarkedCorrespondence:
    def test_projections_coincide(self, rng):
        mh = random_marked(rng, 2)
        g, ivp = marked_helical_to_geodesic(mh)
        geo = NormalGeodesic(g, ivp)
        mu = mh.curve()
        for s in GRID:
            assert np.allclose(geo.x(s), mu(s)[:4], atol=1e-9)

    def test_heisenberg_helix(self):
        # a - a e^{-is} and c + s
        a = np.array([1.0, 0.0])
        mh = MarkedHelicalCR(HelicalCR(SkewMatrix(-J), [1.0]), J @ a, [0.0, 0.0], [0.0])
        g, ivp = marked_helical_to_geodesic(mh)
        geo = NormalGeodesic(g, ivp)
        for s in GRID:
            assert np.allclose(geo.x(s), heisenberg_geodesic(a, -a, 0.0, s).x, atol=1e-9)

    def test_round_trip(self, rng):
        mh = random_marked(rng, 3)
        g, ivp = marked_helical_to_geodesic(mh)
        back = geodesic_to_marked_helical(g, ivp, mh.base.w)
        assert np.abs(back.v - mh.v).max() <= 1e-12
        assert np.abs(back.u0 - mh.u0).max() <= 1e-12

    def test_heisenberg_origin(self):
        back = geodesic_to_marked_helical(heisenberg(1), GeodesicIVP([0, 0], [0], [1, 0], [1]), [1.0])
        assert np.allclose(back.v, [1.0, 0.0])

    def test_zero_ivp(self):
        back = geodesic_to_marked_helical(heisenberg(1), GeodesicIVP([0, 0], [0], [0, 0], [1]), [1.0])
        assert not np.any(back.v)
        assert not np.any(back.u0)

    def test_unnormalized_tau_warns(self):
        with pytest.warns(UnnormalizedTau, match="tau0 = 2"):
            back = geodesic_to_marked_helical(heisenberg(1), GeodesicIVP([0, 0], [0.5], [1, 0], [2.0]), [1.0])
        assert np.allclose(back.w0, 0.5 * back.base.w)

    def test_unit_tau_is_silent(self, recwarn):
        geodesic_to_marked_helical(heisenberg(1), GeodesicIVP([0, 0], [0], [1, 0], [1]), [1.0])
        assert not [w for w in recwarn if issubclass(w.category, UnnormalizedTau)]

    def test_needs_contact(self):
        g = free_nilpotent(3)
        with pytest.raises(NotContact):
            geodesic_to_marked_helical(g, GeodesicIVP(np.zeros(3), np.zeros(3), np.zeros(3), np.ones(3)), [1.0])


class TestTrajectoryTable:
    def test_header_and_energy(self):
        g, ivp = heisenberg_ivp([1.0, 0.0], [0.0, 1.0], 0.0)
        header, rows = trajectory_table(NormalGeodesic(g, ivp), GRID)
        assert header == ["s", "x1", "x2", "t1", "xi1", "xi2", "H"]
        assert rows.shape == (len(GRID), 7)
        assert np.allclose(rows[:, -1], rows[0, -1])
        assert np.allclose(rows[:, 0], GRID)
