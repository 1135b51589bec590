"""Tests for helical structures and Q0/Q1 curves."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helicalcr.errors import (
    DegenerateHorizontal,
    DimensionMismatch,
    FitFailed,
    InsufficientSamples,
    InvalidDegree,
    NotInvertible,
    NotOrthogonal,
)
from helicalcr.helical import (
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
    minimal_annihilating_poly,
    plane_projections,
    reparameterize,
)
from helicalcr.homcurves import build_L_m, gamma_m_eval
from helicalcr.skewlin import J, SkewMatrix, block_matrix
from helicalcr.verify import random_q0


def circle(w=()):
    return Q0Curve(HelicalCR(SkewMatrix(J), list(w)), [1.0, 0.0])


def blocks(freqs, v, w=()):
    return Q0Curve(HelicalCR(SkewMatrix(block_matrix(freqs)), list(w)), v)


def samples_of(f, count=50, end=2 * np.pi):
    return [(s, f(s)) for s in np.linspace(0.0, end, count)]


class TestHelicalCR:
    def test_dimensions(self):
        h = HelicalCR(SkewMatrix(block_matrix([1.0, 2.0])), [1.0, 0.5])
        assert (h.n, h.p, h.d) == (2, 2, 6)
        assert h.completely_nontrivial
        assert np.array_equal(h.basis, np.eye(6))

    def test_odd_generator_rejected(self):
        with pytest.raises(NotInvertible):
            HelicalCR(build_L_m(2), [1.0])

    def test_singular_generator_rejected(self):
        with pytest.raises(NotInvertible):
            HelicalCR(SkewMatrix(block_matrix([1.0, 0.0])), [])

    def test_basis_must_be_orthogonal(self):
        with pytest.raises(NotOrthogonal):
            HelicalCR(SkewMatrix(J), [1.0], basis=2 * np.eye(3))

    def test_basis_size_checked(self):
        with pytest.raises(DimensionMismatch):
            HelicalCR(SkewMatrix(J), [1.0], basis=np.eye(2))

    def test_marking_dimensions(self):
        h = HelicalCR(SkewMatrix(J), [1.0])
        with pytest.raises(DimensionMismatch):
            MarkedHelicalCR(h, [1.0, 0.0], [0.0, 0.0], [0.0, 1.0])


class TestEvaluation:
    def test_circle(self):
        s = 1.3
        assert np.allclose(eval_q0(circle(), s), [np.cos(s), np.sin(s)])

    def test_at_zero(self, q0_curve):
        h = q0_curve.structure
        expected = h.to_ambient(q0_curve.v, h.w)
        assert np.allclose(eval_q0(q0_curve, 0.0), expected, atol=1e-12)

    def test_blocks_at_pi(self):
        c = blocks([1.0, 2.0], [1.0, 0.0, 1.0, 0.0], [3.0])
        assert np.allclose(eval_q0(c, np.pi), [-1.0, 0.0, 1.0, 0.0, 3.0], atol=1e-12)

    def test_q1_at_zero(self):
        h = HelicalCR(SkewMatrix(J), [1.0])
        mu = Q1Curve(h, [0.3, 0.1], [2.0, -1.0], [5.0])
        assert np.allclose(eval_q1(mu, 0.0), [2.0, -1.0, 5.0])

    def test_heisenberg_helix(self):
        # e^{-is} rotation: A = -J, v = J a
        a = np.array([1.0, 0.0])
        c = 0.25
        h = HelicalCR(SkewMatrix(-J), [1.0])
        mu = MarkedHelicalCR(h, J @ a, [0.0, 0.0], [c]).curve()
        for s in np.linspace(0.0, 2 * np.pi, 9):
            rotated = np.array([np.cos(s), -np.sin(s)])
            expected = np.concatenate([a - rotated, [c + s]])
            assert np.allclose(mu(s), expected, atol=1e-12)

    def test_q1_derivative_is_q0(self, q0_curve):
        h = q0_curve.structure
        mu = Q1Curve(h, q0_curve.v, np.zeros(2 * h.n), np.zeros(h.p))
        s, step = 0.4, 1e-6
        fd = (mu(s + step) - mu(s - step)) / (2 * step)
        assert np.allclose(fd, mu.derivative()(s), atol=1e-7)


class TestDerivatives:
    def test_order_zero_is_evaluation(self, q0_curve):
        assert np.allclose(derivative_q0(q0_curve, 0, 0.7), eval_q0(q0_curve, 0.7))

    def test_second_derivative_of_circle(self):
        assert np.allclose(derivative_q0(circle(), 2, 0.0), [-1.0, 0.0])

    def test_negative_order(self):
        with pytest.raises(InvalidDegree):
            derivative_q0(circle(), -1, 0.0)

    def test_even_derivative_ode(self, q0_curve):
        # D^2k gamma is a combination of gamma's derivatives with the annihilating polynomial
        p = minimal_annihilating_poly(q0_curve)
        s = 0.9
        total = sum(coef * derivative_q0(q0_curve, k, s) for k, coef in enumerate(p.coef))
        scale = max(1.0, max(abs(c) for c in p.coef))
        assert np.abs(total).max() <= 1e-8 * scale


class TestGram:
    def test_adjacent_orders_vanish(self, q0_curve):
        assert gram_e_kl(q0_curve, 0, 1) == 0.0

    def test_circle_one_three(self):
        assert gram_e_kl(circle(), 1, 3) == pytest.approx(-1.0)

    def test_odd_difference_vanishes(self, q0_curve):
        assert gram_e_kl(q0_curve, 2, 5) == 0.0

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 4), st.integers(0, 4), st.floats(-5, 5), st.integers(0, 2**31))
    def test_independent_of_parameter(self, k, l, s, seed):
        c = random_q0(np.random.default_rng(seed), n_max=2)
        value = derivative_q0(c, k, s) @ derivative_q0(c, l, s)
        expected = gram_e_kl(c, k, l)
        assert value == pytest.approx(expected, abs=1e-8 * max(1.0, abs(expected)))


class TestMinimalPolynomial:
    def test_circle(self):
        assert np.allclose(minimal_annihilating_poly(circle()).coef, [1.0, 0.0, 1.0])

    def test_circle_with_vertical(self):
        assert np.allclose(minimal_annihilating_poly(circle([1.0])).coef, [0.0, 1.0, 0.0, 1.0])

    def test_inactive_plane_dropped(self):
        c = blocks([1.0, 3.0], [1.0, 0.0, 0.0, 0.0])
        assert np.allclose(minimal_annihilating_poly(c).coef, [1.0, 0.0, 1.0])


class TestDecompose:
    def test_circle(self):
        dec, curve = decompose(SkewMatrix(J), [1.0, 0.0])
        assert dec.frequencies == pytest.approx(np.array([1.0]))
        assert dec.vertical_dim == 0
        assert np.allclose(dec.v, [1.0, 0.0])

    def test_l2(self):
        dec, curve = decompose(build_L_m(2), [1.0, 0.0, 0.0])
        assert dec.frequencies == pytest.approx(np.array([2.0]))
        assert dec.vertical_dim == 1
        assert np.linalg.norm(dec.w) == pytest.approx(1 / np.sqrt(2))
        assert dec.amplitudes == pytest.approx(np.array([1 / np.sqrt(2)]))

    def test_repeated_frequency_collapses(self):
        dec, _ = decompose(SkewMatrix(block_matrix([1.0, 1.0])), [1.0, 0.0, 1.0, 0.0])
        assert dec.frequencies == pytest.approx(np.array([1.0]))
        assert dec.amplitudes == pytest.approx(np.array([np.sqrt(2)]))

    def test_reconstructs_curve(self):
        L3 = build_L_m(3)
        u0 = np.array([1.0, 0.0, 0.0, 0.0])
        dec, curve = decompose(L3, u0)
        assert dec.frequencies == pytest.approx(np.array([3.0, 1.0]))
        for s in np.linspace(0.0, 2.0, 7):
            assert np.allclose(curve(s), L3.spectral.exp(s) @ u0, atol=1e-9)
            assert np.allclose(curve(s), gamma_m_eval(3, s), atol=1e-9)

    def test_change_of_basis_orthogonal(self, rng):
        A = SkewMatrix(build_L_m(4).array)
        dec, _ = decompose(A, rng.standard_normal(5))
        Q = dec.change_of_basis
        assert np.allclose(Q.T @ Q, np.eye(5), atol=1e-9)

    def test_kernel_vector(self):
        dec, _ = decompose(build_L_m(2), [1.0, 0.0, 1.0])
        assert dec.degenerate

    def test_kernel_vector_rejected_when_required(self):
        with pytest.raises(DegenerateHorizontal):
            decompose(build_L_m(2), [1.0, 0.0, 1.0], require_nontrivial=True)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            decompose(SkewMatrix(J), [1.0, 0.0, 0.0])


class TestFitFromSamples:
    def test_circle(self):
        curve = fit_from_samples(samples_of(lambda s: np.array([np.cos(s), np.sin(s)])))
        assert curve.structure.A.spectral.frequencies == pytest.approx(np.array([1.0]))
        for s in np.linspace(0.0, 2 * np.pi, 11):
            assert np.allclose(curve(s), [np.cos(s), np.sin(s)], atol=1e-8)

    def test_constant(self):
        curve = fit_from_samples(samples_of(lambda s: np.array([1.0, -2.0, 0.5])))
        assert curve.structure.n == 0
        assert np.allclose(curve(1.0), [1.0, -2.0, 0.5])

    def test_gamma_2(self):
        curve = fit_from_samples(samples_of(lambda s: gamma_m_eval(2, s)))
        assert curve.structure.A.spectral.frequencies == pytest.approx(np.array([2.0]))
        assert curve.structure.p == 1

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            fit_from_samples(samples_of(lambda s: np.array([np.cos(s), np.sin(s)]), count=10))

    def test_repeated_parameters(self):
        samples = samples_of(lambda s: np.array([np.cos(s), np.sin(s)]))
        samples[1] = (samples[0][0], samples[1][1])
        with pytest.raises(InsufficientSamples):
            fit_from_samples(samples)

    def test_non_helical_data(self):
        with pytest.raises(FitFailed):
            fit_from_samples(samples_of(lambda s: np.array([s**2, np.exp(s)]), count=60), max_freqs=1)


class TestInjectivity:
    def test_commensurate(self):
        verdict = is_injective(blocks([1.0, 2.0], [1.0, 0.0, 1.0, 0.0]))
        assert not verdict.injective
        assert verdict.period == pytest.approx(2 * np.pi)

    def test_skew_line(self):
        verdict = is_injective(blocks([1.0, np.sqrt(2)], [1.0, 0.0, 1.0, 0.0]))
        assert verdict.injective
        assert verdict.period is None

    def test_circle(self):
        verdict = is_injective(circle())
        assert verdict == (False, pytest.approx(2 * np.pi))

    def test_q1_with_drift(self):
        mu = Q1Curve(HelicalCR(SkewMatrix(J), [1.0]), [1.0, 0.0], [0.0, 0.0], [0.0])
        assert is_injective(mu).injective

    def test_no_frequencies(self):
        with pytest.raises(DegenerateHorizontal):
            is_injective(Q0Curve(HelicalCR(SkewMatrix(np.zeros((0, 0))), [1.0]), []))


class TestEquivalent:
    def test_same(self):
        h = HelicalCR(SkewMatrix(J), [1.0])
        assert equivalent(h, h) == (True, pytest.approx(1.0))

    def test_scaled(self):
        ok, lam = equivalent(HelicalCR(SkewMatrix(J), [1.0]), HelicalCR(SkewMatrix(3 * J), [1.0]))
        assert ok
        assert lam == pytest.approx(3.0)

    def test_no_single_scale(self):
        h1 = HelicalCR(SkewMatrix(block_matrix([1.0, 1.0])), [1.0])
        h2 = HelicalCR(SkewMatrix(block_matrix([1.0, 1.1])), [1.0])
        assert equivalent(h1, h2) == (False, None)


class TestReparameterize:
    def test_matches_composition(self, q0_curve):
        lam, b = -1.7, 0.3
        c = reparameterize(q0_curve, lam, b)
        for s in (0.0, 0.5, 2.0):
            assert np.allclose(c(s), q0_curve(lam * s + b), atol=1e-9)


class TestPlaneProjections:
    def test_circle(self):
        (proj,) = plane_projections(circle())
        assert proj.radius == pytest.approx(1.0)
        assert proj.frequency == pytest.approx(1.0)

    def test_two_planes(self):
        projections = plane_projections(blocks([1.0, 2.0], [1.0, 0.0, 2.0, 0.0]))
        assert sorted(p.radius for p in projections) == pytest.approx(np.array([1.0, 2.0]))

    def test_gamma_3(self):
        L3 = build_L_m(3)
        curve = decompose(L3, [1.0, 0.0, 0.0, 0.0])[1]
        radii = sorted(p.radius for p in plane_projections(curve))
        expected = sorted(decompose(L3, [1.0, 0.0, 0.0, 0.0])[0].amplitudes)
        assert radii == pytest.approx(expected)


class TestAmbientGenerator:
    def test_generates_velocity(self, q0_curve):
        B = ambient_generator(q0_curve)
        assert np.allclose(B, -B.T, atol=1e-12)
        for s in (0.0, 0.7, 2.5):
            assert np.allclose(derivative_q0(q0_curve, 1, s), B @ eval_q0(q0_curve, s), atol=1e-9)

    def test_vertical_directions_in_kernel(self):
        B = ambient_generator(circle([2.0]))
        assert np.array_equal(B[:, 2], np.zeros(3))
