import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tunnelshift.numerics import (
    AliasingError,
    Grid1D,
    QuadratureError,
    SampledEnvelope,
    ScaledAmplitude,
    compensated_sum,
    finite_diff,
    fourier_pair,
    gauss_rule,
    interpolate_bandlimited,
    quadrature,
    superpose_shifted,
    wrap_phase,
)
from tunnelshift.envelopes import GaussianProfile

finite = st.floats(-50, 50, allow_nan=False)
phases = st.floats(-20, 20, allow_nan=False)


def _same_phase(a, b, tol=1e-12):
    return abs(wrap_phase(a - b)) <= tol


# -- grids ------------------------------------------------------------------

def test_grid_points_are_exact():
    g = Grid1D(-3.0, 0.1, 101)
    assert np.array_equal(g.points, -3.0 + np.arange(101) * 0.1)
    assert g.stop == g.points[-1]


@pytest.mark.parametrize("args", [(0.0, 0.0, 10), (0.0, -1.0, 10), (0.0, 1.0, 1)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_grid_from_points_rejects_nonuniform():
    with pytest.raises(ValueError):
        Grid1D.from_points([0.0, 1.0, 2.5])


def test_conjugate_grid_spacing():
    g = Grid1D.centered(0.05, 256)
    c = g.conjugate()
    assert math.isclose(c.step, 2 * math.pi / (256 * 0.05))
    assert c.count == 256


# -- log-domain amplitudes ---------------------------------------------------

@given(finite, phases, finite, phases, finite, phases)
def test_scaled_amplitude_associative_commutative(l1, p1, l2, p2, l3, p3):
    a, b, c = ScaledAmplitude(l1, p1), ScaledAmplitude(l2, p2), ScaledAmplitude(l3, p3)
    left, right = (a * b) * c, a * (b * c)
    assert math.isclose(left.log_mag, right.log_mag, abs_tol=1e-12)
    assert _same_phase(left.phase, right.phase)
    ab, ba = a * b, b * a
    assert ab.log_mag == ba.log_mag and _same_phase(ab.phase, ba.phase)


@given(phases)
def test_phase_range(p):
    w = wrap_phase(p)
    assert -math.pi < w <= math.pi


def test_exact_zero_propagates():
    z = ScaledAmplitude.zero()
    assert (z * ScaledAmplitude(300.0, 1.0)).is_zero
    assert z.to_complex() == 0
    with pytest.raises(ZeroDivisionError):
        ScaledAmplitude.one() / z


def test_underflow_survives_in_log_domain():
    tiny = ScaledAmplitude(-2000.0, 0.3)
    back = (tiny * tiny) / tiny
    assert math.isclose(back.log_mag, -2000.0)
    with pytest.raises(OverflowError):
        ScaledAmplitude(1000.0, 0.0).to_complex()


@given(st.complex_numbers(min_magnitude=1e-100, max_magnitude=1e100, allow_nan=False, allow_infinity=False))
def test_from_complex_roundtrip(z):
    assert abs(ScaledAmplitude.from_complex(z).to_complex() - z) <= 1e-13 * abs(z)


# -- Fourier pair -------------------------------------------------------------

def test_gaussian_pair_closed_form():
    s = 1.3
    g = Grid1D.centered(0.02, 2048)
    f = SampledEnvelope(g, np.exp(-g.points**2 / (2 * s * s)) / (math.sqrt(2 * math.pi) * s))
    F = fourier_pair(f, "forward")
    v = F.x
    exact = np.exp(-(v**2) * s * s / 2) / (2 * math.pi)
    assert np.max(np.abs(F.values - exact)) < 1e-12


@given(st.floats(0.5, 3.0), st.floats(-2.0, 2.0), st.floats(-3.0, 3.0))
def test_roundtrip_and_parseval(s, x0, k0):
    g = Grid1D.centered(0.05, 1024)
    vals = np.exp(-((g.points - x0) ** 2) / (2 * s * s) + 1j * k0 * g.points)
    f = SampledEnvelope(g, vals)
    F = fourier_pair(f, "forward", edge_tol=None)
    back = fourier_pair(F, "inverse", conjugate_start=g.start, edge_tol=None)
    rel = np.linalg.norm(back.values - vals) / np.linalg.norm(vals)
    assert rel < 1e-10
    lhs = np.sum(np.abs(vals) ** 2) * g.step
    rhs = 2 * math.pi * np.sum(np.abs(F.values) ** 2) * F.grid.step
    assert abs(lhs - rhs) <= 1e-8 * lhs


def test_undecayed_edges_raise():
    g = Grid1D.centered(0.1, 64)
    with pytest.raises(AliasingError):
        fourier_pair(SampledEnvelope(g, np.ones(64)), "forward")


def test_bandlimited_interpolation_of_smooth_function():
    g = Grid1D.centered(0.1, 512)
    f = SampledEnvelope(g, np.exp(-g.points**2 / 2))
    x = np.linspace(-3, 3, 37) + 0.013
    assert np.max(np.abs(interpolate_bandlimited(f, x) - np.exp(-x**2 / 2))) < 1e-9


# -- differences and sums --------------------------------------------------------

@given(st.floats(-5, 5), st.floats(-2, 2))
def test_finite_diff_exponential(alpha, p0):
    d = finite_diff(lambda p: np.exp(1j * p * alpha), p0, 1, 1e-3)
    assert abs(d - 1j * alpha * np.exp(1j * p0 * alpha)) < 1e-8


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_finite_diff_constant(n):
    assert abs(finite_diff(lambda p: 2.5 + 0j, 0.3, n, 1e-2)) < 1e-9


def test_compensated_sum_recovers_cancellation():
    vals = [1e16, 1.0, -1e16, 1.0]
    assert compensated_sum(vals) == 2.0


# -- quadrature ----------------------------------------------------------------

def test_gaussian_integral():
    s = 0.7
    r = quadrature(lambda p: np.exp(-p * p * s * s / 4), -8 / s, 8 / s)
    # the window cuts the tails at 4 standard deviations of the exponent
    exact = 2 * math.sqrt(math.pi) / s * math.erf(4.0)
    assert abs(r.value - exact) <= 1e-10 * exact


@given(st.floats(0.1, 5.0))
def test_odd_integrand_vanishes(a):
    r = quadrature(lambda x: x**3 * np.exp(-x * x), -a, a)
    assert abs(r.value) < 1e-12


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=16), st.integers(2, 12))
def test_gauss_rule_exact_on_polynomials(coef, n):
    coef = coef[: 2 * n]  # degree <= 2n - 1
    x, w = gauss_rule(-1.3, 2.1, n)
    poly = np.polynomial.Polynomial(coef)
    exact = poly.integ()(2.1) - poly.integ()(-1.3)
    scale = max(1.0, np.polynomial.Polynomial(np.abs(coef)).integ()(2.1) + np.polynomial.Polynomial(np.abs(coef)).integ()(1.3))
    assert abs(np.dot(w, poly(x)) - exact) <= 1e-12 * scale


def test_scaled_integrand_keeps_scale():
    r = quadrature(lambda x: ScaledAmplitude(-900.0 - x * x, 0.0 * x), -6, 6)
    assert abs(r.scale.log_mag + 900.0) < 1e-3
    assert abs(r.value * math.exp(r.scale.log_mag + 900.0) - math.sqrt(math.pi) * math.erf(6.0)) < 1e-9


def test_quadrature_nonconvergence_raises():
    with pytest.raises(QuadratureError):
        quadrature(lambda x: np.sin(1e6 * x), 0, 1, panels=1, max_panels=4)


# -- shared shift kernel -----------------------------------------------------------

@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-2, 2)), min_size=1, max_size=5))
def test_superpose_matches_direct_sum(terms):
    prof = GaussianProfile(1.5, 0.0)
    x = np.linspace(-10, 10, 41)
    shifts, weights = zip(*terms)
    direct = sum(w * prof(x - s) for s, w in terms)
    assert np.max(np.abs(superpose_shifted(prof, x, shifts, weights) - direct)) < 1e-12


def test_extended_precision_superposition_survives_cancellation():
    prof = GaussianProfile(1.0, 0.0)
    x = np.array([0.0, 0.5])
    # huge weights that cancel to a unit shift
    w = [1e20, -1e20, 1.0]
    s = [0.0, 0.0, 1.0]
    out = superpose_shifted(prof, x, s, w, dps=40)
    assert np.allclose(out, prof(x - 1.0), rtol=1e-14)
