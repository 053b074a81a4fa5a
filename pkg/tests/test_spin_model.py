import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tunnelshift.envelopes import GaussianProfile
from tunnelshift.numerics import ConditioningWarning, Grid1D, SampledEnvelope
from tunnelshift.spin_model import (
    DelayComb,
    GridTooShortError,
    best_success_probability,
    chop_pulse,
    comb_moment,
    delay_quantum,
    effective_velocity,
    gaussian_pulse,
    log10_best_success_probability,
    multi_hump,
    phase_time_spin,
    solve_eta,
    spin_transmission,
    transmit_comb,
)

# calibrated once by direct evaluation of the K=30, alpha=4 K dx comb, then frozen
BAND_INNER = 0.8  # |T e^{ip alpha} - 1| <= 0.1 inside BAND_INNER * K/(e|alpha|)
BAND_OUTER = 2.0  # deviation >= 1 beyond BAND_OUTER * K/(e|alpha|)


@st.composite
def comb_cases(draw):
    K = draw(st.integers(0, 30))
    a = draw(st.sampled_from([-float(j) for j in range(K + 1)] + [0.5, -0.5, 4.0 * K, -4.0 * K]))
    n = draw(st.integers(0, K))
    return K, a, n


# -- weights --------------------------------------------------------------------

def test_zero_shift_selects_unshifted_copy():
    assert np.array_equal(solve_eta(3, 0.0).eta, [1, 0, 0, 0])


def test_hand_comb():
    c = solve_eta(2, 1.0)
    assert np.allclose(c.eta, [3, -3, 1], atol=1e-13)
    for n in range(3):
        assert abs(comb_moment(c, n) - 1.0) < 1e-13


def test_coinciding_delay_gives_unit_vector():
    eta = solve_eta(30, -15.0).eta
    expect = np.zeros(31)
    expect[15] = 1
    assert np.array_equal(eta, expect)


@given(st.integers(0, 30), st.data())
def test_kronecker_property(K, data):
    m0 = data.draw(st.integers(0, K))
    eta = solve_eta(K, -float(m0)).eta
    assert abs(eta[m0] - 1) <= 1e-12 and np.max(np.abs(np.delete(eta, m0)), initial=0) <= 1e-12


@given(comb_cases())
def test_moment_identity(case):
    K, a, n = case
    c = solve_eta(K, a)
    want = complex(a) ** n
    assert abs(comb_moment(c, n) - want) <= 1e-6 * max(abs(want), 1e-300) or (want == 0 and abs(comb_moment(c, n)) < 1e-9)


@given(st.integers(0, 30), st.floats(-40, 40), st.floats(-10, 10))
def test_weights_sum_to_one(K, re, im):
    c = solve_eta(K, complex(re, im))
    assert abs(comb_moment(c, 0) - 1) <= 1e-9


def test_plain_summation_fails_where_extended_succeeds():
    c = solve_eta(30, 120.0)
    want = 120.0**30
    assert abs(comb_moment(c, 30) - want) <= 1e-6 * want
    assert abs(comb_moment(c, 30, method="plain") - want) > 1e-6 * want


def test_weight_magnitudes_are_huge_for_large_shift():
    # far larger than a naive 1e12 estimate; the log domain keeps them exact
    assert solve_eta(30, 120.0).log_abs_sum() / math.log(10) > 35


def test_large_K_stays_finite():
    c = solve_eta(150, 600.0)
    assert np.all(np.isfinite(c.weights.log_mag))


# -- transmission ----------------------------------------------------------------

def test_transmission_hand_value():
    assert abs(spin_transmission(solve_eta(2, 1.0), math.pi) - 7) < 1e-12


@given(st.integers(0, 30), st.floats(-40, 40))
def test_transmission_at_zero_is_one(K, a):
    assert abs(spin_transmission(solve_eta(K, a), 0.0) - 1) < 1e-9


def test_transmission_bounded_by_weight_sum():
    c = solve_eta(12, 30.0)
    p = np.linspace(-math.pi, math.pi, 301)
    assert np.all(np.abs(spin_transmission(c, p)) <= np.exp(c.log_abs_sum()) * (1 + 1e-12))


def test_band_constants():
    K, alpha = 30, 120.0
    c = solve_eta(K, alpha)
    edge = K / (math.e * alpha)
    inner = np.linspace(-BAND_INNER * edge, BAND_INNER * edge, 201)
    assert np.max(np.abs(spin_transmission(c, inner) * np.exp(1j * inner * alpha) - 1)) <= 0.1
    outer = np.linspace(BAND_OUTER * edge, math.pi, 400)
    outer = np.concatenate([-outer, outer])
    assert np.min(np.abs(spin_transmission(c, outer) * np.exp(1j * outer * alpha) - 1)) >= 1.0


# -- transmitted envelopes ---------------------------------------------------------

def _mp_bruteforce(comb, sigma, x):
    with mpmath.workdps(90):
        eta = comb.eta_mp(90)
        norm = (2 / (mpmath.pi * sigma**2)) ** mpmath.mpf(0.25)
        out = []
        for xv in x:
            acc = mpmath.mpc(0)
            for m, e in enumerate(eta):
                acc += e * norm * mpmath.exp(-((mpmath.mpf(xv) + m * comb.dx) ** 2) / sigma**2)
            out.append(complex(acc))
    return np.array(out)


def test_identity_comb():
    g = Grid1D.from_range(-20, 20, 201)
    g0 = gaussian_pulse(2.0, g)
    out = transmit_comb(g0, DelayComb.from_eta([1.0], 1.0))
    assert np.array_equal(out.values, g0.values)


@pytest.mark.parametrize("K,a", [(30, 120.0), (6, 2.5), (10, 3 + 1j)])
def test_transmit_matches_bruteforce(K, a):
    c = solve_eta(K, a)
    sigma = 2.0 * K
    g = Grid1D.from_range(-6 * sigma - K, 6 * sigma + a.real if isinstance(a, complex) else 6 * sigma + a, 301)
    out = transmit_comb(gaussian_pulse(sigma, g), c)
    sel = slice(None, None, 15)
    ref = _mp_bruteforce(c, sigma, g.points[sel])
    assert np.max(np.abs(out.values[sel] - ref)) <= 1e-10 * np.abs(ref).max()


def test_scale_is_root_success_probability():
    c = solve_eta(5, 2.0)
    g = Grid1D.from_range(-60, 60, 401)
    out = transmit_comb(gaussian_pulse(10.0, g), c)
    assert math.isclose(math.exp(2 * out.scale.log_mag), best_success_probability(c))


def test_grid_too_short():
    g = Grid1D.from_range(-10, 50, 201)
    with pytest.raises(GridTooShortError):
        transmit_comb(gaussian_pulse(3.0, g), solve_eta(30, 5.0))


def test_sampled_input_warns_when_ill_conditioned():
    c = solve_eta(30, 120.0)
    g = Grid1D.from_range(-420, 480, 301)
    bare = SampledEnvelope(g, GaussianProfile(60.0)(g.points))
    with pytest.warns(ConditioningWarning):
        transmit_comb(bare, c)


def test_linearity():
    c = solve_eta(4, 1.5)
    g = Grid1D.from_range(-60, 60, 241)
    h = multi_hump([(-10.0, 5.0), (10.0, 5.0)], g)
    a = transmit_comb(gaussian_pulse(5.0, g, -10.0), c)
    b = transmit_comb(gaussian_pulse(5.0, g, 10.0), c)
    both = transmit_comb(h, c)
    assert np.max(np.abs(both.values - (a.values + b.values))) < 1e-12


def test_single_hump_is_gaussian():
    g = Grid1D.from_range(-20, 20, 101)
    assert np.array_equal(multi_hump([(1.0, 2.0)], g).values, gaussian_pulse(2.0, g, 1.0).values)


def test_chop_partition_of_unity():
    g = Grid1D.from_range(-20, 20, 401)
    g0 = gaussian_pulse(4.0, g)
    f = chop_pulse(g0, 0.0, "front")
    r = chop_pulse(g0, 0.0, "rear")
    assert np.max(np.abs(f.values + r.values - g0.values)) < 1e-15
    fs = chop_pulse(g0, 1.0, "front", 3.0)
    rs = chop_pulse(g0, 1.0, "rear", 3.0)
    assert np.max(np.abs(fs.values + rs.values - g0.values)) < 1e-15


def test_front_discarded_emits_nothing_ahead_of_the_free_front():
    c = solve_eta(30, 120.0)
    g = Grid1D.from_range(-400, 600, 501)
    rear = chop_pulse(gaussian_pulse(60.0, g), 0.0, "rear", 10.0)
    out = transmit_comb(rear, c)
    ahead = g.points > rear.profile.front_edge
    assert np.max(np.abs(out.values[ahead])) <= 1e-3 * np.abs(out.values).max()


# -- probabilities and times ---------------------------------------------------------

def test_success_probability_hand_value():
    assert math.isclose(best_success_probability(solve_eta(2, 1.0)), 1 / 49)


@pytest.mark.parametrize("m", [0, 7, 30])
def test_success_probability_unity_on_delays(m):
    assert log10_best_success_probability(solve_eta(30, -float(m))) == 0.0


def test_phase_times():
    assert phase_time_spin(0, 3.0, 2.0) == 1.5
    assert phase_time_spin(6.0, 3.0, 2.0) == -1.5
    assert effective_velocity(3.0, 3.0, 2.0) == math.inf
    assert math.isclose(delay_quantum(2.0, 3.0, 2.0), 1.5)
