import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tunnelshift.analysis import AmbiguousPeakError, advancement, band_detect, peak, shape_distance
from tunnelshift.barrier import PacketSpec
from tunnelshift.envelopes import GaussianProfile
from tunnelshift.numerics import Grid1D, SampledEnvelope, ScaledAmplitude
from tunnelshift.spin_model import solve_eta, spin_transmission

G = Grid1D.from_range(-30, 30, 601)


def _gauss(center, sigma=3.0, grid=G):
    return SampledEnvelope(grid, GaussianProfile(sigma, center)(grid.points))


@given(st.floats(-10, 10), st.floats(1.0, 5.0))
def test_gaussian_peak_location(c, s):
    assert abs(peak(_gauss(c, s)).location - c) <= 1e-6 * s


def test_free_packet_peak_is_ballistic():
    pk = PacketSpec(1.5, 4.0, -20.0)
    g = Grid1D.from_range(-40, 60, 1001)
    env = SampledEnvelope(g, pk.free_profile(12.0)(g.points))
    assert abs(peak(env).location - (-20.0 + 1.5 * 12.0)) < 1e-6


def test_two_equal_humps_are_ambiguous():
    env = SampledEnvelope(G, GaussianProfile(2.0, -8)(G.points) + GaussianProfile(2.0, 8)(G.points))
    with pytest.raises(AmbiguousPeakError):
        peak(env)
    assert abs(peak(env, region=(0, 30)).location - 8) < 1e-6


def test_boundary_maximum_rejected():
    with pytest.raises(AmbiguousPeakError):
        peak(_gauss(40.0))


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_advancement_antisymmetric(a, b):
    ga, gb = _gauss(a), _gauss(b)
    assert advancement(ga, gb) == -advancement(gb, ga)
    assert advancement(ga, ga) == 0


@given(st.floats(-5, 5), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_peak_invariant_under_constant_factor(c, z):
    g = _gauss(c)
    scaled = SampledEnvelope(G, g.values * z, ScaledAmplitude(5.0, 1.0))
    assert abs(peak(scaled).location - peak(g).location) < 1e-9


def test_pure_shift_band_is_whole_scan():
    alpha = 3.0
    b = band_detect(lambda p: np.exp(-1j * alpha * np.asarray(p)), alpha, 1e-6, 0.0, 2.0, 401)
    assert b.lo == -2.0 and b.hi == 2.0


def test_comb_band_width():
    K, alpha = 30, 120.0
    c = solve_eta(K, alpha)
    edge = K / (math.e * alpha)
    b = band_detect(lambda p: spin_transmission(c, p), alpha, 0.1, 0.0, 3 * edge, 2001)
    assert 0.5 * edge <= b.half_width <= 1.0 * edge


def test_single_moment_band_narrower_than_packet():
    c = solve_eta(1, 4.0)
    b = band_detect(lambda p: spin_transmission(c, p), 4.0, 0.1, 0.0, 3.0, 2001)
    assert 2 * b.half_width < 2 / 2.0


@given(st.floats(0.02, 0.3), st.floats(0.3, 0.9))
def test_band_shrinks_with_tolerance(t1, frac):
    c = solve_eta(6, 3.0)
    fn = lambda p: spin_transmission(c, p)  # noqa: E731
    wide = band_detect(fn, 3.0, t1, 0.0, 1.5, 601)
    narrow = band_detect(fn, 3.0, t1 * frac, 0.0, 1.5, 601)
    assert narrow.lo >= wide.lo and narrow.hi <= wide.hi


def test_shape_distance():
    a = _gauss(0.0)
    assert shape_distance(a, a) == 0
    fwhm = peak(a).fwhm
    s = 3.0
    shifted = _gauss(fwhm / 10)
    # |d/dx exp(-x^2/s^2)| <= sqrt(2/e)/s
    assert 0 < shape_distance(a, shifted) <= fwhm / 10 * math.sqrt(2 / math.e) / s
