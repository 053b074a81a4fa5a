import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tunnelshift.barrier import BarrierSpec
from tunnelshift.larmor import (
    WellExcursionWarning,
    classical_duration,
    raised_cosine_window,
    traversal_amplitude,
    traversal_amplitude_from,
    uncertainty_diagnostics,
)
from tunnelshift.numerics import AliasingError, Grid1D

ABOVE = BarrierSpec(25.0, 30.0)
TAU = Grid1D.centered(0.02, 4096)


@pytest.fixture(scope="module")
def above():
    return traversal_amplitude(ABOVE, 10.0, 5.0, TAU)


def test_sum_rule(above):
    assert abs(above.integral() - above.reference) <= 1e-6


def test_roundtrip(above):
    live = above.v_samples != 0
    assert np.max(np.abs(above.back_transform()[live] - above.v_samples[live])) <= 1e-6


def test_peak_at_classical_duration(above):
    tau_peak = above.tau[np.argmax(np.abs(above.values))]
    expect = classical_duration(ABOVE, 10.0)
    assert abs(tau_peak - expect) <= 0.15 * expect


def test_parseval(above):
    lhs = np.sum(np.abs(above.values) ** 2) * above.tau_grid.step
    rhs = np.sum(np.abs(above.v_samples) ** 2) * above.v_grid.step / (2 * math.pi)
    assert abs(lhs - rhs) <= 1e-8 * rhs


@given(st.floats(0.3, 2.0))
def test_gaussian_is_minimum_uncertainty(w):
    phi = traversal_amplitude_from(lambda v: np.exp(-(v**2) * w * w), TAU, -40.0, 40.0)
    dt, dv = uncertainty_diagnostics(phi)
    assert abs(dt * dv - 0.5) < 1e-6


def test_narrower_window_spreads_tau():
    wide = traversal_amplitude(BarrierSpec(2.0, 5.0), 1.0, 8.0, TAU)
    narrow = traversal_amplitude(BarrierSpec(2.0, 5.0), 1.0, 2.0, TAU)
    (dt_w, dv_w), (dt_n, dv_n) = uncertainty_diagnostics(wide), uncertainty_diagnostics(narrow)
    assert dt_n > dt_w
    assert dt_w * dv_w >= 0.5 and dt_n * dv_n >= 0.5


def test_linearity():
    f = lambda v: np.exp(-v * v)  # noqa: E731
    g = lambda v: np.cos(v) / (1 + v * v)  # noqa: E731
    a = traversal_amplitude_from(f, TAU, -10, 10)
    b = traversal_amplitude_from(g, TAU, -10, 10)
    ab = traversal_amplitude_from(lambda v: f(v) + g(v), TAU, -10, 10)
    assert np.max(np.abs(ab.values - a.values - b.values)) < 1e-12


def test_coarse_tau_grid_aliases():
    with pytest.raises(AliasingError):
        traversal_amplitude(ABOVE, 10.0, 50.0, Grid1D.centered(0.5, 64))


def test_window_keeps_heights_nonnegative():
    phi = traversal_amplitude(BarrierSpec(1.0, 2.0), 1.0, 5.0, TAU)
    assert phi.metadata["v_lo"] == -1.0
    with pytest.warns(WellExcursionWarning):
        traversal_amplitude(BarrierSpec(1.0, 2.0), 1.0, 5.0, TAU, allow_wells=True)


def test_raised_cosine_window_shape():
    v = np.linspace(-2, 2, 401)
    w = raised_cosine_window(v, -1, 1, 0.5, 0.5)
    assert w[0] == 0 and w[200] == 1 and np.all((w >= 0) & (w <= 1))
