import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tunnelshift.numerics import Grid1D
from tunnelshift.pointer import (
    PostSelectionError,
    SelectionPair,
    extrapolate_to_zero,
    gaussian_lobes,
    gaussian_pointer,
    pointer_amplitude,
    pointer_grid,
    pointer_mean,
    pointer_momentum_mean,
    pointer_statistics,
    sample_readings,
    weak_value,
    weak_limit_exponent,
)

A = Grid1D.from_range(-10.0, 0.0, 2001)
SHARP_LOBES = ((-2.0, 0.4, 13.0), (-8.0, 0.4, -7.0))


def _sel(lobes):
    return SelectionPair.from_eta(A, gaussian_lobes(A.points, lobes))


def test_pre_selection_support():
    with pytest.raises(ValueError):
        SelectionPair(Grid1D.from_range(-1, 1, 11), np.ones(11), np.ones(11))


def test_vanishing_overlap():
    sel = _sel(((-3.0, 0.4, 1.0), (-7.0, 0.4, -1.0)))
    with pytest.raises(PostSelectionError):
        weak_value(sel)


def test_narrow_selection_shifts_pointer():
    sel = _sel(((-4.0, 0.02, 1.0),))
    g = Grid1D.from_range(-30, 20, 501)
    psi = pointer_amplitude(sel, gaussian_pointer(3.0, g))
    ref = gaussian_pointer(3.0, g).profile(g.points + 4.0)
    assert np.max(np.abs(psi.values / psi.values.max() - ref / ref.max())) < 1e-3


@given(st.lists(st.tuples(st.floats(-9, -1), st.floats(0.3, 1.0), st.floats(0.1, 5)), min_size=1, max_size=4))
def test_nonnegative_selection_weak_value_inside_spectrum(lobes):
    wv = weak_value(_sel(lobes))
    assert abs(wv.value.imag) < 1e-12 and wv.value.real <= 0 and not wv.anomalous


def test_translation_covariance():
    grid = Grid1D.from_range(-20.0, 0.0, 4001)
    base = [(-12.0, 0.5, 2.0), (-15.0, 0.5, -1.0)]
    moved = [(c + 3.0, w, a) for c, w, a in base]
    a0 = weak_value(SelectionPair.from_eta(grid, gaussian_lobes(grid.points, base))).value
    a1 = weak_value(SelectionPair.from_eta(grid, gaussian_lobes(grid.points, moved))).value
    assert abs(a1 - a0 - 3.0) < 1e-9


def test_constructed_anomalous_sharp_case():
    wv = weak_value(_sel(SHARP_LOBES), sigma=4.0)

    def eta(x):
        return sum(a * mpmath.exp(-0.5 * ((x - c) / w) ** 2) / (mpmath.sqrt(2 * mpmath.pi) * w) for c, w, a in SHARP_LOBES)

    with mpmath.workdps(30):
        num = mpmath.quad(lambda x: x * eta(x), [-10, -8, -2, 0])
        den = mpmath.quad(eta, [-10, -8, -2, 0])
    oracle = float(num / den)
    assert abs(wv.value.real - oracle) < 1e-5
    assert abs(oracle - 5.0) < 1e-4
    assert wv.anomalous and wv.sharp


def test_symmetric_pointer_mean():
    g = Grid1D.from_range(-20, 20, 401)
    assert abs(pointer_statistics(gaussian_pointer(2.0, g)).mean) < 1e-14


def test_weak_limit_convergence():
    sel = _sel(SHARP_LOBES)
    sigmas = [20.0, 30.0, 50.0, 80.0, 120.0]
    means = [pointer_mean(sel, s) for s in sigmas]
    target = weak_value(sel).value.real
    assert abs(means[-1] - target) < abs(means[0] - target)
    assert 1.5 <= weak_limit_exponent(sigmas, means, target) <= 2.5


@pytest.mark.parametrize("seed", range(4))
def test_strong_limit_bound(seed):
    rng = np.random.default_rng(seed)
    lobes = [(rng.uniform(-9, -1), rng.uniform(0.3, 1.0), rng.uniform(-5, 5) + 1j * rng.uniform(-5, 5)) for _ in range(2)]
    sel = SelectionPair.from_eta(A, gaussian_lobes(A.points, lobes))
    sig = [0.05, 0.1, 0.2]
    limit = extrapolate_to_zero(sig, [pointer_mean(sel, s) for s in sig])
    assert limit <= 3 * A.step


def test_momentum_shift_tracks_imaginary_weak_value():
    lobes = ((-2.0, 0.4, 13.0), (-8.0, 0.4, -7.0 + 4.0j))
    sel = _sel(lobes)
    wv = weak_value(sel).value
    s = 120.0
    psi = pointer_amplitude(sel, gaussian_pointer(s, pointer_grid(sel, s, 8.0, 10.0)))
    shift = pointer_momentum_mean(psi)
    assert abs(shift - 2 * wv.imag / s**2) <= 0.05 * abs(2 * wv.imag / s**2)


def test_seeded_samples_are_reproducible():
    sel = _sel(SHARP_LOBES)
    psi = pointer_amplitude(sel, gaussian_pointer(4.0, pointer_grid(sel, 4.0)))
    a = sample_readings(psi, 500, np.random.default_rng(7))
    b = sample_readings(psi, 500, np.random.default_rng(7))
    assert np.array_equal(a, b)
    big = sample_readings(psi, 200000, np.random.default_rng(1))
    assert abs(big.mean() - pointer_statistics(psi).mean) < 0.05
