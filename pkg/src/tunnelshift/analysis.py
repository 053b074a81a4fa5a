"""Measurements on envelopes: peaks, advancement, superoscillation band, shape distance."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Union

import numpy as np

from .numerics import SampledEnvelope, ScaledAmplitude


class TransmissionFn(Protocol):
    """Any map from momentum to a transmission amplitude (complex or log-domain)."""

    def __call__(self, p) -> Union[complex, np.ndarray, ScaledAmplitude]: ...


class AmbiguousPeakError(ValueError):
    """No single strict interior maximum."""


@dataclass(frozen=True)
class PeakReport:
    """Refined maximum of ``|g|^2``.

    ``height`` is the modulus of the stored samples at the peak (the envelope
    scale is excluded); ``log_height`` includes it.  ``residual`` is the rms
    misfit of a 5-point parabola to ``log|g|^2`` around the peak.
    """

    location: float
    height: float
    fwhm: float
    residual: float
    log_height: float


class BandInterval(NamedTuple):
    lo: float
    hi: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)


def _local_maxima(y: np.ndarray) -> np.ndarray:
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    return np.nonzero(inner)[0] + 1


def peak(g: SampledEnvelope, region: tuple[float, float] | None = None, tie_rtol: float = 1e-3) -> PeakReport:
    """Locate the maximum of ``|g|^2`` and refine it with a parabola in ``log|g|^2``.

    The refinement is exact for Gaussians.  Among plateau points the leftmost
    is taken.  A second local maximum within ``tie_rtol`` of the highest is an
    error (``AmbiguousPeakError``); restrict ``region`` to select one.
    """
    x = g.x
    dens = np.abs(g.values) ** 2
    mask = np.ones(x.shape, dtype=bool)
    if region is not None:
        mask = (x >= region[0]) & (x <= region[1])
        if mask.sum() < 5:
            raise ValueError("region holds fewer than 5 grid points")
    idx = np.nonzero(mask)[0]
    xs, ys = x[idx], dens[idx]
    top = ys.max()
    if top <= 0:
        raise ValueError("envelope vanishes")
    i = int(np.argmax(ys))  # leftmost among ties
    if i == 0 or i == ys.size - 1:
        raise AmbiguousPeakError("maximum lies on the boundary; no strict interior maximum")
    maxima = _local_maxima(ys)
    rivals = [j for j in maxima if j != i and ys[j] >= (1.0 - tie_rtol) * top]
    # a rival only counts if a real dip separates it from the main peak
    for j in rivals:
        lo, hi = sorted((i, j))
        if ys[lo : hi + 1].min() < (1.0 - tie_rtol) * top:
            raise AmbiguousPeakError(f"two comparable maxima near x={xs[i]:.6g} and x={xs[j]:.6g}")

    with np.errstate(divide="ignore"):
        ly = np.log(ys)
    h = g.grid.step
    y0, y1, y2 = ly[i - 1], ly[i], ly[i + 1]
    curv = y0 - 2.0 * y1 + y2
    if np.isfinite(curv) and curv < 0:
        delta = 0.5 * (y0 - y2) / curv
        loc = xs[i] + h * delta
        log_top = y1 - 0.125 * (y0 - y2) ** 2 / curv
    else:
        loc, log_top = xs[i], y1

    lo5, hi5 = max(i - 2, 0), min(i + 3, ys.size)
    if hi5 - lo5 >= 4 and np.all(np.isfinite(ly[lo5:hi5])):
        coef = np.polyfit(xs[lo5:hi5] - xs[i], ly[lo5:hi5], 2)
        resid = float(np.sqrt(np.mean((np.polyval(coef, xs[lo5:hi5] - xs[i]) - ly[lo5:hi5]) ** 2)))
    else:
        resid = 0.0

    height = math.exp(0.5 * log_top)
    fwhm = _fwhm(xs, ys, i, math.exp(log_top))
    return PeakReport(float(loc), height, fwhm, resid, math.log(height) + float(g.scale.log_mag))


def _fwhm(xs, ys, i, top) -> float:
    half = 0.5 * top
    j = i
    while j > 0 and ys[j] > half:
        j -= 1
    left = xs[j] if ys[j] > half else xs[j] + (half - ys[j]) / (ys[j + 1] - ys[j]) * (xs[j + 1] - xs[j])
    j = i
    while j < ys.size - 1 and ys[j] > half:
        j += 1
    right = xs[j] if ys[j] > half else xs[j - 1] + (ys[j - 1] - half) / (ys[j - 1] - ys[j]) * (xs[j] - xs[j - 1])
    return float(right - left)


def advancement(transmitted: SampledEnvelope, free: SampledEnvelope, **kw) -> float:
    """Peak position of ``transmitted`` minus that of ``free``; positive means ahead."""
    return peak(transmitted, **kw).location - peak(free, **kw).location


def _log_values(T: TransmissionFn, p) -> np.ndarray:
    out = T(p)
    if isinstance(out, ScaledAmplitude):
        return np.asarray(out.log_mag) + 1j * np.asarray(out.phase)
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(out, dtype=complex))


def band_detect(
    T: TransmissionFn,
    alpha: complex,
    rel_tol: float,
    p_ref: float = 0.0,
    half_width: float = 1.0,
    points: int = 4001,
) -> BandInterval:
    """Largest interval around ``p_ref`` where ``T`` behaves like a pure shift.

    Scans ``p_ref +- half_width`` for ``|T(p) exp(i alpha (p - p_ref)) / T(p_ref) - 1| <= rel_tol``
    and returns the contiguous stretch containing ``p_ref``, with ends
    interpolated linearly between the last passing and first failing point.
    """
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    p = p_ref + np.linspace(-half_width, half_width, points)
    L = _log_values(T, p)
    L0 = _log_values(T, np.array([p_ref]))[0]
    dev = np.abs(np.exp(L - L0 + 1j * alpha * (p - p_ref)) - 1.0)
    c = int(np.argmin(np.abs(p - p_ref)))
    if dev[c] > rel_tol:
        return BandInterval(p_ref, p_ref)

    def edge(step):
        j = c
        while 0 <= j + step < p.size and dev[j + step] <= rel_tol:
            j += step
        if not 0 <= j + step < p.size:
            return p[j]
        k = j + step
        frac = (rel_tol - dev[j]) / (dev[k] - dev[j])
        return p[j] + frac * (p[k] - p[j])

    return BandInterval(float(edge(-1)), float(edge(+1)))


def shape_distance(g1: SampledEnvelope, g2: SampledEnvelope) -> float:
    """Max pointwise difference of the peak-normalised moduli.

    ``g2`` is linearly interpolated onto the grid of ``g1`` when the grids differ.
    """
    m1 = np.abs(g1.values)
    x2 = g2.x
    m2 = np.abs(g2.values)
    if g1.grid != g2.grid:
        m2 = np.interp(g1.x, x2, m2, left=0.0, right=0.0)
    if m1.max() == 0 or m2.max() == 0:
        raise ValueError("cannot normalise a vanishing envelope")
    return float(np.max(np.abs(m1 / m1.max() - m2 / m2.max())))
