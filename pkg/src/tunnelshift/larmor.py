"""Traversal-time amplitude from barrier-height perturbations.

``phi(p0, tau) = (2 pi)^-1 int dV T(p0, W + V) exp(i V tau)``

The V-integral is formally over the whole real line; here it is cut by a
smooth raised-cosine window whose shape is recorded with the result.  The
tau grid and the V grid are conjugate (``dV = 2 pi / (N dtau)``) and ``V = 0``
sits on the V grid, so the sum rule ``int phi dtau = T(p0, W)`` and the
round trip back to ``T`` hold to rounding.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .barrier import BarrierSpec, _log_t
from .numerics import AliasingError, Grid1D, SampledEnvelope, fourier_pair


class WellExcursionWarning(UserWarning):
    """The V window reaches negative effective heights (a potential well)."""


@dataclass
class TraversalAmplitude:
    """``phi(tau)`` on ``tau_grid`` together with the windowed ``T`` it came from."""

    tau_grid: Grid1D
    values: np.ndarray
    v_grid: Grid1D
    v_samples: np.ndarray
    reference: complex
    metadata: dict = field(default_factory=dict)

    @property
    def tau(self) -> np.ndarray:
        return self.tau_grid.points

    def integral(self) -> complex:
        """``int phi dtau`` (rectangle rule, exact for the discrete pair)."""
        return complex(np.sum(self.values) * self.tau_grid.step)

    def back_transform(self) -> np.ndarray:
        """Windowed ``T(p0, W + V)`` recovered on the V grid from ``phi``."""
        env = SampledEnvelope(self.tau_grid, self.values)
        out = fourier_pair(env, "forward", conjugate_start=self.v_grid.start, edge_tol=None)
        return out.values * 2.0 * math.pi


def raised_cosine_window(v, lo: float, hi: float, taper_lo: float, taper_hi: float):
    """1 on ``[lo + taper_lo, hi - taper_hi]``, cosine ramps to 0 at ``lo`` and ``hi``."""
    v = np.asarray(v, dtype=float)
    w = np.where((v >= lo) & (v <= hi), 1.0, 0.0)
    if taper_lo > 0:
        u = np.clip((v - lo) / taper_lo, 0.0, 1.0)
        w = np.where(v < lo + taper_lo, w * 0.5 * (1.0 - np.cos(np.pi * u)), w)
    if taper_hi > 0:
        u = np.clip((hi - v) / taper_hi, 0.0, 1.0)
        w = np.where(v > hi - taper_hi, w * 0.5 * (1.0 - np.cos(np.pi * u)), w)
    return w


def _v_grid(tau_grid: Grid1D, lo: float, hi: float) -> Grid1D:
    n = tau_grid.count
    dv = 2.0 * math.pi / (n * tau_grid.step)
    start_idx = int(math.floor(lo / dv)) - 1
    grid = Grid1D(start_idx * dv, dv, n)
    if grid.stop < hi:
        raise AliasingError(
            f"tau step {tau_grid.step:.3g} cannot resolve V up to {hi:.3g}; "
            f"need dtau <= {2 * math.pi / (hi - lo + 2 * dv):.3g}"
        )
    return grid


def traversal_amplitude_from(
    fn: Callable[[np.ndarray], np.ndarray],
    tau_grid: Grid1D,
    v_lo: float,
    v_hi: float,
    window: np.ndarray | Callable | None = None,
    metadata: dict | None = None,
) -> TraversalAmplitude:
    """Transform any ``V -> amplitude`` map sampled on the grid conjugate to ``tau_grid``.

    ``window`` multiplies the samples (a callable of ``V`` or ``None`` for a
    hard cut to ``[v_lo, v_hi]``).  ``fn`` is only evaluated inside the window.
    """
    vg = _v_grid(tau_grid, v_lo, v_hi)
    v = vg.points
    inside = (v >= v_lo) & (v <= v_hi)
    w = np.where(inside, 1.0, 0.0) if window is None else np.asarray(window(v) if callable(window) else window)
    samples = np.zeros(v.shape, dtype=complex)
    live = inside & (w != 0)
    samples[live] = np.asarray(fn(v[live]), dtype=complex) * w[live]
    env = SampledEnvelope(vg, samples)
    phi = fourier_pair(env, "inverse", conjugate_start=tau_grid.start, edge_tol=None).values / (2.0 * math.pi)
    i0 = int(np.argmin(np.abs(v)))
    ref = complex(samples[i0]) if abs(v[i0]) < 1e-12 * vg.step else complex("nan")
    meta = dict(metadata or {})
    peak = np.abs(phi).max()
    meta["tau_edge_ratio"] = float(max(abs(phi[0]), abs(phi[-1])) / peak) if peak else 0.0
    return TraversalAmplitude(tau_grid, phi, vg, samples, ref, meta)


def traversal_amplitude(
    b: BarrierSpec,
    p0: float,
    V_window: float,
    tau_grid: Grid1D,
    taper_fraction: float = 0.25,
    allow_wells: bool = False,
) -> TraversalAmplitude:
    """Traversal-time amplitude of the rectangular barrier at momentum ``p0``.

    The window covers ``[max(-W, -V_window), V_window]``: the lower end stops
    at ``V = -W`` so that ``W + V`` stays non-negative unless ``allow_wells``
    is set.  Each end tapers over ``taper_fraction * V_window`` (the lower
    taper never reaches ``V = 0``, so the window is 1 there).

    Raises
    ------
    AliasingError
        If ``dtau`` is too coarse for the V range (Nyquist).
    """
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    if not V_window > 0:
        raise ValueError("V_window must be positive")
    if not 0 <= taper_fraction < 1:
        raise ValueError("taper_fraction must lie in [0, 1)")
    lo = -V_window if allow_wells else max(-b.W, -V_window)
    if allow_wells and b.W - V_window < 0:
        warnings.warn(
            f"window reaches W + V = {b.W - V_window:.3g} < 0; the integrand includes wells",
            WellExcursionWarning,
            stacklevel=2,
        )
    hi = V_window
    taper_hi = taper_fraction * V_window
    taper_lo = min(taper_fraction * V_window, -lo)

    def fn(v):
        return np.exp(_log_t(b.W + v, b.d, b.mu, np.full(v.shape, float(p0))))

    def win(v):
        return raised_cosine_window(v, lo, hi, taper_lo, taper_hi)

    meta = {
        "window": "raised_cosine",
        "v_lo": lo,
        "v_hi": hi,
        "taper_lo": taper_lo,
        "taper_hi": taper_hi,
        "allow_wells": allow_wells,
    }
    out = traversal_amplitude_from(fn, tau_grid, lo, hi, win, meta)
    out.reference = complex(np.exp(_log_t(b.W, b.d, b.mu, np.array(float(p0)))))
    return out


def _rms_width(x: np.ndarray, density: np.ndarray, step: float) -> float:
    norm = np.sum(density) * step
    if norm == 0:
        raise ValueError("zero density")
    mean = np.sum(x * density) * step / norm
    var = np.sum((x - mean) ** 2 * density) * step / norm
    return math.sqrt(max(var, 0.0))


def uncertainty_diagnostics(phi: TraversalAmplitude) -> tuple[float, float]:
    """RMS widths of ``|phi(tau)|^2`` and of ``|windowed T(V)|^2``.

    Their product is bounded below by 1/2 (hbar = 1).
    """
    dt = _rms_width(phi.tau, np.abs(phi.values) ** 2, phi.tau_grid.step)
    dv = _rms_width(phi.v_grid.points, np.abs(phi.v_samples) ** 2, phi.v_grid.step)
    return dt, dv


def classical_duration(b: BarrierSpec, p0: float) -> float:
    """``mu d / k0`` for an above-barrier momentum."""
    k2 = p0 * p0 - 2.0 * b.mu * b.W
    if k2 <= 0:
        raise ValueError("p0 is not above the barrier")
    return b.mu * b.d / math.sqrt(k2)
