"""Von Neumann pointer with pre- and post-selection.

The measured quantity has a continuous spectrum ``A <= 0``.  With
pre-selected amplitudes ``a(A)`` and post-selected ``b(A)`` the pointer
ends up in ``Psi(x) = int G0(x - A) eta(A) dA``, ``eta = conj(b) a``: the same
shifted-copy superposition as the delay comb and the barrier, evaluated
through the shared kernel.

The switched coupling that produces this state is not simulated; its net
effect is exactly the shift of the pointer by each eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .envelopes import GaussianProfile
from .numerics import Grid1D, SampledEnvelope, fourier_pair, interpolate_bandlimited, superpose_shifted


class PostSelectionError(ValueError):
    """The overlap ``int eta dA`` vanishes; the weak value is undefined."""


@dataclass
class SelectionPair:
    """Pre-selected ``a(A)`` and post-selected ``b(A)`` on a grid with ``A <= 0``."""

    grid: Grid1D
    a: np.ndarray
    b: np.ndarray
    overlap_tol: float = 1e-12

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.b = np.asarray(self.b, dtype=complex)
        if self.a.shape != (self.grid.count,) or self.b.shape != (self.grid.count,):
            raise ValueError("a and b must be sampled on the selection grid")
        positive = self.grid.points > 0
        if np.any(self.a[positive] != 0):
            raise ValueError("pre-selected amplitude must vanish for A > 0")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("selection amplitudes must be finite")

    @classmethod
    def from_functions(cls, grid: Grid1D, a: Callable, b: Callable) -> "SelectionPair":
        A = grid.points
        av = np.where(A <= 0, np.asarray(a(A), dtype=complex), 0.0)
        return cls(grid, av, np.asarray(b(A), dtype=complex))

    @classmethod
    def from_eta(cls, grid: Grid1D, eta) -> "SelectionPair":
        """Factor a prescribed ``eta`` as ``conj(b) a`` with ``a = sqrt|eta|``."""
        eta = np.asarray(eta, dtype=complex)
        eta = np.where(grid.points <= 0, eta, 0.0)
        a = np.sqrt(np.abs(eta)).astype(complex)
        b = np.zeros_like(eta)
        nz = a != 0
        b[nz] = np.conj(eta[nz] / a[nz])
        return cls(grid, a, b)

    @property
    def eta(self) -> np.ndarray:
        return np.conj(self.b) * self.a

    def overlap(self) -> complex:
        return complex(np.trapezoid(self.eta, dx=self.grid.step))

    def check_overlap(self) -> complex:
        ov = self.overlap()
        scale = float(np.trapezoid(np.abs(self.eta), dx=self.grid.step))
        if scale == 0 or abs(ov) <= self.overlap_tol * scale:
            raise PostSelectionError("post-selection overlap vanishes; the weak value is undefined")
        return ov


@dataclass(frozen=True)
class WeakValue:
    """Weak value with its classification.

    ``anomalous``: ``Re A > 0``, outside the spectrum.  ``sharp``: the caller's
    pointer width ``sigma`` satisfies ``Re A > sigma`` (None when no width is given).
    """

    value: complex
    anomalous: bool
    sharp: bool | None

    def __complex__(self):
        return self.value


class PointerStats(NamedTuple):
    mean: float
    variance: float
    success_prob_unnorm: float


def weak_value(sel: SelectionPair, sigma: float | None = None) -> WeakValue:
    """``int A eta dA / int eta dA`` by the trapezoid rule."""
    ov = sel.check_overlap()
    num = complex(np.trapezoid(sel.grid.points * sel.eta, dx=sel.grid.step))
    val = num / ov
    sharp = None if sigma is None else bool(val.real > sigma)
    return WeakValue(val, bool(val.real > 0), sharp)


def pointer_amplitude(sel: SelectionPair, g0: SampledEnvelope, edge_tol: float = 1e-6) -> SampledEnvelope:
    """``Psi(x) = int G0(x - A) eta(A) dA`` on the grid of ``g0``.

    Uses the analytic profile of ``g0`` when present (band-limited
    interpolation otherwise).  The result is not normalised.
    """
    sel.check_overlap()
    eta = sel.eta
    w = eta * sel.grid.step
    w[0] *= 0.5
    w[-1] *= 0.5
    keep = w != 0
    profile = g0.profile
    if profile is None:

        def profile(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape, dtype=complex)
            ok = (x >= g0.grid.start) & (x <= g0.grid.stop)
            if ok.any():
                out[ok] = interpolate_bandlimited(g0, x[ok])
            return out

    vals = superpose_shifted(profile, g0.x, sel.grid.points[keep], w[keep])
    mod = np.abs(vals)
    peak = mod.max()
    if peak > 0 and max(mod[0], mod[-1]) > edge_tol * peak:
        raise ValueError("pointer grid does not cover the shifted pointer profile; widen it")
    return SampledEnvelope(g0.grid, vals, g0.scale)


def pointer_statistics(psi: SampledEnvelope) -> PointerStats:
    """Mean and variance of ``|Psi|^2 / int |Psi|^2`` and the raw norm ``int |Psi|^2``."""
    dens = np.abs(psi.values) ** 2
    norm = float(np.trapezoid(dens, dx=psi.grid.step))
    if norm == 0:
        raise ValueError("pointer amplitude has zero norm")
    x = psi.x
    mean = float(np.trapezoid(x * dens, dx=psi.grid.step) / norm)
    var = float(np.trapezoid((x - mean) ** 2 * dens, dx=psi.grid.step) / norm)
    scale2 = math.exp(2.0 * psi.scale.log_mag) if np.isfinite(psi.scale.log_mag) else 0.0
    return PointerStats(mean, var, norm * scale2)


def pointer_momentum_mean(psi: SampledEnvelope) -> float:
    """Mean momentum of the normalised pointer state."""
    spec = fourier_pair(psi, "forward", edge_tol=None)
    dens = np.abs(spec.values) ** 2
    return float(np.sum(spec.x * dens) / np.sum(dens))


def gaussian_pointer(sigma: float, grid: Grid1D) -> SampledEnvelope:
    prof = GaussianProfile(sigma, 0.0)
    return SampledEnvelope(grid, prof(grid.points), profile=prof)


def pointer_grid(sel: SelectionPair, sigma: float, points_per_sigma: float = 8.0, reach: float = 8.0) -> Grid1D:
    """Pointer grid covering the A-support widened by ``reach * sigma`` on both sides."""
    lo = sel.grid.start - reach * sigma
    hi = sel.grid.stop + reach * sigma
    # the pointer is smooth on the scale sigma, so sigma / points_per_sigma resolves it
    step = sigma / points_per_sigma
    count = max(int(math.ceil((hi - lo) / step)) + 1, 64)
    return Grid1D(lo, (hi - lo) / (count - 1), count)


def pointer_mean(sel: SelectionPair, sigma: float, grid: Grid1D | None = None) -> float:
    """Mean pointer reading for a Gaussian pointer of width ``sigma``."""
    grid = grid or pointer_grid(sel, sigma)
    return pointer_statistics(pointer_amplitude(sel, gaussian_pointer(sigma, grid))).mean


def extrapolate_to_zero(sigmas, values, degree: int = 2) -> float:
    """Polynomial fit in ``sigma^2`` evaluated at ``sigma = 0``."""
    s2 = np.asarray(sigmas, dtype=float) ** 2
    coef = np.polyfit(s2, np.asarray(values, dtype=float), degree)
    return float(coef[-1])


def weak_limit_exponent(sigmas, means, target: float) -> float:
    """Slope of ``log|mean - target|`` against ``log(1/sigma)``."""
    s = np.asarray(sigmas, dtype=float)
    dev = np.abs(np.asarray(means, dtype=float) - target)
    slope, _ = np.polyfit(np.log(1.0 / s), np.log(dev), 1)
    return float(slope)


def sample_readings(psi: SampledEnvelope, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` pointer readings from ``|Psi|^2`` (inverse CDF on the grid)."""
    dens = np.abs(psi.values) ** 2
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * psi.grid.step)])
    if cdf[-1] == 0:
        raise ValueError("pointer amplitude has zero norm")
    cdf /= cdf[-1]
    return np.interp(rng.random(n), cdf, psi.x)


def gaussian_lobes(A, lobes) -> np.ndarray:
    """Sum of unit-area Gaussian lobes ``(center, width, weight)`` evaluated at ``A``."""
    A = np.asarray(A, dtype=float)
    out = np.zeros(A.shape, dtype=complex)
    for c, w, amp in lobes:
        out += amp * np.exp(-0.5 * ((A - c) / w) ** 2) / (math.sqrt(2.0 * math.pi) * w)
    return out
