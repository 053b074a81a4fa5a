"""Delay-comb beamsplitter.

A pulse is split into ``K + 1`` copies delayed by ``m * dx`` (m = 0..K) and
recombined with complex weights ``eta_m``.  Choosing the weights so that the
first ``K + 1`` moments of the comb equal those of a single shift ``alpha``
advances the pulse by ``alpha`` even though no copy is advanced.

Index convention: component ``m`` is shifted by ``-m * dx`` (always a delay
for ``dx > 0``).

The advancing weights are huge and alternate in sign (``sum |eta_m| ~ 1e40``
for ``K = 30`` and ``alpha = 4 K dx``), so every sum of them loses ~40 digits
to cancellation.  Those sums are carried out in extended precision with the
working precision derived from the condition number; well-conditioned combs
stay in float64.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy.special import gammaln, logsumexp

from .envelopes import ChoppedProfile, GaussianProfile, MultiHumpProfile
from .numerics import (
    ConditioningWarning,
    Grid1D,
    SampledEnvelope,
    ScaledAmplitude,
    compensated_sum,
    interpolate_bandlimited,
    superpose_shifted,
)

#: Extra decimal digits carried beyond the estimated cancellation.
GUARD_DIGITS = 25


class GridTooShortError(ValueError):
    """The grid cannot hold every delayed copy of the pulse."""


@dataclass(eq=False)
class DelayComb:
    """Weights ``eta_m`` (m = 0..K) on delays ``-m * dx``.

    ``weights`` keeps the log-domain form; ``eta`` is the plain complex view.
    ``alpha_over_dx`` records the target shift when the comb came from
    :func:`solve_eta`, which lets sums be recomputed in extended precision.
    """

    K: int
    dx: float
    weights: ScaledAmplitude
    alpha_over_dx: complex | None = None
    _mp_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.K < 0 or int(self.K) != self.K:
            raise ValueError(f"K must be a non-negative integer, got {self.K}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if len(np.atleast_1d(self.weights.log_mag)) != self.K + 1:
            raise ValueError("need exactly K + 1 weights")

    @classmethod
    def from_eta(cls, eta: Sequence[complex], dx: float) -> "DelayComb":
        eta = np.asarray(eta, dtype=complex)
        return cls(len(eta) - 1, dx, ScaledAmplitude.from_complex(eta))

    @property
    def eta(self) -> np.ndarray:
        return np.atleast_1d(self.weights.to_complex())

    @property
    def shifts(self) -> np.ndarray:
        return -self.dx * np.arange(self.K + 1)

    @property
    def alpha(self) -> complex | None:
        if self.alpha_over_dx is None:
            return None
        return self.alpha_over_dx * self.dx

    def log_abs_sum(self) -> float:
        """``log(sum_m |eta_m|)`` without leaving the log domain."""
        return float(logsumexp(np.atleast_1d(self.weights.log_mag)))

    def eta_mp(self, dps: int):
        """Weights evaluated with ``dps`` significant digits."""
        if dps not in self._mp_cache:
            if self.alpha_over_dx is None:
                vals = [mpmath.mpmathify(complex(e)) for e in self.eta]
            else:
                vals = _eta_extended(self.K, complex(self.alpha_over_dx), dps)
            self._mp_cache[dps] = vals
        return self._mp_cache[dps]

    def required_dps(self) -> int | None:
        """Working digits needed for sums over the comb, or None for float64."""
        log10_cond = self.log_abs_sum() / math.log(10.0)
        if log10_cond < 3 or self.alpha_over_dx is None:
            return None
        return int(math.ceil(log10_cond)) + GUARD_DIGITS


def _kronecker_index(K: int, a: complex) -> int | None:
    if a.imag == 0 and a.real <= 0 and float(a.real).is_integer() and -a.real <= K:
        return int(-a.real)
    return None


def solve_eta(K: int, alpha_over_dx: complex, dx: float = 1.0) -> DelayComb:
    """Comb whose first ``K + 1`` moments equal ``alpha**n``.

    ``eta_m = (-1)^m prod_{j != m} (j + a) / (m! (K - m)!)`` with
    ``a = alpha / dx``, accumulated as a sum of logarithms so that no
    intermediate product overflows.
    """
    if K < 0 or int(K) != K:
        raise ValueError(f"K must be a non-negative integer, got {K}")
    K = int(K)
    a = complex(alpha_over_dx)
    m = np.arange(K + 1)

    hit = _kronecker_index(K, a)
    if hit is not None:
        # the vanishing factor (hit + a) kills every other weight
        lm = np.full(K + 1, -np.inf)
        lm[hit] = 0.0
        return DelayComb(K, dx, ScaledAmplitude(lm, np.zeros(K + 1)), a)

    factors = m + a
    log_f = np.log(np.abs(factors))
    arg_f = np.angle(factors)
    lm = log_f.sum() - log_f - gammaln(m + 1) - gammaln(K - m + 1)
    ph = arg_f.sum() - arg_f + np.pi * m
    return DelayComb(K, dx, ScaledAmplitude(lm, ph), a)


def _eta_extended(K: int, a: complex, dps: int):
    with mpmath.workdps(dps):
        am = mpmath.mpc(a.real, a.imag) if a.imag else mpmath.mpf(a.real)
        factors = [j + am for j in range(K + 1)]
        # prefix/suffix products give every leave-one-out product in O(K)
        pre = [mpmath.mpf(1)]
        for f in factors:
            pre.append(pre[-1] * f)
        suf = [mpmath.mpf(1)]
        for f in reversed(factors):
            suf.append(suf[-1] * f)
        suf.reverse()
        out = []
        for mm in range(K + 1):
            num = pre[mm] * suf[mm + 1]
            den = mpmath.factorial(mm) * mpmath.factorial(K - mm)
            out.append((-1) ** mm * num / den)
        return out


def delay_quantum(omega_larmor: float, d: float, p0: float) -> float:
    """Shift between neighbouring spin components, ``omega_L d / p0^2``."""
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    return omega_larmor * d / p0**2


def comb_moment(comb: DelayComb, n: int, method: str = "auto") -> complex:
    """``sum_m (-m dx)^n eta_m``.

    ``method`` selects the summation: ``"auto"`` (extended precision when the
    comb is ill-conditioned, compensated float64 otherwise),
    ``"compensated"`` or ``"plain"`` (straight float64, kept for comparison).
    """
    if n < 0:
        raise ValueError("moment order must be non-negative")
    m = np.arange(comb.K + 1)
    scale = comb.dx**n

    if method == "plain":
        return complex(np.sum(((-m.astype(float)) ** n) * comb.eta)) * scale
    if method not in ("auto", "compensated"):
        raise ValueError(f"unknown method {method!r}")

    dps = None
    if method == "auto" and comb.alpha_over_dx is not None:
        lm = np.atleast_1d(comb.weights.log_mag)
        with np.errstate(divide="ignore"):
            term_logs = lm + n * np.log(np.maximum(m, 1e-300))
        if n == 0:
            term_logs = lm
        log_terms = logsumexp(term_logs)
        a = abs(comb.alpha_over_dx)
        log_result = n * math.log(a) if a > 0 else 0.0
        log10_cond = max(0.0, (log_terms - log_result) / math.log(10.0))
        if log10_cond > 3:
            dps = int(math.ceil(log10_cond)) + GUARD_DIGITS

    if dps is None:
        terms = ((-m.astype(float)) ** n) * comb.eta if n else comb.eta
        return complex(compensated_sum(terms)) * scale

    with mpmath.workdps(dps):
        eta = comb.eta_mp(dps)
        acc = mpmath.fsum((-mm) ** n * e for mm, e in enumerate(eta))
        return complex(acc) * scale


def spin_transmission(comb: DelayComb, p) -> np.ndarray | complex:
    """``T(p) = sum_m eta_m exp(i m p dx)``; vectorised over ``p``."""
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    dps = comb.required_dps()
    if dps is None:
        z = np.exp(1j * np.outer(p_arr, np.arange(comb.K + 1)) * comb.dx)
        out = z @ comb.eta
    else:
        out = np.empty(p_arr.shape, dtype=complex)
        with mpmath.workdps(dps):
            eta = comb.eta_mp(dps)
            for i, pv in enumerate(p_arr.tolist()):
                z = mpmath.expj(mpmath.mpf(pv) * comb.dx)
                acc = mpmath.mpc(0)
                for e in reversed(eta):
                    acc = acc * z + e
                out[i] = complex(acc)
    if np.ndim(p) == 0:
        return complex(out[0])
    return out


def _margin_check(g0: SampledEnvelope, span: float, tol: float = 1e-6):
    mod = np.abs(g0.values)
    peak = mod.max()
    if peak == 0:
        return
    x = g0.x
    left = mod[x <= g0.grid.start + span]
    if left.size and left.max() > tol * peak:
        raise GridTooShortError(
            f"grid start {g0.grid.start} leaves no room for delays up to {span}; "
            "extend the grid to the left"
        )
    if mod[-1] > tol * peak:
        raise GridTooShortError("envelope has not decayed at the right edge of the grid")


def transmit_comb(g0: SampledEnvelope, comb: DelayComb) -> SampledEnvelope:
    """Recombine delayed copies: ``G_T(X) = sum_m eta_m G0(X + m dx)``.

    An envelope carrying an analytic ``profile`` is evaluated exactly (in
    extended precision when the weights cancel); bare samples are shifted
    by band-limited interpolation in float64.  The post-selection factor
    ``1 / sum_m |eta_m|`` (the square root of the best success probability)
    is returned as the envelope scale.
    """
    _margin_check(g0, comb.K * comb.dx)
    x = g0.x
    scale = ScaledAmplitude(-comb.log_abs_sum(), 0.0)
    if g0.profile is not None:
        dps = comb.required_dps()
        weights = comb.eta_mp(dps) if dps is not None else comb.eta
        vals = superpose_shifted(g0.profile, x, comb.shifts, weights, dps=dps)
        return SampledEnvelope(g0.grid, vals, scale)

    cond = math.exp(comb.log_abs_sum())
    if cond > 1e6:
        warnings.warn(
            f"sampled envelope without an analytic profile: weights cancel by {cond:.1e}, "
            "float64 interpolation will not resolve the advanced pulse",
            ConditioningWarning,
            stacklevel=2,
        )
    vals = np.zeros(x.shape, dtype=complex)
    for mm, e in enumerate(comb.eta):
        if e == 0:
            continue
        xs = x + mm * comb.dx
        inside = xs <= g0.grid.stop
        shifted = np.zeros(x.shape, dtype=complex)
        if inside.any():
            shifted[inside] = interpolate_bandlimited(g0, xs[inside])
        vals += e * shifted
    return SampledEnvelope(g0.grid, vals, scale)


def best_success_probability(comb: DelayComb) -> float:
    """``1 / (sum_m |eta_m|)^2``; underflows to 0 for extreme combs."""
    return math.exp(-2.0 * comb.log_abs_sum())


def log10_best_success_probability(comb: DelayComb) -> float:
    return -2.0 * comb.log_abs_sum() / math.log(10.0) + 0.0  # no negative zero


def phase_time_spin(alpha: complex, d: float, p0: float, mu: float = 1.0) -> float:
    """Apparent time in the field, ``(mu/p0) (d - Re alpha)``; may be negative."""
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    return mu / p0 * (d - complex(alpha).real)


def effective_velocity(alpha: complex, d: float, p0: float, mu: float = 1.0) -> float:
    """``d / tau_phase``; ``inf`` when ``Re alpha == d``."""
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    denom = mu * (1.0 - complex(alpha).real / d)
    if denom == 0:
        return math.inf
    return p0 / denom


def gaussian_pulse(sigma: float, grid: Grid1D, center: float = 0.0) -> SampledEnvelope:
    """Unit-norm Gaussian sampled on ``grid`` with its profile attached."""
    prof = GaussianProfile(sigma, center)
    return SampledEnvelope(grid, prof(grid.points), profile=prof)


def multi_hump(humps: Iterable[tuple[float, float]], grid: Grid1D) -> SampledEnvelope:
    """Sum of unit-norm Gaussians, one per ``(center, width)`` pair."""
    parts = tuple(GaussianProfile(float(s), float(a)) for a, s in humps)
    if not parts:
        raise ValueError("need at least one hump")
    prof = MultiHumpProfile(parts)
    return SampledEnvelope(grid, prof(grid.points), profile=prof)


def chop_pulse(
    g0: SampledEnvelope, cut_at: float, keep: str = "front", smoothing_width: float = 0.0
) -> SampledEnvelope:
    """Keep one side of ``cut_at``; the front is the larger-x side."""
    if not g0.grid.contains(cut_at):
        raise ValueError(f"cut_at={cut_at} lies outside the grid")
    if g0.profile is not None:
        prof = ChoppedProfile(g0.profile, cut_at, keep, smoothing_width)
        return SampledEnvelope(g0.grid, prof(g0.x), g0.scale, prof)
    helper = ChoppedProfile(lambda x: 1.0, cut_at, keep, smoothing_width)
    return SampledEnvelope(g0.grid, g0.values * helper.window(g0.x), g0.scale)
