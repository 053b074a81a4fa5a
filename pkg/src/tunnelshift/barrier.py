"""Rectangular-barrier scattering and wave-packet transmission.

The barrier is ``V(x) = W`` on ``0 <= x <= d``.  With
``k = sqrt(p^2 - 2 mu W)`` on the principal branch (``Im k >= 0``, so below
the barrier ``k = i kappa`` and the amplitude decays with ``d``)::

    T(p) = 4 p k exp(-i (p - k) d) / [(p + k)^2 - (p - k)^2 exp(2 i k d)]

Everything is computed as ``log T`` so that ``exp(-kappa d)`` never
underflows; the conversion to plain complex numbers happens only after the
large factors have been divided out.

Envelopes follow ``Psi(x, t) = exp(i p0 x - i p0^2 t / 2 mu) G(x, t)`` and
the packet centre at ``t = 0`` is ``x0`` (negative, left of the barrier).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .envelopes import FreePacketProfile
from .numerics import (
    AliasingError,
    ConditioningWarning,
    Grid1D,
    NumericsError,
    SampledEnvelope,
    ScaledAmplitude,
    finite_diff,
    fourier_pair,
    quadrature,
    superpose_shifted,
)

# closed form loses ~log10(1/(|k| L)) digits near threshold; switch to the series below this
_THRESHOLD_KL = 1e-4


class InitialOverlapWarning(UserWarning):
    """The incident packet overlaps the barrier at ``t = 0``."""


@dataclass(frozen=True)
class BarrierSpec:
    """Height ``W >= 0``, width ``d > 0`` and particle mass ``mu > 0``."""

    W: float
    d: float
    mu: float = 1.0

    def __post_init__(self):
        if not (self.W >= 0 and math.isfinite(self.W)):
            raise ValueError(f"BarrierSpec.W must be >= 0 (no wells), got {self.W}")
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValueError(f"BarrierSpec.d must be > 0, got {self.d}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"BarrierSpec.mu must be > 0, got {self.mu}")

    @property
    def threshold(self) -> float:
        """Momentum at which the kinetic energy equals the barrier height."""
        return math.sqrt(2.0 * self.mu * self.W)

    def kappa(self, p: float) -> float:
        """Decay constant ``sqrt(2 mu W - p^2)``; requires tunnelling."""
        arg = 2.0 * self.mu * self.W - p * p
        if arg <= 0:
            raise ValueError(f"p={p} is not below the barrier (threshold {self.threshold})")
        return math.sqrt(arg)


@dataclass(frozen=True)
class PacketSpec:
    """Incident Gaussian: mean momentum ``p0``, width ``sigma``, centre ``x0 < 0``."""

    p0: float
    sigma: float
    x0: float

    def __post_init__(self):
        if not self.p0 > 0:
            raise ValueError(f"PacketSpec.p0 must be > 0, got {self.p0}")
        if not self.sigma > 0:
            raise ValueError(f"PacketSpec.sigma must be > 0, got {self.sigma}")
        if not self.x0 < 0:
            raise ValueError(f"PacketSpec.x0 must be < 0 (left of the barrier), got {self.x0}")

    @property
    def overlaps_barrier(self) -> bool:
        return abs(self.x0) < 3.0 * self.sigma

    def free_profile(self, t: float = 0.0, mu: float = 1.0) -> FreePacketProfile:
        return FreePacketProfile(self.sigma, self.x0, self.p0, t, mu)

    def momentum_amplitude(self, q):
        """``A(q) = (2 pi)^-1 int G0(x, 0) exp(-i q x) dx`` with ``q = p - p0``."""
        q = np.asarray(q, dtype=float)
        s = self.sigma
        pref = (2.0 / (math.pi * s * s)) ** 0.25 * s * math.sqrt(math.pi) / (2.0 * math.pi)
        return pref * np.exp(-q * q * s * s / 4.0 - 1j * q * self.x0)


# --------------------------------------------------------------------------
# transmission amplitude
# --------------------------------------------------------------------------


def _k(b: BarrierSpec, p):
    k2 = p * p - 2.0 * b.mu * b.W
    return np.sqrt(k2.astype(complex)), k2


def _threshold_log_t(d: float, p, k2):
    # T = T0 + k^2 T2 + O(k^4) around p^2 = 2 mu W
    e = np.exp(-1j * p * d)
    t0 = e / (1.0 - 0.5j * p * d)
    t2 = d * (1j * d * d * p * p - 6.0 * d * p - 6.0j) * e / (3.0 * p * (d * d * p * p + 4.0j * d * p - 4.0))
    return np.log(t0 + k2 * t2)


def log_transmission(b: BarrierSpec, p) -> np.ndarray:
    """Complex ``log T(p)`` for real ``p`` (any shape), imaginary part unwrapped.

    The imaginary part is ``arg(4pk/D) + (Re k - p) d``, continuous in ``p``
    up to jumps of ``arg(4pk/D)``.  ``p = 0`` gives ``-inf`` (``T(0) = 0``).
    """
    return _log_t(b.W, b.d, b.mu, p)


def _log_t(W: float, d: float, mu: float, p) -> np.ndarray:
    # unvalidated core; negative W (a well) is accepted for the Larmor integrand
    p = np.asarray(p, dtype=float)
    if np.all(np.asarray(W) == 0):
        return np.zeros(p.shape, dtype=complex)
    k2 = p * p - 2.0 * mu * W
    k = np.sqrt(k2.astype(complex))
    with np.errstate(divide="ignore", invalid="ignore"):
        D = (p + k) ** 2 - (p - k) ** 2 * np.exp(2j * k * d)
        L = np.log(4.0 * p * k / D) - 1j * (p - k) * d
        scale = np.maximum(d, 1.0 / np.abs(p))
        near = np.abs(k) * scale < _THRESHOLD_KL
    if np.any(near):
        L = np.array(L, dtype=complex, copy=True)
        L[near] = _threshold_log_t(d, p[near], k2[near])
    zero = p == 0
    if np.any(zero):
        L = np.where(zero, complex(-np.inf, 0.0), L)
    return L


def _as_amplitude(L) -> ScaledAmplitude:
    L = np.asarray(L)
    if L.ndim == 0:
        return ScaledAmplitude(float(L.real), float(L.imag))
    return ScaledAmplitude(L.real, L.imag)


def _check_p(p):
    arr = np.asarray(p, dtype=float)
    if np.any(arr == 0):
        raise ValueError("transmission amplitude requested at p = 0")
    if not np.all(np.isfinite(arr)):
        raise ValueError("momentum must be finite")
    return arr


def rect_transmission(
    b: BarrierSpec, p, mode: str = "closed_form", n_terms: int | None = None
) -> ScaledAmplitude:
    """Transmission amplitude of the rectangular barrier.

    Parameters
    ----------
    b : BarrierSpec
    p : float or array
        Momentum, nonzero.  At the threshold ``p^2 = 2 mu W`` the removable
        ``0/0`` is resolved by a second-order expansion in ``k^2``.
    mode : {"closed_form", "series"}
        ``series`` sums the first ``n_terms`` multiple-reflection terms
        ``4pk exp(-i(p-k)d)/(p+k)^2 * sum_n r^n`` with
        ``r = ((p-k)/(p+k))^2 exp(2ikd)``.
    n_terms : int
        Number of series terms (``series`` mode only).

    Returns
    -------
    ScaledAmplitude
        ``log|T|`` and the wrapped phase.
    """
    p = _check_p(p)
    if mode == "closed_form":
        return _as_amplitude(log_transmission(b, p))
    if mode != "series":
        raise ValueError(f"unknown mode {mode!r}")
    if n_terms is None or n_terms < 1:
        raise ValueError("series mode needs n_terms >= 1")
    if b.W == 0:
        return _as_amplitude(np.zeros(p.shape, dtype=complex))
    k, _ = _k(b, p)
    d = b.d
    r = ((p - k) / (p + k)) ** 2 * np.exp(2j * k * d)
    total = np.zeros(np.shape(p), dtype=complex)
    term = np.ones(np.shape(p), dtype=complex)
    for _ in range(n_terms):
        total += term
        term = term * r
    with np.errstate(divide="ignore"):
        L = np.log(4.0 * p * k / (p + k) ** 2) - 1j * (p - k) * d + np.log(total)
    return _as_amplitude(L)


def series_ratio(b: BarrierSpec, p) -> np.ndarray:
    """Modulus of the multiple-reflection ratio ``|(p-k)/(p+k)|^2 |exp(2ikd)|``."""
    p = np.asarray(p, dtype=float)
    k, _ = _k(b, p)
    return np.abs((p - k) / (p + k)) ** 2 * np.exp(-2.0 * k.imag * b.d)


def rect_reflection(b: BarrierSpec, p) -> ScaledAmplitude:
    """Reflection amplitude ``2 mu W (1 - exp(2ikd)) / D`` (same denominator as T)."""
    p = _check_p(p)
    if b.W == 0:
        return _as_amplitude(np.full(p.shape, complex(-np.inf, 0.0)))
    k, k2 = _k(b, p)
    d = b.d
    with np.errstate(divide="ignore", invalid="ignore"):
        D = (p + k) ** 2 - (p - k) ** 2 * np.exp(2j * k * d)
        R = 2.0 * b.mu * b.W * (1.0 - np.exp(2j * k * d)) / D
        near = np.abs(k) * np.maximum(d, 1.0 / np.abs(p)) < _THRESHOLD_KL
    if np.any(near):
        pn = p[near]
        R = np.array(R, dtype=complex, copy=True)
        R[near] = d * pn / (d * pn + 2.0j)
    return ScaledAmplitude.from_complex(R)


def transfer_matrix_scattering(b: BarrierSpec, p) -> tuple[ScaledAmplitude, complex]:
    """Independent ``(T, R)`` from the ``(psi, psi')`` transfer matrix.

    Inside the barrier ``(psi, psi')(d) = P (psi, psi')(0)`` with
    ``P = [[cos kd, sin(kd)/k], [-k sin kd, cos kd]]``, which is regular at
    ``k = 0``.  Matching ``e^{ipx} + R e^{-ipx}`` on the left to
    ``t e^{ipx}`` on the right and solving through ``P^-1`` gives ``R`` and
    ``t``; ``P`` is rescaled by ``exp(-|Im k| d)`` so that nothing overflows.
    """
    p = float(p)
    if p == 0:
        raise ValueError("scattering requested at p = 0")
    d = b.d
    k = complex(np.sqrt(complex(p * p - 2.0 * b.mu * b.W)))
    s = abs(k.imag) * d
    ep = np.exp(1j * k * d - s)
    em = np.exp(-1j * k * d - s)
    cos_s = 0.5 * (ep + em)
    if abs(k * d) < 1e-3:
        z = (k * d) ** 2
        sin_over_k = d * (1.0 - z / 6.0 + z * z / 120.0) * math.exp(-s)
    else:
        sin_over_k = (ep - em) / (2j * k)
    k_sin = -(k * k) * sin_over_k  # -k sin(kd), scaled
    # P^-1 (1, ip), scaled by exp(-s)
    u1 = cos_s - 1j * p * sin_over_k
    u2 = -k_sin + 1j * p * cos_s
    denom = u1 + u2 / (1j * p)
    log_tau = math.log(2.0) - s - np.log(denom)  # tau = t exp(ipd)
    R = 2.0 * u1 / denom - 1.0
    L = log_tau - 1j * p * d
    return ScaledAmplitude(float(L.real), float(L.imag)), complex(R)


def transmission_ratio(b: BarrierSpec, p, p0: float) -> np.ndarray:
    """``T(p) / T(p0)`` computed without forming either amplitude."""
    return np.exp(log_transmission(b, p) - log_transmission(b, np.asarray(p0, dtype=float)))


def transmission_phase(b: BarrierSpec, p_grid) -> np.ndarray:
    """Continuous phase of ``T`` along an increasing momentum grid.

    The wrapped phase is unwrapped by continuity; the branch is fixed by the
    high-momentum limit, where ``T -> 1`` and the phase tends to zero, so the
    grid should extend to (or be anchored at) momenta well above the barrier.
    """
    p = np.asarray(p_grid, dtype=float)
    if np.any(np.diff(p) <= 0):
        raise ValueError("p_grid must be strictly increasing")
    L = log_transmission(b, p)
    phase = np.unwrap(np.angle(np.exp(1j * L.imag)))
    # anchor the branch at the largest momentum, where the phase is closest to 0
    last = float(L.imag[-1])
    wrapped_last = math.remainder(last, 2.0 * math.pi)
    return phase - phase[-1] + wrapped_last


# --------------------------------------------------------------------------
# moments, complex shift, phase time
# --------------------------------------------------------------------------


def _moment_scale(b: BarrierSpec, p0: float) -> float:
    k0 = abs(np.sqrt(complex(p0 * p0 - 2.0 * b.mu * b.W)))
    ratio = p0 / k0 if k0 > 0 else 1e6
    return max(b.d, 1.0 / p0) * (1.0 + ratio)


def barrier_moment(b: BarrierSpec, p0: float, n: int, h: float | None = None) -> complex:
    """``i^n d^n T/dp^n / T`` at ``p0`` by finite differences of ``T(p)/T(p0)``."""
    if n < 0 or n > 4:
        raise ValueError("barrier_moment supports n = 0..4")
    if p0 == 0:
        raise ValueError("p0 must be nonzero")
    if n == 0:
        return 1.0 + 0.0j
    if h is None:
        h = 1e-2 / _moment_scale(b, p0)

    def ratio(p):
        return complex(transmission_ratio(b, p, p0))

    return (1j) ** n * finite_diff(ratio, p0, n, h)


def complex_shift(b: BarrierSpec, p0: float) -> complex:
    """Broad-barrier shift ``alpha = d (1 + i p0 / kappa0)``.

    Only the leading term: the n-th moment of the delay distribution is
    ``alpha^n`` up to corrections of order ``d^(n-1)``.
    """
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    kappa0 = b.kappa(p0)
    return complex(b.d, b.d * p0 / kappa0)


def momentum_filter_shift(alpha: complex, sigma: float) -> float:
    """Mean-momentum boost ``2 Im alpha / sigma^2`` of the transmitted packet."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2.0 * complex(alpha).imag / sigma**2


def predicted_advancement(alpha: complex, sigma: float, t: float, mu: float = 1.0) -> float:
    """Peak lead over the free packet: ``Re alpha + (Delta p0 / mu) t``."""
    return complex(alpha).real + momentum_filter_shift(alpha, sigma) / mu * t


def phase_derivative(b: BarrierSpec, p0: float, h: float | None = None) -> float:
    """``d phi / dp`` at ``p0`` from the continuous phase."""
    if h is None:
        h = 1e-2 / _moment_scale(b, p0)
    L0 = complex(log_transmission(b, np.asarray(p0, dtype=float)))

    def phase(p):
        # local unwrap relative to p0; steps are far below a phase jump
        return float((log_transmission(b, np.asarray(p, dtype=float)) - L0).imag)

    return finite_diff(phase, p0, 1, h).real


def phase_time_barrier(b: BarrierSpec, p0: float) -> float:
    """``(mu / p0) [d + dphi/dp(p0)]``."""
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    if np.isneginf(log_transmission(b, np.asarray(p0, dtype=float)).real):
        raise ValueError("T(p0) vanishes")
    return b.mu / p0 * (b.d + phase_derivative(b, p0))


def phase_time_sweep(W: float, p0: float, widths, mu: float = 1.0) -> np.ndarray:
    """Phase time against barrier width (saturates for deep tunnelling)."""
    return np.array([phase_time_barrier(BarrierSpec(W, float(d), mu), p0) for d in widths])


def hartman_packet_width(d: float, eps: float, c: float) -> float:
    """Packet width ``c d^((1+eps)/2)`` that keeps a widening barrier in the sharp regime."""
    if not d > 0:
        raise ValueError("d must be positive")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must satisfy 0 < eps <= 1, got {eps}")
    if not c > 0:
        raise ValueError("c must be positive")
    return c * d ** ((1.0 + eps) / 2.0)


def approx_transmission(b: BarrierSpec, p0: float, p) -> ScaledAmplitude:
    """Linearised amplitude ``T(p0) exp(-i alpha (p - p0))``."""
    alpha = complex_shift(b, p0)
    q = np.asarray(p, dtype=float) - p0
    L = log_transmission(b, np.asarray(p0, dtype=float)) - 1j * alpha * q
    return _as_amplitude(L)


def approx_ratio(b: BarrierSpec, p0: float, p) -> np.ndarray:
    """``T_app(p) / T(p)``; exactly 1 at ``p = p0``."""
    alpha = complex_shift(b, p0)
    p = np.asarray(p, dtype=float)
    q = p - p0
    L0 = log_transmission(b, np.asarray(p0, dtype=float))
    diff = L0 - 1j * alpha * q - log_transmission(b, p)
    return np.where(q == 0, 1.0 + 0.0j, np.exp(diff))


# --------------------------------------------------------------------------
# delay amplitude distribution
# --------------------------------------------------------------------------


@dataclass
class DadProfile:
    """Delay amplitude distribution ``eta(x) = delta_weight * delta(x) + smooth_part(x)``.

    ``xi`` holds ``(2 pi)^-1 int (T(p) - 1) exp(ipx) dp`` and the smooth part is
    ``exp(-i p0 x) xi(x) / T(p0)``, so ``delta_weight = 1 / T(p0)``.  ``xi``
    splits into the closed-form causal tail ``-c exp(gamma x)`` for ``x < 0``
    (with ``c = mu W d``, ``gamma = c / 2``) plus a smooth remainder
    obtained by FFT; moments use the tail analytically.
    """

    grid: Grid1D
    smooth_part: np.ndarray
    delta_weight: complex
    xi: np.ndarray
    remainder: np.ndarray
    p0: float
    t_p0: complex
    tail_strength: float
    tail_rate: float
    p_grid: Grid1D

    def moment(self, n: int) -> complex:
        """``int x^n eta(x) dx``."""
        if n < 0:
            raise ValueError("moment order must be non-negative")
        x = self.grid.points
        c, g = self.tail_strength, self.tail_rate
        tail = 0.0
        if c != 0:
            tail = -c * (-1.0) ** n * math.factorial(n) / (g - 1j * self.p0) ** (n + 1)
        rem = np.sum(x**n * np.exp(-1j * self.p0 * x) * self.remainder) * self.grid.step
        smooth = (tail + rem) / self.t_p0
        return smooth + (self.delta_weight if n == 0 else 0.0)

    def causality_ratio(self, exclude_steps: int = 3) -> float:
        """``sup_{x > exclude_steps*dx} |smooth| / max |smooth|``."""
        mod = np.abs(self.smooth_part)
        peak = mod.max()
        if peak == 0:
            return 0.0
        mask = self.grid.points > exclude_steps * self.grid.step
        return float(mod[mask].max() / peak) if mask.any() else 0.0

    def imag_xi_ratio(self) -> float:
        """``max |Im xi| / max |xi|``; zero in exact arithmetic since ``T(-p) = conj T(p)``."""
        peak = np.abs(self.xi).max()
        return float(np.abs(self.xi.imag).max() / peak) if peak else 0.0

    def envelope(self) -> SampledEnvelope:
        return SampledEnvelope(self.grid, self.smooth_part)


def _tail_constants(b: BarrierSpec):
    c = b.mu * b.W * b.d
    return c, 0.5 * c


def _subtracted(b: BarrierSpec, p):
    """``T(p) - 1 - S(p)`` with ``S(p) = -i c / (p + i gamma)``; decays like ``p^-3``."""
    c, g = _tail_constants(b)
    T = np.exp(log_transmission(b, p))
    return T - 1.0 + 1j * c / (p + 1j * g)


def _dad_window(b: BarrierSpec, tol: float) -> float:
    c, g = _tail_constants(b)
    p_ref = max(g, b.threshold, 1.0 / b.d)
    ref = np.abs(_subtracted(b, np.linspace(-4 * p_ref, 4 * p_ref, 4001))).max()
    pm = 4.0 * p_ref
    while True:
        edge = np.abs(_subtracted(b, np.array([-pm, pm]))).max()
        if edge <= tol * ref:
            return pm
        pm *= 1.5


def dad(
    b: BarrierSpec,
    p0: float,
    window: float | None = None,
    grid: Grid1D | None = None,
    tol: float = 1e-7,
    tail_tol: float = 1e-8,
    max_points: int = 1 << 22,
) -> DadProfile:
    """Delay amplitude distribution of the barrier at incident momentum ``p0``.

    Parameters
    ----------
    window : float, optional
        Momentum half-width ``p_max``.  Defaults to the smallest window with
        ``|T - 1 - S| <= tol * max|T - 1 - S|`` at the edges, ``S`` being the
        subtracted ``1/p`` tail.
    grid : Grid1D, optional
        Spatial grid.  Its step fixes ``p_max = pi / dx`` and its length the
        momentum resolution; the momentum grid is placed so that it contains
        ``p0`` exactly.  By default the spatial extent doubles until the
        remainder has decayed to ``tail_tol`` of its peak at the left edge.

    Raises
    ------
    AliasingError
        If the subtracted integrand has not decayed at the window edges or the
        delay distribution has not decayed at the left end of the grid.
    """
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    if b.W == 0:
        g = grid or Grid1D.centered(0.01, 256)
        z = np.zeros(g.count, dtype=complex)
        return DadProfile(g, z, 1.0 + 0.0j, z, z, p0, 1.0 + 0.0j, 0.0, 0.0, g.conjugate())

    c, gam = _tail_constants(b)
    T0 = complex(np.exp(log_transmission(b, np.asarray(p0, dtype=float))))
    if T0 == 0:
        raise NumericsError("T(p0) underflows; the delay distribution is not representable")

    def build(xgrid: Grid1D):
        n, dx = xgrid.count, xgrid.step
        dp = 2.0 * math.pi / (n * dx)
        pmax = math.pi / dx
        k0 = int(round((p0 + pmax) / dp))
        pgrid = Grid1D(p0 - k0 * dp, dp, n)
        rem_p = _subtracted(b, pgrid.points)
        peak = np.abs(rem_p).max()
        edge = max(abs(rem_p[0]), abs(rem_p[-1]))
        if edge > tol * peak:
            raise AliasingError(
                f"dad: momentum window +-{pmax:.3g} too small, edge/peak {edge / peak:.1e} > {tol:.0e}"
            )
        spec = SampledEnvelope(pgrid, rem_p)
        rem_x = fourier_pair(spec, "inverse", conjugate_start=xgrid.start, edge_tol=None).values / (2 * math.pi)
        return pgrid, rem_x

    if grid is None:
        pmax = window if window is not None else _dad_window(b, tol)
        dx = math.pi / pmax
        extent = 16.0 * max(b.d, 1.0 / gam, 2 * math.pi / p0)
        prev_left = math.inf
        while True:
            n = 1 << int(math.ceil(math.log2(extent / dx)))
            if n > max_points:
                raise AliasingError(f"dad: needs more than {max_points} points for the requested window")
            xgrid = Grid1D(-(n - n // 8) * dx, dx, n)
            pgrid, rem_x = build(xgrid)
            mod = np.abs(rem_x)
            left = mod[: max(1, n // 64)].max()
            if left <= tail_tol * mod.max():
                break
            if left > 0.5 * prev_left:
                # rounding floor: a longer grid only adds noise to the moments
                warnings.warn(
                    f"dad: left tail stalls at {left / mod.max():.1e} of peak", ConditioningWarning, stacklevel=2
                )
                break
            prev_left = left
            extent *= 2.0
    else:
        xgrid = grid
        pgrid, rem_x = build(xgrid)
        mod = np.abs(rem_x)
        if mod[0] > tail_tol * mod.max():
            raise AliasingError("dad: delay distribution has not decayed at the left end of the grid")

    x = xgrid.points
    tail = np.where(x < 0, -c * np.exp(gam * np.minimum(x, 0.0)), 0.0)
    tail = np.where(x == 0, -0.5 * c, tail)  # half the jump at the origin
    xi = tail + rem_x
    smooth = np.exp(-1j * p0 * x) * xi / T0
    return DadProfile(xgrid, smooth, 1.0 / T0, xi, rem_x, p0, T0, c, gam, pgrid)


# --------------------------------------------------------------------------
# propagation
# --------------------------------------------------------------------------


def _window(b: BarrierSpec, pk: PacketSpec, log_ratio, edge: float = 1e-8):
    """Centre and half-widths of the momentum window around the integrand peak."""
    s = pk.sigma

    def log_weight(q):
        return log_ratio(q).real - q * q * s * s / 4.0

    half = 16.0 / s
    while True:
        qs = np.linspace(-half, half, 4001)
        lw = log_weight(qs)
        i = int(np.argmax(lw))
        if 0 < i < qs.size - 1:
            break
        half *= 2.0
        if half * s > 1e4:
            raise NumericsError("could not locate the peak of the momentum integrand")
    # refine the peak on a fine local scan
    fine = np.linspace(qs[max(i - 1, 0)], qs[min(i + 1, qs.size - 1)], 201)
    lwf = log_weight(fine)
    q_star = float(fine[np.argmax(lwf)])
    top = float(lwf.max())
    cut = top + math.log(edge)
    lo = hi = 8.0 / s
    step = 0.5 / s
    while log_weight(np.array([q_star - lo]))[0] > cut:
        lo += step
    while log_weight(np.array([q_star + hi]))[0] > cut:
        hi += step
    return q_star, lo, hi, top


def _packet_integral(b: BarrierSpec, pk: PacketSpec, x, t, rtol: float = 1e-10):
    """``G(x, t) = int T(p0+q)/T(p0) A(q) exp(iq(x - p0 t/mu) - i q^2 t / 2mu) dq``.

    ``x`` and ``t`` broadcast against each other.  Returns the samples
    (divided by the peak weight) and the ``ScaledAmplitude`` that restores
    ``T(p0)`` and the peak weight.
    """
    mu = b.mu
    p0 = pk.p0
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    L0 = complex(log_transmission(b, np.asarray(p0, dtype=float)))
    if b.W == 0:
        def log_ratio(q):
            return np.zeros(np.shape(q), dtype=complex)
    else:
        if np.isneginf(L0.real):
            raise NumericsError("T(p0) vanishes")

        def log_ratio(q):
            return log_transmission(b, p0 + q) - L0

    q_star, lo, hi, top = _window(b, pk, log_ratio)
    s = pk.sigma
    pref = (2.0 / (math.pi * s * s)) ** 0.25 * s * math.sqrt(math.pi) / (2.0 * math.pi)
    u = (x - pk.x0 - p0 * t / mu).ravel()
    tt = t.ravel()

    def integrand(q):
        lw = log_ratio(q) - q * q * s * s / 4.0 - top
        w = pref * np.exp(lw)
        ph = np.exp(1j * np.outer(q, u) - 0.5j * np.outer(q * q, tt) / mu)
        return w[:, None] * ph

    res = quadrature(integrand, q_star - lo, q_star + hi, rule="gauss", order=16, panels=8, rtol=rtol)
    vals = np.asarray(res.value).reshape(x.shape)
    scale = ScaledAmplitude(L0.real + top, L0.imag) if b.W != 0 else ScaledAmplitude(top, 0.0)
    return vals, scale


def _default_x_grid(b: BarrierSpec, pk: PacketSpec, t: float, count: int = 1024) -> Grid1D:
    prof = pk.free_profile(t, b.mu)
    width = abs(prof.sigma_t2) / pk.sigma
    lead = 0.0
    if b.W > 0 and pk.p0 < b.threshold:
        alpha = complex_shift(b, pk.p0)
        lead = abs(predicted_advancement(alpha, pk.sigma, t, b.mu))
    lo = prof.center - 6.0 * width - b.d
    hi = prof.center + 6.0 * width + b.d + lead
    return Grid1D.from_range(lo, hi, count)


def propagate(
    b: BarrierSpec,
    pk: PacketSpec,
    t: float,
    which: str = "transmitted",
    x_grid: Grid1D | None = None,
    rtol: float = 1e-10,
) -> SampledEnvelope:
    """Envelope of the transmitted (or free) packet at time ``t``.

    Momentum quadrature over ``q = p - p0`` of
    ``T(p0+q) A(q) exp(iq(x - p0 t/mu) - iq^2 t/2mu)``.  The window is
    centred on the peak of ``|T(p0+q)/T(p0)| exp(-q^2 sigma^2/4)``, which
    momentum filtering can push several ``1/sigma`` away from ``q = 0``, and
    extends until the integrand is below ``1e-8`` of its peak.
    ``T(p0)`` and the peak weight go into the envelope scale.  ``which="free"``
    uses ``T = 1`` and runs through exactly the same code as ``W = 0``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if which not in ("transmitted", "free"):
        raise ValueError(f"which must be 'transmitted' or 'free', got {which!r}")
    if pk.overlaps_barrier:
        warnings.warn(
            f"packet centre x0={pk.x0} is within 3 sigma of the barrier; "
            "the initial state already overlaps it",
            InitialOverlapWarning,
            stacklevel=2,
        )
    bb = b if which == "transmitted" else BarrierSpec(0.0, b.d, b.mu)
    grid = x_grid or _default_x_grid(b, pk, t)
    vals, scale = _packet_integral(bb, pk, grid.points, float(t), rtol)
    return SampledEnvelope(grid, vals, scale)


def free_envelope(pk: PacketSpec, x, t: float, mu: float = 1.0) -> np.ndarray:
    """Closed-form spreading Gaussian envelope."""
    return pk.free_profile(t, mu)(x)


def time_trace(
    b: BarrierSpec,
    pk: PacketSpec,
    x_det: float,
    t_grid: Grid1D,
    which: str = "transmitted",
    rtol: float = 1e-10,
) -> SampledEnvelope:
    """Envelope at a fixed detector ``x_det > d`` as a function of time."""
    if not x_det > b.d:
        raise ValueError(f"detector must sit beyond the barrier (x_det > {b.d})")
    if t_grid.start < 0:
        raise ValueError("times must be non-negative")
    bb = b if which == "transmitted" else BarrierSpec(0.0, b.d, b.mu)
    vals, scale = _packet_integral(bb, pk, x_det, t_grid.points, rtol)
    return SampledEnvelope(t_grid, vals, scale)


def _tail_convolution(prof: FreePacketProfile, x, c: float, gam: float, p0: float) -> np.ndarray:
    """``int_{-inf}^0 (-c) exp((gam - i p0) x') G0(x - x') dx'`` in closed form.

    Completing the square leaves a complementary error function; ``erfcx``
    keeps the product finite on either side of the packet centre.
    """
    x = np.asarray(x, dtype=float)
    s2 = prof.sigma_t2
    s = np.sqrt(s2)
    norm = (2.0 * prof.sigma**2 / math.pi) ** 0.25 / s
    beta = gam - 1j * p0
    u = x - prof.center
    z = (u + beta * s2 / 2.0) / s
    pref = -c * norm * s * math.sqrt(math.pi) / 2.0
    out = np.empty(x.shape, dtype=complex)
    right = z.real >= 0
    out[right] = pref * np.exp(-u[right] ** 2 / s2) * erfcx(z[right])
    left = ~right
    out[left] = pref * np.exp(beta * u[left] + beta**2 * s2 / 4.0) * erfc(z[left])
    return out


def time_trace_from_dad(
    b: BarrierSpec,
    pk: PacketSpec,
    x_det: float,
    t_grid: Grid1D,
    profile: DadProfile | None = None,
    weight_tol: float = 1e-13,
) -> SampledEnvelope:
    """Detector trace assembled from delayed free envelopes.

    ``G_T(x, t) = G0(x, t) + int G0(x - x', t) exp(-i p0 x') xi(x') dx'``:
    the free packet plus its copies shifted by every delay ``x'`` (negative)
    with weight from the delay distribution.  The exponential tail of ``xi``
    is convolved in closed form and the smooth remainder goes through the
    shared shift kernel; remainder weights below ``weight_tol`` of the largest
    are dropped.  The result is normalised like :func:`time_trace` with
    ``T(p0)`` kept inside the samples.
    """
    if profile is None:
        profile = dad(b, pk.p0)
    x = profile.grid.points
    w = np.exp(-1j * pk.p0 * x) * profile.remainder * profile.grid.step
    mod = np.abs(w)
    keep = mod > weight_tol * mod.max() if mod.max() > 0 else np.zeros(x.shape, dtype=bool)
    shifts, weights = x[keep], w[keep]
    out = np.empty(t_grid.count, dtype=complex)
    xd = np.array([x_det])
    for i, t in enumerate(t_grid.points):
        prof = pk.free_profile(float(t), b.mu)
        acc = prof(xd)[0] + superpose_shifted(prof, xd, shifts, weights)[0]
        if profile.tail_strength != 0:
            acc += _tail_convolution(prof, xd, profile.tail_strength, profile.tail_rate, pk.p0)[0]
        out[i] = acc
    return SampledEnvelope(t_grid, out)
