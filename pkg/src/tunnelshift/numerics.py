"""Shared numerical substrate.

Grids, log-domain complex amplitudes, sampled envelopes, a dense Fourier
pair, finite differences, composite quadrature and the shifted-superposition
kernel that every convolution in the package goes through.

Conventions (hbar = 1)::

    forward:  F(v) = (2 pi)^-1 * integral f(u) exp(-i u v) du
    inverse:  f(u) =            integral F(v) exp(+i u v) dv

so that ``G(x) = integral A(p) exp(i p x) dp`` pairs an envelope with its
momentum distribution, and Parseval reads ``int |f|^2 = 2 pi int |F|^2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss

#: ``exp`` overflows float64 just above this.
OVERFLOW_LOG = 709.0


class NumericsError(RuntimeError):
    """Base class for numerical-control failures."""


class AliasingError(NumericsError):
    """Samples have not decayed at the window edge."""


class QuadratureError(NumericsError):
    """Two refinement levels disagree beyond tolerance."""


class ConditioningWarning(UserWarning):
    """A float64 evaluation is known to be ill-conditioned."""


def wrap_phase(phase):
    """Map angles onto (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(phase, dtype=float), 2.0 * np.pi)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``start + i*step`` for ``i = 0 .. count-1``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError(f"Grid1D.step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"Grid1D.count must be an integer >= 2, got {self.count}")
        if not math.isfinite(self.start):
            raise ValueError("Grid1D.start must be finite")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_range(cls, lo: float, hi: float, count: int) -> "Grid1D":
        """Grid with ``count`` points spanning ``[lo, hi]`` inclusive."""
        return cls(lo, (hi - lo) / (count - 1), count)

    @classmethod
    def centered(cls, step: float, count: int) -> "Grid1D":
        """FFT-style grid ``(-count//2 .. count - count//2 - 1) * step``."""
        return cls(-(count // 2) * step, step, count)

    @classmethod
    def from_points(cls, points, rtol: float = 1e-9) -> "Grid1D":
        """Recover a grid from explicit points; raises if they are not uniform."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("need at least two points")
        steps = np.diff(pts)
        step = (pts[-1] - pts[0]) / (pts.size - 1)
        if np.max(np.abs(steps - step)) > rtol * abs(step):
            raise ValueError("points are not uniformly spaced")
        return cls(float(pts[0]), float(step), pts.size)

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def conjugate(self, start: float | None = None) -> "Grid1D":
        """Reciprocal grid of the same size (``step * conj_step = 2 pi / count``)."""
        cstep = 2.0 * np.pi / (self.count * self.step)
        if start is None:
            start = -(self.count // 2) * cstep
        return Grid1D(start, cstep, self.count)

    def contains(self, value: float) -> bool:
        return self.start <= value <= self.stop


# --------------------------------------------------------------------------
# log-domain amplitudes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledAmplitude:
    """Complex number(s) stored as natural-log modulus and phase.

    ``log_mag = -inf`` encodes an exact zero.  Fields may be scalars or
    equally-shaped arrays; arithmetic broadcasts like numpy.
    """

    log_mag: Any = 0.0
    phase: Any = 0.0

    def __post_init__(self):
        lm = np.asarray(self.log_mag, dtype=float)
        ph = wrap_phase(self.phase)
        if np.ndim(lm) == 0:
            lm = float(lm)
        object.__setattr__(self, "log_mag", lm)
        object.__setattr__(self, "phase", ph)

    @classmethod
    def from_complex(cls, z) -> "ScaledAmplitude":
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            lm = np.log(np.abs(z))
        return cls(lm, np.angle(z))

    @classmethod
    def one(cls) -> "ScaledAmplitude":
        return cls(0.0, 0.0)

    @classmethod
    def zero(cls) -> "ScaledAmplitude":
        return cls(-np.inf, 0.0)

    def __mul__(self, other):
        if not isinstance(other, ScaledAmplitude):
            other = ScaledAmplitude.from_complex(other)
        return ScaledAmplitude(self.log_mag + other.log_mag, self.phase + other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledAmplitude):
            other = ScaledAmplitude.from_complex(other)
        if np.any(np.isneginf(other.log_mag)):
            raise ZeroDivisionError("division by an exact zero amplitude")
        return ScaledAmplitude(self.log_mag - other.log_mag, self.phase - other.phase)

    def __pow__(self, n: int):
        return ScaledAmplitude(self.log_mag * n, self.phase * n)

    def __getitem__(self, item):
        return ScaledAmplitude(np.asarray(self.log_mag)[item], np.asarray(self.phase)[item])

    def __len__(self):
        return len(np.asarray(self.log_mag))

    def conjugate(self) -> "ScaledAmplitude":
        return ScaledAmplitude(self.log_mag, -np.asarray(self.phase))

    @property
    def is_zero(self):
        return np.isneginf(self.log_mag)

    def to_complex(self):
        """Plain complex value(s); refuses when the modulus would overflow."""
        if np.any(np.asarray(self.log_mag) >= OVERFLOW_LOG):
            raise OverflowError("amplitude modulus exceeds float64 range")
        out = np.exp(self.log_mag + 1j * np.asarray(self.phase))
        if np.ndim(out) == 0:
            return complex(out)
        return out

    def __complex__(self):
        return complex(self.to_complex())

    def log10_abs(self):
        return np.asarray(self.log_mag) / np.log(10.0)


# --------------------------------------------------------------------------
# envelopes
# --------------------------------------------------------------------------


@dataclass
class SampledEnvelope:
    """Complex samples on a uniform grid times a global log-domain factor.

    ``profile`` optionally carries an analytic description of the same
    function (see :mod:`tunnelshift.envelopes`), which consumers may use to
    evaluate it off-grid or in extended precision.
    """

    grid: Grid1D
    values: np.ndarray
    scale: ScaledAmplitude = field(default_factory=ScaledAmplitude.one)
    profile: Any = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.count,):
            raise ValueError(
                f"values has shape {self.values.shape}, grid expects ({self.grid.count},)"
            )
        if np.ndim(self.scale.log_mag) != 0:
            raise ValueError("SampledEnvelope.scale must be a scalar amplitude")

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    def full(self) -> np.ndarray:
        """Samples with the global factor applied (may underflow to zero)."""
        if np.isneginf(self.scale.log_mag):
            return np.zeros_like(self.values)
        lm = self.scale.log_mag
        if lm >= OVERFLOW_LOG:
            raise OverflowError("envelope scale too large for float64")
        return self.values * np.exp(lm + 1j * self.scale.phase)

    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def norm2(self) -> float:
        """``integral |values|^2`` by the trapezoid rule (scale excluded)."""
        return float(np.trapezoid(np.abs(self.values) ** 2, dx=self.grid.step))

    def with_values(self, values, scale: ScaledAmplitude | None = None, profile=None):
        return SampledEnvelope(self.grid, values, self.scale if scale is None else scale, profile)


def sample(profile: Callable, grid: Grid1D, scale: ScaledAmplitude | None = None) -> SampledEnvelope:
    """Sample an analytic profile onto ``grid`` and keep it attached."""
    return SampledEnvelope(grid, profile(grid.points), scale or ScaledAmplitude.one(), profile)


# --------------------------------------------------------------------------
# Fourier pair
# --------------------------------------------------------------------------


def _edge_check(values: np.ndarray, edge_tol: float | None, what: str):
    if edge_tol is None:
        return
    peak = np.max(np.abs(values))
    if peak == 0:
        return
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > edge_tol * peak:
        raise AliasingError(
            f"{what}: edge modulus {edge / peak:.2e} of peak exceeds {edge_tol:.1e}; widen the window"
        )


def fourier_pair(
    f: SampledEnvelope,
    direction: str = "forward",
    conjugate_start: float | None = None,
    edge_tol: float | None = 1e-8,
) -> SampledEnvelope:
    """Dense discrete transform between an envelope and its conjugate variable.

    Parameters
    ----------
    f : SampledEnvelope
        Input samples; the grid's uniformity is guaranteed by :class:`Grid1D`.
    direction : {"forward", "inverse"}
        ``forward`` computes ``(2 pi)^-1 int f(u) exp(-iuv) du``,
        ``inverse`` computes ``int F(v) exp(+iuv) dv``.
    conjugate_start : float, optional
        First point of the output grid.  Defaults to the centred FFT grid;
        pass the original ``start`` to make a roundtrip land on the input grid.
    edge_tol : float or None
        Maximum edge-to-peak modulus ratio tolerated before raising
        :class:`AliasingError`.  ``None`` disables the check.

    Returns
    -------
    SampledEnvelope
        Samples on the conjugate grid; the global scale is carried through.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    _edge_check(f.values, edge_tol, "fourier_pair")
    g = f.grid
    out = g.conjugate(conjugate_start)
    n = g.count
    j = np.arange(n)
    u0, du, v0 = g.start, g.step, out.start
    if direction == "forward":
        pre = f.values * np.exp(-1j * j * du * v0)
        vals = np.fft.fft(pre) * np.exp(-1j * u0 * out.points) * du / (2.0 * np.pi)
    else:
        pre = f.values * np.exp(1j * j * du * v0)
        vals = np.fft.ifft(pre) * n * np.exp(1j * u0 * out.points) * du
    return SampledEnvelope(out, vals, f.scale)


def interpolate_bandlimited(env: SampledEnvelope, x) -> np.ndarray:
    """Fourier (periodic sinc) interpolation of ``env.values`` at points ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    spec = fourier_pair(env, "forward", edge_tol=None)
    p = spec.grid.points
    phase = np.exp(1j * np.outer(x, p))
    return (phase @ spec.values) * spec.grid.step


# --------------------------------------------------------------------------
# sums, derivatives, quadrature
# --------------------------------------------------------------------------


def compensated_sum(values) -> complex | float:
    """Neumaier-compensated sum; real and imaginary parts tracked separately."""
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        return complex(compensated_sum(arr.real), compensated_sum(arr.imag))
    s = 0.0
    c = 0.0
    for v in arr.ravel().tolist():
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


# second-order central stencils, offsets -r..r
_STENCILS = {
    1: (1, np.array([-0.5, 0.0, 0.5])),
    2: (1, np.array([1.0, -2.0, 1.0])),
    3: (2, np.array([-0.5, 1.0, 0.0, -1.0, 0.5])),
    4: (2, np.array([1.0, -4.0, 6.0, -4.0, 1.0])),
}


def finite_diff(f: Callable[[float], complex], p0: float, order: int, h: float) -> complex:
    """Central-difference ``order``-th derivative with one Richardson step.

    Evaluates the second-order stencil at steps ``h`` and ``h/2`` and combines
    them as ``(4 D(h/2) - D(h)) / 3``.
    """
    if order < 0 or order > 4:
        raise ValueError("finite_diff supports derivative orders 0..4")
    if not h > 0:
        raise ValueError("step h must be positive")
    if order == 0:
        val = complex(f(p0))
        if not np.isfinite(val):
            raise FloatingPointError(f"f({p0}) is not finite")
        return val

    radius, coef = _STENCILS[order]

    def estimate(step):
        offs = np.arange(-radius, radius + 1)
        vals = np.array([complex(f(p0 + o * step)) for o in offs])
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite value inside the finite-difference stencil")
        return np.dot(coef, vals) / step**order

    coarse = estimate(h)
    fine = estimate(h / 2.0)
    return complex((4.0 * fine - coarse) / 3.0)


@dataclass(frozen=True)
class QuadratureResult:
    """Integral estimate ``value * scale`` with refinement error ``error``."""

    value: Any
    error: float
    scale: ScaledAmplitude = field(default_factory=ScaledAmplitude.one)
    panels: int = 0

    def total(self):
        return self.value * self.scale.to_complex()


def _normalise_integrand(vals):
    """Turn a ScaledAmplitude-valued sample set into (O(1) array, scale)."""
    if isinstance(vals, ScaledAmplitude):
        lm = np.asarray(vals.log_mag, dtype=float)
        finite = lm[np.isfinite(lm)]
        ref = float(finite.max()) if finite.size else 0.0
        arr = np.exp(lm - ref) * np.exp(1j * np.asarray(vals.phase))
        return arr, ScaledAmplitude(ref, 0.0)
    return np.asarray(vals), None


def quadrature(
    f: Callable,
    a: float,
    b: float,
    rule: str = "gauss",
    order: int = 16,
    panels: int = 8,
    rtol: float = 1e-10,
    atol: float = 0.0,
    max_panels: int = 1 << 14,
) -> QuadratureResult:
    """Composite Gauss-Legendre or trapezoid integral over ``[a, b]``.

    ``f`` is called once per refinement level with a 1-D array of nodes and
    may return an array whose leading axis runs over the nodes (extra axes are
    integrated independently) or a :class:`ScaledAmplitude` of that shape; in
    the latter case the largest modulus is factored into ``result.scale``.

    The panel count doubles until two successive levels agree to
    ``max(atol, rtol * max|I|)`` or to the rounding floor of ``int |f|``; :class:`QuadratureError` is raised if that
    never happens before ``max_panels``.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("quadrature needs a finite interval")
    if rule not in ("gauss", "trapezoid"):
        raise ValueError(f"unknown rule {rule!r}")
    if a == b:
        return QuadratureResult(0.0, 0.0)

    def level(npan, ref_scale):
        if rule == "gauss":
            xg, wg = leggauss(order)
            edges = np.linspace(a, b, npan + 1)
            half = 0.5 * (edges[1:] - edges[:-1])
            mid = 0.5 * (edges[1:] + edges[:-1])
            nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
            weights = (half[:, None] * wg[None, :]).ravel()
        else:
            nodes = np.linspace(a, b, npan + 1)
            weights = np.full(nodes.size, (b - a) / npan)
            weights[0] *= 0.5
            weights[-1] *= 0.5
        vals, scale = _normalise_integrand(f(nodes))
        if scale is not None and ref_scale is not None:
            vals = vals * np.exp(scale.log_mag - ref_scale.log_mag)
            scale = ref_scale
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand produced non-finite values")
        mass = float(np.max(np.tensordot(np.abs(weights), np.abs(vals), axes=(0, 0)), initial=0.0))
        return np.tensordot(weights, vals, axes=(0, 0)), scale, mass

    npan = max(1, panels)
    prev, scale, _ = level(npan, None)
    while True:
        npan *= 2
        cur, _, mass = level(npan, scale)
        err = float(np.max(np.abs(cur - prev)))
        mag = float(np.max(np.abs(cur))) if np.size(cur) else 0.0
        # cancelling integrands cannot beat rounding on int |f|
        floor = 64.0 * np.finfo(float).eps * mass
        if err <= max(atol, rtol * mag, floor):
            value = complex(cur) if np.ndim(cur) == 0 else cur
            return QuadratureResult(value, err, scale if scale is not None else ScaledAmplitude.one(), npan)
        if npan >= max_panels:
            raise QuadratureError(
                f"no convergence on [{a}, {b}] with {npan} panels: error {err:.2e}, scale {mag:.2e}"
            )
        prev = cur


def gauss_rule(a: float, b: float, order: int, panels: int = 1):
    """Nodes and weights of a composite Gauss-Legendre rule."""
    xg, wg = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * wg).ravel()


# --------------------------------------------------------------------------
# shifted superposition kernel
# --------------------------------------------------------------------------


def superpose_shifted(
    profile: Callable,
    x,
    shifts: Sequence,
    weights: Sequence,
    dps: int | None = None,
) -> np.ndarray:
    """``sum_j weights[j] * profile(x - shifts[j])`` evaluated at every ``x``.

    This is the one convolution used by the delay comb, the barrier's delay
    amplitude distribution and the von Neumann pointer.  With ``dps`` set the
    sum is accumulated in ``dps``-digit arithmetic through ``profile.mp``,
    which is required when the weights cancel to many digits.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shifts = np.asarray(shifts)
    if dps is None:
        w = np.asarray(weights, dtype=complex)
        out = np.zeros(x.shape, dtype=complex)
        if shifts.size > x.size:
            # many shifts, few points: evaluate blocks of the outer difference
            block = max(1, (1 << 20) // x.size)
            for i in range(0, shifts.size, block):
                s, wj = shifts[i : i + block], w[i : i + block]
                out += np.asarray(profile((x[:, None] - s[None, :]).ravel())).reshape(x.size, s.size) @ wj
            return out
        for s, wj in zip(shifts, w):
            if wj != 0:
                out += wj * profile(x - s)
        return out

    if not hasattr(profile, "mp"):
        raise TypeError("extended-precision superposition needs a profile with an .mp() method")
    out = np.empty(x.shape, dtype=complex)
    with mpmath.workdps(dps):
        ws = [w if isinstance(w, (mpmath.mpf, mpmath.mpc)) else mpmath.mpmathify(w) for w in weights]
        ss = [mpmath.mpf(float(s)) if not isinstance(s, (mpmath.mpf, mpmath.mpc)) else s for s in shifts]
        for i, xi in enumerate(x.tolist()):
            xm = mpmath.mpf(xi)
            acc = mpmath.mpc(0)
            for s, wj in zip(ss, ws):
                if wj != 0:
                    acc += wj * profile.mp(xm - s)
            out[i] = complex(acc)
    return out


def warn_conditioning(condition: float, what: str):
    if condition * np.finfo(float).eps > 1e-6:
        warnings.warn(
            f"{what}: condition number {condition:.2e} exceeds float64 reach",
            ConditioningWarning,
            stacklevel=3,
        )
