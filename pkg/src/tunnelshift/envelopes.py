"""Analytic pulse profiles.

Each profile evaluates on float arrays (``profile(x)``) and on single
mpmath numbers (``profile.mp(x)``).  The second form exists because the
delay-comb superposition cancels to tens of digits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import mpmath
import numpy as np


@lru_cache(maxsize=64)
def _gauss_consts(sigma: float, center: complex, dps: int):
    # constants are rebuilt per working precision; cached because .mp runs in tight loops
    sig = mpmath.mpf(sigma)
    c = mpmath.mpf(center.real) if center.imag == 0 else mpmath.mpc(center.real, center.imag)
    norm = (2 / (mpmath.pi * sig**2)) ** mpmath.mpf(0.25)
    return norm, c, 1 / sig**2


@dataclass(frozen=True)
class GaussianProfile:
    """Unit-norm Gaussian ``(2/(pi sigma^2))^(1/4) exp(-(x - center)^2 / sigma^2)``.

    ``center`` may be complex, which gives the analytic continuation used as
    the target of complex shifts.
    """

    sigma: float
    center: complex = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def norm(self) -> float:
        return (2.0 / (math.pi * self.sigma**2)) ** 0.25

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.norm * np.exp(-((x - self.center) ** 2) / self.sigma**2)

    def mp(self, x):
        norm, c, inv_s2 = _gauss_consts(self.sigma, complex(self.center), mpmath.mp.dps)
        u = x - c
        return norm * mpmath.exp(-(u * u) * inv_s2)

    def shifted(self, by: complex) -> "GaussianProfile":
        return GaussianProfile(self.sigma, self.center + by)


@dataclass(frozen=True)
class MultiHumpProfile:
    """Sum of unit-norm Gaussians at different centres."""

    humps: Tuple[GaussianProfile, ...]

    def __post_init__(self):
        if len(self.humps) < 1:
            raise ValueError("need at least one hump")

    def __call__(self, x):
        return sum(h(x) for h in self.humps)

    def mp(self, x):
        return mpmath.fsum(h.mp(x) for h in self.humps)

    def shifted(self, by: complex) -> "MultiHumpProfile":
        return MultiHumpProfile(tuple(h.shifted(by) for h in self.humps))


def _ramp(u, width):
    """Raised-cosine step from 0 (u <= -width/2) to 1 (u >= width/2)."""
    if width == 0:
        return np.where(u >= 0, 1.0, 0.0)
    t = np.clip((u + 0.5 * width) / width, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * t))


def _ramp_mp(u, width):
    if width == 0:
        return mpmath.mpf(1) if u >= 0 else mpmath.mpf(0)
    t = (u + mpmath.mpf(width) / 2) / width
    if t <= 0:
        return mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1)
    return (1 - mpmath.cos(mpmath.pi * t)) / 2


@dataclass(frozen=True)
class ChoppedProfile:
    """``base`` multiplied by a step keeping the front (larger x) or rear side.

    ``smoothing`` is the full width of a raised-cosine ramp centred on
    ``cut_at``.  Front and rear pieces of the same cut sum to ``base``.
    """

    base: object
    cut_at: float
    keep: str = "front"
    smoothing: float = 0.0

    def __post_init__(self):
        if self.keep not in ("front", "rear"):
            raise ValueError(f"keep must be 'front' or 'rear', got {self.keep!r}")
        if self.smoothing < 0:
            raise ValueError("smoothing must be non-negative")

    def window(self, x):
        s = _ramp(np.asarray(x, dtype=float) - self.cut_at, self.smoothing)
        return s if self.keep == "front" else 1.0 - s

    def __call__(self, x):
        return self.base(x) * self.window(x)

    def mp(self, x):
        s = _ramp_mp(x - mpmath.mpf(self.cut_at), self.smoothing)
        if self.keep == "rear":
            s = 1 - s
        if s == 0:
            return mpmath.mpc(0)
        return self.base.mp(x) * s

    @property
    def front_edge(self) -> float:
        """Largest x carrying amplitude when the front is discarded."""
        return self.cut_at + 0.5 * self.smoothing


@dataclass(frozen=True)
class FreePacketProfile:
    """Freely spreading Gaussian envelope at time ``t``.

    ``G0(x, t) = (2 sigma^2/pi)^(1/4) / sigma_t * exp(-(x - x0 - p0 t/mu)^2 / sigma_t^2)``
    with ``sigma_t^2 = sigma^2 + 2 i t / mu``; ``x0`` is the centre at ``t = 0``.
    The carrier ``exp(i p0 x - i p0^2 t / 2 mu)`` is not included.
    """

    sigma: float
    x0: float
    p0: float
    t: float = 0.0
    mu: float = 1.0

    @property
    def sigma_t2(self) -> complex:
        return self.sigma**2 + 2j * self.t / self.mu

    @property
    def center(self) -> float:
        return self.x0 + self.p0 * self.t / self.mu

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s2 = self.sigma_t2
        norm = (2.0 * self.sigma**2 / math.pi) ** 0.25 / np.sqrt(s2)
        return norm * np.exp(-((x - self.center) ** 2) / s2)

    def at(self, t: float) -> "FreePacketProfile":
        return FreePacketProfile(self.sigma, self.x0, self.p0, t, self.mu)
