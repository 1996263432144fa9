"""Entropy solutions of the inviscid Burgers Riemann problem.

The conservation law is ``du/dt + d[u(1-u)]/dr = 0`` with step data
``u(r, 0) = lam for r <= 0, rho for r > 0``.
"""

import math
from dataclasses import dataclass


def _check_density(u, name="u"):
    if not (0.0 <= u <= 1.0) or math.isnan(u):
        raise ValueError(f"{name} must lie in [0, 1], got {u!r}")


@dataclass(frozen=True)
class RiemannProblem:
    """Step initial data: ``lam`` left of the origin (inclusive), ``rho`` right."""

    lam: float
    rho: float

    def __post_init__(self):
        _check_density(self.lam, "lam")
        _check_density(self.rho, "rho")

    @property
    def is_shock(self):
        return self.lam < self.rho

    @property
    def is_fan(self):
        return self.lam > self.rho

    def initial(self, r):
        return self.lam if r <= 0 else self.rho


@dataclass(frozen=True)
class SpaceTimePoint:
    r: float
    t: float

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"time must be non-negative, got {self.t!r}")


def flux_function(u):
    """Particle current ``u(1-u)`` carried at density ``u``."""
    _check_density(u)
    return u * (1.0 - u)


def characteristic_speed(u):
    _check_density(u)
    return 1.0 - 2.0 * u


def shock_speed(p):
    """Rankine-Hugoniot speed of the increasing step, ``1 - lam - rho``."""
    if not p.is_shock:
        raise ValueError("shock_speed needs lam < rho")
    return 1.0 - p.lam - p.rho


def riemann_solution(p, x):
    """Density ``u(r, t)``.

    On a shock line the right state is returned.  Fan endpoints use the fan
    formula, which agrees with the constant states there.
    """
    r, t = x.r, x.t
    if t == 0:
        return p.initial(r)
    if p.lam == p.rho:
        return p.lam
    if p.is_shock:
        return p.lam if r < (1.0 - p.lam - p.rho) * t else p.rho
    left = (1.0 - 2.0 * p.lam) * t
    right = (1.0 - 2.0 * p.rho) * t
    if r < left:
        return p.lam
    if r > right:
        return p.rho
    # clamp guards against rounding at the fan edges
    return min(max((t - r) / (2.0 * t), p.rho), p.lam)


def _fan_antiderivative(r, t):
    # d/dr of -(t - r)^2 / (4t) is (t - r) / (2t)
    return -((t - r) ** 2) / (4.0 * t)


def density_integral(p, a, b, t):
    """Exact mass ``int_a^b u(r, t) dr``."""
    if a > b:
        raise ValueError("density_integral needs a <= b")
    if t < 0:
        raise ValueError("time must be non-negative")
    if a == b:
        return 0.0

    def const(u, lo, hi):
        lo, hi = max(lo, a), min(hi, b)
        return u * (hi - lo) if hi > lo else 0.0

    inf = math.inf
    if t == 0 or p.lam == p.rho:
        if p.lam == p.rho:
            return p.lam * (b - a)
        return const(p.lam, -inf, 0.0) + const(p.rho, 0.0, inf)
    if p.is_shock:
        y = (1.0 - p.lam - p.rho) * t
        return const(p.lam, -inf, y) + const(p.rho, y, inf)
    left = (1.0 - 2.0 * p.lam) * t
    right = (1.0 - 2.0 * p.rho) * t
    total = const(p.lam, -inf, left) + const(p.rho, right, inf)
    lo, hi = max(left, a), min(right, b)
    if hi > lo:
        total += _fan_antiderivative(hi, t) - _fan_antiderivative(lo, t)
    return total
