import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tasep_hydro.burgers import (
    RiemannProblem,
    SpaceTimePoint,
    characteristic_speed,
    density_integral,
    flux_function,
    riemann_solution,
    shock_speed,
)

TOL = 1e-12


def u(lam, rho, r, t):
    return riemann_solution(RiemannProblem(lam, rho), SpaceTimePoint(r, t))


class TestGolden:
    def test_flux_function(self):
        assert flux_function(0.0) == 0.0
        assert flux_function(1.0) == 0.0
        assert abs(flux_function(0.5) - 0.25) < TOL

    def test_characteristic_speed(self):
        assert abs(characteristic_speed(0.0) - 1.0) < TOL
        assert abs(characteristic_speed(0.5)) < TOL
        assert abs(characteristic_speed(0.3) - 0.4) < TOL

    def test_shock_speed(self):
        assert abs(shock_speed(RiemannProblem(0.2, 0.8))) < TOL
        assert abs(shock_speed(RiemannProblem(0.0, 1.0))) < TOL
        assert abs(shock_speed(RiemannProblem(0.1, 0.5)) - 0.4) < TOL

    def test_riemann_solution(self):
        assert abs(u(1, 0, 0, 1) - 0.5) < TOL
        assert abs(u(1, 0, (1 - 2 * 0.3) * 2, 2) - 0.3) < TOL
        assert abs(u(0.4, 0.4, -7, 3) - 0.4) < TOL
        assert abs(u(0.2, 0.8, 0.1, 1) - 0.8) < TOL

    def test_density_integral(self):
        assert abs(density_integral(RiemannProblem(1, 0), 0, 1, 1) - 0.25) < TOL
        assert density_integral(RiemannProblem(0.3, 0.6), 0.7, 0.7, 2.0) == 0.0
        assert abs(density_integral(RiemannProblem(0.2, 0.8), -1, 1, 1) - 1.0) < TOL

    def test_density_integral_matches_fine_quadrature(self):
        # midpoint rule with step 1e-6
        p = RiemannProblem(0.2, 0.8)
        n = 2_000_000
        r = -1 + (np.arange(n) + 0.5) * (2.0 / n)
        vals = np.where(r < 0, 0.2, 0.8)
        assert abs(vals.sum() * (2.0 / n) - density_integral(p, -1, 1, 1)) < 1e-9


class TestConventions:
    def test_shock_line_takes_right_state(self):
        assert u(0.1, 0.5, 0.4 * 3, 3) == 0.5

    def test_initial_profile_at_time_zero(self):
        assert u(1, 0, 0, 0) == 1
        assert u(1, 0, 1e-9, 0) == 0
        assert u(0.2, 0.8, -1, 0) == 0.2

    def test_fan_endpoints_match_constant_states(self):
        lam, rho, t = 0.9, 0.2, 2.5
        assert abs(u(lam, rho, (1 - 2 * lam) * t, t) - lam) < TOL
        assert abs(u(lam, rho, (1 - 2 * rho) * t, t) - rho) < TOL


class TestErrors:
    @pytest.mark.parametrize("bad", [-0.1, 1.1, math.nan])
    def test_out_of_range_density(self, bad):
        with pytest.raises(ValueError):
            flux_function(bad)
        with pytest.raises(ValueError):
            characteristic_speed(bad)
        with pytest.raises(ValueError):
            RiemannProblem(bad, 0.5)

    def test_shock_speed_needs_increasing_step(self):
        with pytest.raises(ValueError):
            shock_speed(RiemannProblem(0.8, 0.2))
        with pytest.raises(ValueError):
            shock_speed(RiemannProblem(0.5, 0.5))

    def test_negative_time(self):
        with pytest.raises(ValueError):
            SpaceTimePoint(0.0, -1.0)
        with pytest.raises(ValueError):
            density_integral(RiemannProblem(1, 0), 0, 1, -1)

    def test_inverted_interval(self):
        with pytest.raises(ValueError):
            density_integral(RiemannProblem(1, 0), 1, 0, 1)


densities = st.floats(0.0, 1.0)

# property bodies as plain functions, so other suites can drive them too
SELF_SIMILARITY = (densities, densities, st.floats(-3, 3), st.floats(0.01, 5), st.floats(0.1, 10))
RANGE = (densities, densities, st.floats(-5, 5), st.floats(0, 5))
FAN_MONOTONE = (st.floats(0.01, 1.0), st.floats(0.0, 0.99), st.floats(0.1, 4))


def check_self_similarity(lam, rho, r, t, k):
    a = u(lam, rho, r, t)
    b = u(lam, rho, k * r, k * t)
    assert abs(a - b) < 1e-6 or _near_shock(lam, rho, r, t)


def check_range(lam, rho, r, t):
    v = u(lam, rho, r, t)
    assert min(lam, rho) - 1e-15 <= v <= max(lam, rho) + 1e-15


def check_fan_monotone(lam, rho, t):
    if lam <= rho:
        lam, rho = rho, lam
    rs = np.linspace(-2 * t, 2 * t, 201)
    vals = [u(lam, rho, r, t) for r in rs]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(*SELF_SIMILARITY)
    def test_self_similarity(self, lam, rho, r, t, k):
        check_self_similarity(lam, rho, r, t, k)

    @settings(max_examples=200, deadline=None)
    @given(*RANGE)
    def test_range(self, lam, rho, r, t):
        check_range(lam, rho, r, t)

    @settings(max_examples=100, deadline=None)
    @given(*FAN_MONOTONE)
    def test_fan_monotone_in_space(self, lam, rho, t):
        check_fan_monotone(lam, rho, t)

    def test_integral_agrees_with_quadrature(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            lam, rho = rng.random(2)
            a, b = np.sort(rng.uniform(-3, 3, 2))
            t = rng.uniform(0, 3)
            p = RiemannProblem(lam, rho)
            pts = [0.0, (1 - lam - rho) * t, (1 - 2 * lam) * t, (1 - 2 * rho) * t]
            pts = [x for x in pts if a < x < b]
            q, _ = quad(lambda r: riemann_solution(p, SpaceTimePoint(r, t)), a, b,
                        points=pts or None, epsabs=1e-12, epsrel=1e-12, limit=200)
            assert abs(q - density_integral(p, a, b, t)) < 1e-9

    def test_conservation(self):
        # mass change over a box containing every discontinuity equals the
        # boundary fluxes
        rng = np.random.default_rng(5)
        h = 1e-5
        for _ in range(50):
            lam, rho = rng.random(2)
            p = RiemannProblem(lam, rho)
            t = rng.uniform(0.2, 2)
            a, b = -2.5 * t, 2.5 * t
            d = (density_integral(p, a, b, t + h) - density_integral(p, a, b, t - h)) / (2 * h)
            rhs = flux_function(u(lam, rho, a, t)) - flux_function(u(lam, rho, b, t))
            assert abs(d - rhs) < 1e-6


def _near_shock(lam, rho, r, t):
    return lam < rho and abs(r - (1 - lam - rho) * t) < 1e-9 * max(1.0, abs(r))
