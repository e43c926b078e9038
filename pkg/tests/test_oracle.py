"""Closed-form solution checks.

Every formula is cross-checked against an independent path: literal
textbook expressions, adaptive quadrature of the instantaneous forms,
or an exactly-known discrete curve.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from mcflow.errors import OutOfRange, ShapeMismatch
from mcflow.oracle import (
    SphereSolution,
    compare,
    sampled_trajectory,
    sphere_area_constant,
    sphere_functional,
)
from mcflow.shapes import ellipsoid, icosphere, regular_polygon
from mcflow.surface import integrate


def test_area_constants():
    assert sphere_area_constant(1) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert sphere_area_constant(2) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert sphere_area_constant(3) == pytest.approx(2.0 * math.pi ** 2,
                                                    rel=1e-14)


def test_radius_law_and_vanishing_time():
    sol = SphereSolution(2, 1.0)
    assert sol.T == pytest.approx(0.25, rel=1e-15)
    assert sol.radius(0.0) == 1.0
    assert sol.radius(0.09) == pytest.approx(0.8, rel=1e-14)
    assert sol.mean_curvature(0.09) == pytest.approx(2.0 / 0.8, rel=1e-14)
    assert sol.abs_a(0.09) == pytest.approx(math.sqrt(2.0) / 0.8, rel=1e-14)
    assert sol.measure(0.09) == pytest.approx(4.0 * math.pi * 0.64, rel=1e-14)
    circle = SphereSolution(1, 1.0)
    assert circle.T == pytest.approx(0.5, rel=1e-15)
    assert circle.radius(0.18) == pytest.approx(0.8, rel=1e-14)


def test_instantaneous_moment_matches_literal():
    # integral |A|^p dmu = n^(p/2) omega_n R^(n-p)
    sol = SphereSolution(2, 1.0)
    r = sol.radius(0.1)
    for p in (2.0, 4.0, 5.0, 6.0):
        assert sol.moment(0.1, p) == pytest.approx(
            2.0 ** (p / 2.0) * 4.0 * math.pi * r ** (2.0 - p), rel=1e-13)
    circle = SphereSolution(1, 2.0)
    r = circle.radius(0.5)
    assert circle.moment(0.5, 3.0) == pytest.approx(
        2.0 * math.pi * r ** (1.0 - 3.0), rel=1e-13)


def test_moment_matches_discrete_polygon():
    # a k-gon of radius r has exactly known measure and curvature, so the
    # discretized moment approximates the closed form at O(1/k^2)
    r = 0.7
    surface = regular_polygon(2048, radius=r)
    sol = SphereSolution(1, r)
    for p in (2.0, 3.0):
        discrete = integrate(surface, np.sqrt(surface.A2), p)
        assert discrete == pytest.approx(sol.moment(0.0, p), rel=1e-4)


def test_moment_matches_discrete_mesh():
    surface = icosphere(4)
    sol = SphereSolution(2, 1.0)
    discrete = integrate(surface, np.sqrt(surface.A2), 2.0)
    assert discrete == pytest.approx(sol.moment(0.0, 2.0), rel=2e-2)


def test_cumulative_moment_against_quadrature():
    for n in (1, 2):
        sol = SphereSolution(n, 1.0)
        t = 0.6 * sol.T
        for p in (n + 1.0, n + 2.0, n + 3.0, 6.0):
            numeric, _ = quad(lambda s: sol.moment(s, p), 0.0, t,
                              epsabs=1e-13, epsrel=1e-11)
            assert sol.cumulative_moment(t, p) == pytest.approx(
                numeric, rel=1e-9)


def test_critical_cumulative_literal_values():
    # at the time where R^2 has dropped to 1/5 the critical integral is
    # (closed form) 4 pi ln5 for surfaces and pi ln5 for curves
    assert sphere_functional(2, 1.0, 0.2, "critical") == pytest.approx(
        4.0 * math.pi * math.log(5.0), rel=1e-12)
    assert sphere_functional(1, 1.0, 0.4, "critical") == pytest.approx(
        math.pi * math.log(5.0), rel=1e-12)


def test_supercritical_literal_value():
    # n=2, p=5, t=0.2: 2^(5/2) 4pi (sqrt5 - 1)/2 = 2^(7/2) pi (sqrt5 - 1)
    assert sphere_functional(2, 1.0, 0.2, "supercritical") == pytest.approx(
        2.0 ** 3.5 * math.pi * (math.sqrt(5.0) - 1.0), rel=1e-12)


def test_divergence_dichotomy_at_vanishing_time():
    sol = SphereSolution(2, 1.0)
    # subcritical power stays finite at T, critical and above diverge
    assert math.isfinite(sol.cumulative_moment(sol.T, 3.0))
    assert sol.cumulative_moment(sol.T, 4.0) == math.inf
    assert sol.cumulative_moment(sol.T, 5.0) == math.inf


def test_mixed_norm_against_quadrature():
    sol = SphereSolution(2, 1.0)
    t = 0.7 * sol.T
    for p, q in ((4.0, 4.0), (6.0, 3.0), (3.0, 3.0), (6.0, 6.0)):
        numeric, _ = quad(lambda s: sol.moment(s, p) ** (q / p), 0.0, t,
                          epsabs=1e-13, epsrel=1e-11)
        assert sol.mixed_norm_power(t, p, q) == pytest.approx(
            numeric, rel=1e-9)
        assert sol.mixed_norm(t, p, q) == pytest.approx(
            numeric ** (1.0 / q), rel=1e-9)


def test_mixed_norm_critical_pairs_diverge():
    # scaling-critical pairs n/p + 2/q = 1 carry the logarithm
    sol = SphereSolution(2, 1.0)
    for p, q in ((4.0, 4.0), (6.0, 3.0), (8.0, 8.0 / 3.0)):
        assert sol.mixed_norm_power(sol.T, p, q) == math.inf
    # strictly subcritical pairing stays finite at T
    assert math.isfinite(sol.mixed_norm_power(sol.T, 3.0, 3.0))


def test_log_weighted_integrand_identity():
    # |A| is spatially constant on the sphere, so G is exactly the
    # critical moment divided by log(2 + |A|)
    for n in (1, 2):
        sol = SphereSolution(n, 1.0)
        for t in (0.0, 0.3 * sol.T, 0.9 * sol.T):
            expected = sol.moment(t, n + 2) / math.log(2.0 + sol.abs_a(t))
            assert sol.g_instantaneous(t) == pytest.approx(expected,
                                                           rel=1e-13)


def test_log_weighted_cumulative_monotone_and_consistent():
    sol = SphereSolution(2, 1.0)
    ts = np.linspace(0.0, 0.96 * sol.T, 9)
    values = [sol.g_cumulative(t) for t in ts]
    assert values[0] == 0.0
    assert all(b > a for a, b in zip(values, values[1:]))
    # trapezoid on a dense grid agrees with the adaptive quadrature
    grid = np.linspace(0.0, ts[-1], 20001)
    dense = np.trapezoid([sol.g_instantaneous(s) for s in grid], grid)
    assert values[-1] == pytest.approx(dense, rel=1e-6)


def test_h_moment_and_critical_mixed_power():
    sol = SphereSolution(2, 1.0)
    r = sol.radius(0.1)
    assert sol.h_moment(0.1) == pytest.approx(
        2.0 ** 5 * 4.0 * math.pi * r ** (2.0 - 5.0), rel=1e-13)
    t = 0.6 * sol.T
    numeric, _ = quad(lambda s: sol.h_moment(s) ** (2.0 / 3.0), 0.0, t,
                      epsabs=1e-13, epsrel=1e-11)
    assert sol.h_mixed23(t) == pytest.approx(numeric, rel=1e-9)
    assert sol.h_mixed23(sol.T) == math.inf


def test_functional_dispatch():
    sol = SphereSolution(2, 1.0)
    t = 0.15
    assert sphere_functional(2, 1.0, t, "radius") == sol.radius(t)
    assert sphere_functional(2, 1.0, t, "sup-a") == sol.abs_a(t)
    assert sphere_functional(2, 1.0, t, "sup_a") == sol.abs_a(t)
    assert sphere_functional(2, 1.0, t, "h") == sol.mean_curvature(t)
    assert sphere_functional(2, 1.0, t, "measure") == sol.measure(t)
    assert sphere_functional(2, 1.0, t, "moment:4") == sol.moment(t, 4.0)
    assert sphere_functional(2, 1.0, t, "cumulative:4") == \
        sphere_functional(2, 1.0, t, "critical")
    assert sphere_functional(2, 1.0, t, "cumulative:5") == \
        sphere_functional(2, 1.0, t, "supercritical")
    assert sphere_functional(2, 1.0, t, "mixed:4:4") == sol.mixed_norm(
        t, 4.0, 4.0)
    assert sphere_functional(2, 1.0, t, "subcritical-log") == \
        sol.g_instantaneous(t)
    assert sphere_functional(2, 1.0, t, "h-moment") == sol.h_moment(t)
    with pytest.raises(ValueError):
        sphere_functional(2, 1.0, t, "bogus")
    with pytest.raises(ValueError):
        sphere_functional(2, 1.0, t, "mixed:4")


def test_domain_guards():
    sol = SphereSolution(2, 1.0)
    with pytest.raises(OutOfRange):
        sol.radius(sol.T)
    with pytest.raises(OutOfRange):
        sol.radius(-1e-3)
    with pytest.raises(OutOfRange):
        sol.cumulative_moment(sol.T + 1e-6, 4.0)
    # the closed endpoint is allowed for cumulative quantities
    assert sol.cumulative_moment(sol.T, 4.0) == math.inf
    with pytest.raises(ValueError):
        SphereSolution(0, 1.0)
    with pytest.raises(ValueError):
        SphereSolution(2, -1.0)


def test_sampled_trajectory_layout():
    times = np.linspace(0.0, 0.2, 41)
    traj = sampled_trajectory(2, 1.0, times)
    assert traj.n == 2
    assert traj.status == "ReachedTEnd"
    assert np.all(np.diff(traj.times) > 0)
    for key in ("radius", "sup_a", "measure", "g", "g13", "h_moment",
                "moment:4", "moment:5", "moment:6"):
        assert key in traj.columns
    for key in ("g", "h_moment", "hpow23", "moment:4", "moment:5",
                "moment:6"):
        assert key in traj.cumulative
    assert np.isnan(traj.cumulative["g13"]).all()
    assert traj.provenance["source"] == "closed-form sphere solution"
    with pytest.raises(OutOfRange):
        sampled_trajectory(2, 1.0, [0.0, 0.25])


def test_compare_is_exact_on_itself():
    times = np.linspace(0.0, 0.19, 50)
    traj = sampled_trajectory(2, 1.0, times)
    report = compare(traj, SphereSolution(2, 1.0))
    # the only inexact series is the log-weighted cumulative, where the
    # two quadrature tolerances differ
    assert report["max_rel_overall"] < 1e-6
    assert report["samples"] == 50
    assert set(report["series"]) >= {"radius", "sup_a", "measure",
                                     "cumulative moment:4"}


def test_compare_rejects_mismatched_inputs():
    times = np.linspace(0.0, 0.19, 10)
    traj = sampled_trajectory(2, 1.0, times)
    with pytest.raises(ShapeMismatch):
        compare(traj, SphereSolution(1, 1.0))
    lumpy = sampled_trajectory(2, 1.0, times,
                               surface=ellipsoid(2, (1.3, 1.0, 0.8)))
    with pytest.raises(ShapeMismatch):
        compare(lumpy, SphereSolution(2, 1.0))
    round_start = sampled_trajectory(2, 1.0, times, surface=icosphere(3))
    report = compare(round_start, SphereSolution(2, 1.0))
    assert report["max_rel_overall"] < 1e-6
