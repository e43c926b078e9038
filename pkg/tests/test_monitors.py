"""Monitor reports: criticality labels, growth-rate fits, finals.

The dichotomy checks run on the subdivision-4 sphere: at a type-I
singularity the critical integrand has log-log slope 1, the log-weighted
integrand just under 1, the supercritical integrand 3/2, sup|A| exactly
1/2, and the (6,6) norm series 1/6.
"""

import math

import numpy as np
import pytest

from mcflow.errors import TrajectoryTooShort
from mcflow.monitors import (
    CRITICAL,
    SUBCRITICAL,
    SUPERCRITICAL,
    criticality,
    critical_power,
    growth_rate_fit,
    keybound_check,
    mixed_norm,
    mixed_norm_report,
    power_report,
    subcritical_log,
    sup_a_report,
    supercritical,
)
from mcflow.oracle import SphereSolution, sampled_trajectory


def test_pair_classification():
    assert criticality(2, 4.0, 4.0) == CRITICAL
    assert criticality(2, 6.0, 3.0) == CRITICAL
    assert criticality(1, 3.0, 3.0) == CRITICAL
    assert criticality(2, 3.0, 3.0) == SUBCRITICAL
    assert criticality(2, 6.0, 6.0) == SUPERCRITICAL
    with pytest.raises(ValueError):
        criticality(2, 0.0, 4.0)


def test_growth_rate_fit_recovers_exact_power_law():
    t_sing = 1.0
    times = np.linspace(0.0, 0.99, 400)
    values = 2.0 * (t_sing - times) ** -0.75
    fit = growth_rate_fit(times, values, t_sing)
    assert fit.slope == pytest.approx(0.75, abs=1e-9)
    assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-9)
    assert fit.residual < 1e-10
    # only the final decade of values enters the window
    assert fit.points == int((values >= values.max() / 10.0).sum())


def test_growth_rate_fit_refuses_thin_windows():
    times = np.linspace(0.0, 0.9, 6)
    values = (1.0 - times) ** -1.0
    assert growth_rate_fit(times, values, 1.0) is None
    assert growth_rate_fit(times, values, None) is None
    assert growth_rate_fit(times, np.full(6, -1.0), 1.0) is None


def test_dichotomy_on_singular_sphere(sphere_l4):
    crit = critical_power(sphere_l4)
    assert crit.kind == "CriticalPower"
    assert crit.fitted_series == "integrand"
    assert crit.divergent is True
    assert 0.85 < crit.fit.slope < 1.15

    sublog = subcritical_log(sphere_l4)
    assert sublog.divergent is True
    assert 0.8 < sublog.fit.slope < 1.05
    # the log weight keeps the integrand strictly below critical
    assert sublog.fit.slope < crit.fit.slope

    sup5 = supercritical(sphere_l4)
    assert sup5.divergent is True
    assert 1.3 < sup5.fit.slope < 1.7

    supa = sup_a_report(sphere_l4)
    assert supa.divergent is True
    assert 0.45 < supa.fit.slope < 0.58

    norm66 = mixed_norm_report(sphere_l4, 6.0, 6.0)
    assert norm66.params["criticality"] == SUPERCRITICAL
    assert norm66.divergent is False
    assert norm66.fit.slope < 0.3


def test_critical_final_matches_closed_form(sphere_l4):
    # cumulative critical integral at the time where R^2 = 1/5
    sol = SphereSolution(2, 1.0)
    report = critical_power(sphere_l4)
    idx = int(np.searchsorted(sphere_l4.times, 0.2))
    assert report.cumulative[idx] == pytest.approx(
        4.0 * math.pi * math.log(5.0), rel=0.05)
    assert report.cumulative[idx] == pytest.approx(
        sol.cumulative_moment(0.2, 4.0), rel=0.05)


def test_mixed_norm_matches_closed_form():
    times = np.linspace(0.0, 0.2, 4001)
    traj = sampled_trajectory(2, 1.0, times)
    sol = SphereSolution(2, 1.0)
    for p, q in ((6.0, 3.0), (4.0, 4.0), (6.0, 6.0)):
        assert mixed_norm(traj, p, q) == pytest.approx(
            sol.mixed_norm(0.2, p, q), rel=2e-3)


def test_mixed_norm_report_layout():
    times = np.linspace(0.0, 0.2, 101)
    traj = sampled_trajectory(2, 1.0, times)
    report = mixed_norm_report(traj, 4.0, 4.0)
    assert report.kind == "MixedNorm"
    assert report.params["criticality"] == CRITICAL
    assert report.fitted_series == "norm"
    assert report.cumulative[0] == 0.0
    assert np.all(np.diff(report.cumulative) >= 0)
    with pytest.raises(ValueError):
        mixed_norm_report(traj, -1.0, 4.0)


def test_subcritical_log_variants():
    times = np.linspace(0.0, 0.2, 201)
    traj = sampled_trajectory(2, 1.0, times)
    log2 = subcritical_log(traj)
    # the exact cumulative from the record is used untouched
    assert log2.cumulative is traj.cumulative["g"]
    log1 = subcritical_log(traj, variant="log1")
    assert log1.cumulative[0] == 0.0
    assert np.all(np.isfinite(log1.cumulative))
    assert np.all(np.diff(log1.cumulative) > 0)
    # log(1+a) < log(2+a) makes the log1 integrand strictly larger
    assert np.all(log1.instantaneous > log2.instantaneous)


def test_unrecorded_moment_falls_back_to_snapshots(sphere_l3_short):
    report = power_report(sphere_l3_short, 7.0)
    assert any("not recorded" in note for note in report.notes)
    finite = np.isfinite(report.instantaneous)
    assert finite.sum() == len(sphere_l3_short.snapshots)
    rows = [snap.row for snap in sphere_l3_short.snapshots]
    assert sorted(np.nonzero(finite)[0].tolist()) == sorted(rows)


def test_report_serialization_round_trip(sphere_l3_short):
    report = sup_a_report(sphere_l3_short)
    payload = report.to_dict()
    assert payload["kind"] == "SupA"
    # cumulative is undefined for the sup series and serializes as nulls
    assert all(v is None for v in payload["cumulative"])
    assert payload["final"] == report.instantaneous[-1]
    assert isinstance(payload["notes"], list)


def test_keybound_ratio_on_sphere(sphere_l4):
    report = keybound_check(sphere_l4, 0.2)
    assert report.exceeded is None
    assert 0.05 < report.max_ratio < 0.12
    # numerator and denominator blow up at the same rate, so past the
    # onset the ratio relaxes monotonically onto its plateau
    assert int(np.argmax(report.ratio)) == 0
    assert np.all(np.diff(report.ratio) < 0)
    assert report.ratio[-1] > 0.5 * report.max_ratio

    assert keybound_check(sphere_l4, 0.2, c_lambda=0.2).exceeded is False
    assert keybound_check(sphere_l4, 0.2, c_lambda=0.05).exceeded is True


def test_keybound_guards(sphere_l3_short):
    with pytest.raises(ValueError):
        keybound_check(sphere_l3_short, 0.0)
    with pytest.raises(TrajectoryTooShort):
        keybound_check(sphere_l3_short, 0.5)
