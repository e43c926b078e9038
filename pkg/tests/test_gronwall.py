"""Log-Gronwall machinery: weight, slow antiderivative, verdicts."""

import math

import numpy as np
import pytest

from mcflow.errors import DomainError, MissingMonitors, TrajectoryTooShort
from mcflow.flow import FlowTrajectory
from mcflow.gronwall import (
    EXTENDABLE,
    SUBCRITICAL_DIVERGES,
    empirical_c,
    extension_verdict,
    h_bound,
    psi,
    psi_tilde,
    psi_tilde_inverse,
)
from mcflow.rescale import rescale_trajectory


def make_traj(times, f, G):
    """Synthetic record carrying exactly the series the bound consumes."""
    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    g_cum = np.concatenate([[0.0], np.cumsum(G[:-1] * dt)])
    return FlowTrajectory(
        n=2,
        times=times,
        dts=np.full(times.size, dt),
        columns={"sup_a": np.asarray(f, dtype=float),
                 "g": np.asarray(G, dtype=float)},
        cumulative={"g": g_cum},
        snapshots=[],
        status="ReachedTEnd",
        stop_reasons=[],
        remesh_events=[],
        config=None,
    )


def test_psi_weight():
    assert psi(1.0) == pytest.approx(math.log(3.0), rel=1e-15)
    assert psi(0.0) == 0.0
    out = psi(np.array([0.0, 1.0, 2.0]))
    assert out[2] == pytest.approx(2.0 * math.log(4.0), rel=1e-15)
    with pytest.raises(ValueError):
        psi(-0.5)


def test_psi_tilde_additivity_and_domain():
    c, m, y = 2.0, 50.0, 1e6
    assert psi_tilde(y, c) == pytest.approx(
        psi_tilde(m, c) + psi_tilde(y, m), abs=1e-9)
    assert psi_tilde(c, c) == 0.0
    with pytest.raises(DomainError):
        psi_tilde(1.0, 2.0)
    with pytest.raises(ValueError):
        psi_tilde(1.0, 0.0)


def test_psi_tilde_grows_without_bound_but_slowly():
    values = [psi_tilde(10.0 ** k, 1.0) for k in (2, 4, 6, 8, 10)]
    increments = np.diff(values)
    assert np.all(increments > 0)
    # increments per two decades shrink, log log style
    assert np.all(np.diff(increments) < 0)
    assert values[-1] - values[0] >= 1.0


def test_psi_tilde_inverse_round_trip():
    for y in (2.0, 10.0, 1e3, 1e6):
        target = psi_tilde(y, 1.5)
        assert psi_tilde_inverse(target, 1.5) == pytest.approx(y, rel=1e-6)
    assert psi_tilde_inverse(0.0, 3.0) == 3.0
    # targets beyond the representable range report an unbounded preimage
    assert psi_tilde_inverse(10.0, 1.0) == math.inf
    with pytest.raises(DomainError):
        psi_tilde_inverse(-1.0, 1.0)


def test_exact_chain_on_constant_data():
    times = np.linspace(0.0, 1.0, 2001)
    ones = np.ones_like(times)
    traj = make_traj(times, ones, ones)
    state = h_bound(traj, c=1.0)
    assert state.c_source == "configured"
    # h(t) = 1 + t log 3 exactly on the left-endpoint grid
    np.testing.assert_allclose(state.h, 1.0 + math.log(3.0) * times,
                               rtol=0, atol=1e-12)
    assert state.comparison_holds
    assert state.comparison_margin == pytest.approx(
        math.log(3.0) * 0.05, abs=1e-9)
    assert state.chain_holds
    # Psi(h) > Psi(f) makes the substitution identity one-sided; the
    # shared window start contributes the exact zero
    assert state.chain_violation == 0.0
    payload = state.to_dict()
    assert payload["c"] == 1.0
    assert len(payload["h"]) == times.size


def test_empirical_constant_is_sharp():
    times = np.linspace(0.0, 1.0, 1001)
    ones = np.ones_like(times)
    traj = make_traj(times, ones, ones)
    c = empirical_c(traj)
    # the ratio f / (1 + integral) is maximal at the start of the window
    idx = int(np.argmax(times >= 0.05 - 1e-15))
    assert c == pytest.approx(1.0 / (1.0 + math.log(3.0) * times[idx]),
                              rel=1e-12)
    state = h_bound(traj)
    assert state.c_source == "empirical"
    assert state.comparison_holds
    assert state.comparison_margin == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        h_bound(traj, c=-1.0)


def test_zero_monitor_keeps_h_flat():
    times = np.linspace(0.0, 1.0, 501)
    traj = make_traj(times, np.ones_like(times), np.zeros_like(times))
    state = h_bound(traj)
    np.testing.assert_allclose(state.h, state.c, rtol=0, atol=0)
    assert state.chain_holds and state.comparison_holds
    verdict = extension_verdict(traj)
    assert verdict["verdict"] == EXTENDABLE
    assert verdict["bound"] == pytest.approx(state.c, rel=1e-12)
    assert verdict["bound"] >= verdict["observed_sup_f"] - 1e-12


def test_larger_monitor_larger_bound():
    times = np.linspace(0.0, 1.0, 501)
    ones = np.ones_like(times)
    small = extension_verdict(make_traj(times, ones, ones), c=1.0)
    large = extension_verdict(make_traj(times, ones, 2.0 * ones), c=1.0)
    assert small["verdict"] == large["verdict"] == EXTENDABLE
    assert small["bound"] < large["bound"]
    assert small["bound"] >= small["observed_sup_f"]


def test_singular_sphere_verdict(sphere_l4):
    verdict = extension_verdict(sphere_l4)
    assert verdict["verdict"] == SUBCRITICAL_DIVERGES
    assert verdict["monitor_divergent"] is True
    assert verdict["bound"] is None
    assert 0.8 < verdict["slope"] < 1.05
    assert verdict["comparison_holds"] is True


def test_early_window_is_extendable(sphere_l3_short):
    verdict = extension_verdict(sphere_l3_short)
    assert verdict["verdict"] == EXTENDABLE
    # no stop-time estimate exists this early, so no divergence flag
    assert not verdict["monitor_divergent"]
    assert math.isfinite(verdict["bound"])
    assert verdict["bound"] >= verdict["observed_sup_f"]


def test_missing_monitor_guards(sphere_l3_short):
    # rescaling voids the log-weighted column off snapshot rows
    scaled = rescale_trajectory(sphere_l3_short, 2.0)
    with pytest.raises(MissingMonitors):
        h_bound(scaled)
    times = np.linspace(0.0, 1.0, 101)
    bare = make_traj(times, np.ones_like(times), np.ones_like(times))
    bare.columns.pop("g")
    with pytest.raises(MissingMonitors):
        h_bound(bare)


def test_window_shorter_than_tau1():
    times = np.linspace(0.0, 0.03, 31)
    traj = make_traj(times, np.ones_like(times), np.ones_like(times))
    with pytest.raises(TrajectoryTooShort):
        empirical_c(traj)
    # h_bound clamps tau1 into the record instead
    state = h_bound(traj)
    assert state.tau1 == pytest.approx(0.03)
    assert state.comparison_holds
