"""Parabolic rescaling of recorded trajectories and its invariants.

The rescaling with factor Q > 0 sends a flow F(x, t) to
Q F(x, t / Q^2); on the record table this acts column by column:

    time, dt            x Q^2
    radius              x Q
    sup|A|, |A| q95     x 1/Q
    measure             x Q^n
    integral |A|^p dmu  x Q^(n-p)
    integral |H|^(n+3)  x Q^(-3)

and on the cumulative integrals with one extra factor Q^2 from dt. The
critical mixed power of |H| (cumulative "hpow23") carries total exponent
zero and is invariant. The log-weighted integrand G is *not* a power of
|A| and does not transform algebraically: its columns are reset to NaN
and recomputed exactly on snapshot rows, where the rescaled surface is
available.

Snapshot surfaces are rebuilt from Q-scaled vertex positions, so every
geometric cache (normals, curvature, weights) is recomputed rather than
scaled, which is what makes the invariance report a substantive check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BelowThreshold, TrajectoryRange
from .flow import FlowTrajectory, Snapshot, RemeshEvent, moment_key
from .monitors import mixed_norm


def _moment_exponents(trajectory):
    out = {}
    for key in trajectory.columns:
        if key.startswith("moment:"):
            out[key] = trajectory.n - float(key.split(":", 1)[1])
    return out


def rescale_trajectory(trajectory, Q):
    """Exact parabolic rescaling of a recorded trajectory by factor Q."""
    if not np.isfinite(Q) or Q <= 0.0:
        raise ValueError("Q must be a positive finite number")
    Q = float(Q)
    n = trajectory.n
    scale_cols = {
        "radius": Q,
        "sup_a": 1.0 / Q,
        "a_q95": 1.0 / Q,
        "measure": Q ** n,
        "h_moment": Q ** (-3.0),
    }
    scale_cols.update(
        {k: Q ** e for k, e in _moment_exponents(trajectory).items()}
    )

    columns = {}
    for key, series in trajectory.columns.items():
        if key in ("g", "g13"):
            columns[key] = np.full(series.shape, np.nan)
        else:
            columns[key] = series * scale_cols[key]

    cumulative = {}
    for key, series in trajectory.cumulative.items():
        if key in ("g", "g13"):
            cumulative[key] = np.full(series.shape, np.nan)
        elif key == "hpow23":
            cumulative[key] = series.copy()
        else:
            cumulative[key] = series * (scale_cols[key] * Q ** 2)

    snapshots = []
    for snap in trajectory.snapshots:
        surface = snap.surface
        if surface is not None:
            surface = surface.with_positions(surface.positions * Q)
        snapshots.append(Snapshot(snap.row, snap.time * Q ** 2, surface))

    # the log-weighted integrand is recomputed exactly where geometry exists
    for snap in snapshots:
        if snap.surface is None:
            continue
        a = np.sqrt(snap.surface.A2)
        w = snap.surface.w
        columns["g"][snap.row] = float((a ** (n + 2) / np.log(2.0 + a)) @ w)
        columns["g13"][snap.row] = float(
            (a ** (n + 2) / np.log1p(1.0 + a)) @ w
        )

    def scale_inst(values):
        return {
            k: (np.nan if k in ("g", "g13") else v * scale_cols[k])
            for k, v in values.items()
        }

    events = [
        RemeshEvent(
            ev.row,
            ev.time * Q ** 2,
            ev.vertices_before,
            ev.vertices_after,
            scale_inst(ev.moments_before),
            scale_inst(ev.moments_after),
        )
        for ev in trajectory.remesh_events
    ]

    provenance = dict(trajectory.provenance)
    provenance["rescaled_by"] = provenance.get("rescaled_by", 1.0) * Q
    return FlowTrajectory(
        n=n,
        times=trajectory.times * Q ** 2,
        dts=trajectory.dts * Q ** 2,
        columns=columns,
        cumulative=cumulative,
        snapshots=snapshots,
        status=trajectory.status,
        stop_reasons=list(trajectory.stop_reasons),
        remesh_events=events,
        config=trajectory.config,
        estimated_T=None if trajectory.estimated_T is None
        else trajectory.estimated_T * Q ** 2,
        rate_exponent=trajectory.rate_exponent,
        fit_residual=trajectory.fit_residual,
        provenance=provenance,
    )


def normalizing_factor(trajectory, c0):
    """Q that makes the cumulative supercritical integral equal c0.

    The integral scales like Q^(-1), so Q = total / c0, which requires
    total >= c0 (Q >= 1); otherwise BelowThreshold is raised.
    """
    if c0 <= 0.0:
        raise ValueError("c0 must be positive")
    key = moment_key(trajectory.n + 3)
    total = float(trajectory.cumulative[key][-1])
    if not np.isfinite(total) or total < c0:
        raise BelowThreshold(
            f"supercritical integral {total:.6g} is below c0={c0:.6g}"
        )
    return total / c0


def unit_time_factor(trajectory, t_target=1.0):
    """Q that rescales the recorded duration onto [0, t_target]."""
    if trajectory.duration <= 0.0:
        raise TrajectoryRange("trajectory has zero duration")
    return float(np.sqrt(t_target / trajectory.duration))


@dataclass(frozen=True)
class RescaleSpec:
    """How to choose Q: explicit factor, unit supercritical mass c0,
    or unit final time."""

    mode: str = "explicit"  # explicit | normalizing | unit-time
    factor: float = 1.0
    c0: float = 1.0
    t_target: float = 1.0

    def resolve(self, trajectory):
        if self.mode == "explicit":
            return float(self.factor)
        if self.mode == "normalizing":
            return normalizing_factor(trajectory, self.c0)
        if self.mode == "unit-time":
            return unit_time_factor(trajectory, self.t_target)
        raise ValueError(f"unknown rescale mode {self.mode!r}")


def invariance_report(trajectory, Q, rtol=1e-10):
    """Check the scaling laws of a rescaled trajectory, recomputing from
    geometry where possible.

    Items, each with measured/expected and a pass flag at rtol:
      sup_ratio            snapshot-recomputed sup|A| against 1/Q
      supercritical_ratio  cumulative integral against Q^(-1)
      critical_mixed       L^{n+2,n+2} norm ratio against 1 (invariant)
      hpow23_ratio         critical |H| mixed power against 1
      log_monitor          rescaled G on snapshots, ratio series reported,
                           flagged "not scale-invariant" (expected)
    """
    rescaled = rescale_trajectory(trajectory, Q)
    items = {}

    ratios = []
    for orig, snew in zip(trajectory.snapshots, rescaled.snapshots):
        if orig.surface is None or snew.surface is None:
            continue
        a_old = float(np.sqrt(orig.surface.A2).max())
        a_new = float(np.sqrt(snew.surface.A2).max())
        if a_old > 0.0:
            ratios.append(a_new / a_old)
    ratios = np.asarray(ratios)
    expected = 1.0 / Q
    items["sup_ratio"] = _item(
        float(np.max(np.abs(ratios - expected))) if ratios.size else np.nan,
        0.0, atol=rtol * expected, measured_is_error=True,
    )

    key = moment_key(trajectory.n + 3)
    total_old = float(trajectory.cumulative[key][-1])
    total_new = float(rescaled.cumulative[key][-1])
    items["supercritical_ratio"] = _item(total_new / total_old, Q ** (-1.0),
                                         atol=rtol / Q)

    p = q = trajectory.n + 2
    items["critical_mixed"] = _item(
        mixed_norm(rescaled, p, q) / mixed_norm(trajectory, p, q), 1.0,
        atol=rtol,
    )

    h_old = float(trajectory.cumulative["hpow23"][-1])
    h_new = float(rescaled.cumulative["hpow23"][-1])
    items["hpow23_ratio"] = _item(h_new / h_old, 1.0, atol=rtol)

    g_ratios = []
    for snap in rescaled.snapshots:
        row = snap.row
        g_old = trajectory.columns["g"][row]
        g_new = rescaled.columns["g"][row]
        if np.isfinite(g_old) and np.isfinite(g_new) and g_old > 0.0:
            g_ratios.append(float(g_new / g_old))
    items["log_monitor"] = {
        "ratios": g_ratios,
        "scale_invariant": False,
        "note": "log-weighted integrand transforms non-algebraically",
    }

    items["passed"] = all(
        items[k]["ok"] for k in
        ("sup_ratio", "supercritical_ratio", "critical_mixed", "hpow23_ratio")
    )
    items["Q"] = float(Q)
    return items


def _item(measured, expected, atol, measured_is_error=False):
    if measured_is_error:
        ok = np.isfinite(measured) and measured <= atol
    else:
        ok = np.isfinite(measured) and abs(measured - expected) <= atol
    return {"measured": float(measured), "expected": float(expected),
            "ok": bool(ok)}


def prop41_check(trajectory, c0):
    """Normalize supercritical mass to c0 and test sup|A| <= 1 on the
    rescaled window [1/2, 1].

    Returns a dict with the factor, the window supremum and the verdict;
    raises BelowThreshold when the trajectory's mass is below c0 and
    TrajectoryRange when the rescaled record does not reach t=1.
    """
    Q = normalizing_factor(trajectory, c0)
    rescaled = rescale_trajectory(trajectory, Q)
    times = rescaled.times
    if times[-1] < 1.0 - 1e-12:
        raise TrajectoryRange(
            f"rescaled trajectory spans [0, {times[-1]:.4g}], needs [1/2, 1]"
        )
    window = (times >= 0.5 - 1e-12) & (times <= 1.0 + 1e-12)
    sup_window = float(rescaled.columns["sup_a"][window].max())
    return {
        "c0": float(c0),
        "Q": float(Q),
        "sup_window": sup_window,
        "holds": bool(sup_window <= 1.0),
    }


def bracket_c0(trajectories, grid):
    """Largest grid value of c0 for which the normalized window bound
    holds on every applicable trajectory.

    Trajectories whose mass is below c0 or whose rescaled record stops
    short of t=1 are out of scope for that c0 and skipped. Returns the
    bracket and the per-c0 detail table.
    """
    table = []
    best = None
    for c0 in sorted(float(c) for c in grid):
        verdicts = []
        for traj in trajectories:
            try:
                verdicts.append(prop41_check(traj, c0))
            except (BelowThreshold, TrajectoryRange):
                continue
        holds = bool(verdicts) and all(v["holds"] for v in verdicts)
        table.append({"c0": c0, "applicable": len(verdicts), "holds": holds})
        if holds:
            best = c0
    return {"largest_c0": best, "table": table}


__all__ = [
    "RescaleSpec",
    "rescale_trajectory",
    "normalizing_factor",
    "unit_time_factor",
    "invariance_report",
    "prop41_check",
    "bracket_c0",
]
