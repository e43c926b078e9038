"""Closed-form shrinking sphere/circle solutions: the ground truth.

A round sphere of initial radius R0 in R^(n+1) evolves as
R(t) = sqrt(R0^2 - 2nt) and vanishes at T = R0^2/(2n). Every monitored
functional has a closed form on it (the log-weighted cumulative integral
needs one adaptive quadrature), so simulated trajectories can be scored
against exact values.

Functional spec strings accepted by sphere_functional:

    radius | measure | sup-a | h          instantaneous scalars
    moment:<p>                            integral |A|^p dmu at time t
    cumulative:<p>                        time integral of moment:<p>
    critical                              cumulative:<n+2>
    supercritical                         cumulative:<n+3>
    subcritical-log                       G(t) = integral |A|^(n+2)/log(2+|A|)
    subcritical-log-cumulative            integral of G by quadrature
    mixed:<p>:<q>                         L^{p,q} norm of |A| on [0, t]
    h-moment                              integral |H|^(n+3) dmu
    h-mixed-23                            integral (h-moment)^(2/3) dt
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from .errors import OutOfRange, ShapeMismatch


def sphere_area_constant(n):
    """Measure of the unit n-sphere: 2 pi for n=1, 4 pi for n=2."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


@dataclass(frozen=True)
class SphereSolution:
    """Exact shrinking sphere: R(t) = sqrt(R0^2 - 2nt), gone at T."""

    n: int
    r0: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.r0 <= 0:
            raise ValueError("need n >= 1 and r0 > 0")

    @property
    def T(self):
        return self.r0 ** 2 / (2.0 * self.n)

    def _check(self, t, closed=False):
        hi = self.T + 1e-15 if closed else self.T
        if not (0.0 <= t < hi):
            raise OutOfRange(f"t={t} outside [0, T={self.T})")

    def radius(self, t):
        self._check(t)
        return math.sqrt(self.r0 ** 2 - 2.0 * self.n * t)

    def mean_curvature(self, t):
        return self.n / self.radius(t)

    def abs_a(self, t):
        return math.sqrt(self.n) / self.radius(t)

    def measure(self, t):
        return sphere_area_constant(self.n) * self.radius(t) ** self.n

    def moment(self, t, p):
        """integral |A|^p dmu = n^(p/2) omega_n R^(n-p)."""
        self._check(t)
        return (self.n ** (p / 2.0) * sphere_area_constant(self.n)
                * self.radius(t) ** (self.n - p))

    def h_moment(self, t, p=None):
        """integral |H|^p dmu, default p = n+3."""
        if p is None:
            p = self.n + 3
        self._check(t)
        return (float(self.n) ** p * sphere_area_constant(self.n)
                * self.radius(t) ** (self.n - p))

    def cumulative_moment(self, t, p):
        """integral_0^t integral |A|^p dmu ds, closed form.

        Critical exponent p = n+2 gives the logarithm; otherwise a power
        difference. Diverges as t -> T exactly when p >= n+2.
        """
        self._check(t, closed=True)
        n, r0 = self.n, self.r0
        rt = math.sqrt(max(r0 ** 2 - 2.0 * n * t, 0.0))
        coeff = n ** (p / 2.0) * sphere_area_constant(n)
        if abs(p - (n + 2)) < 1e-12:
            if rt == 0.0:
                return math.inf
            return coeff / (2.0 * n) * math.log(r0 ** 2 / rt ** 2)
        expo = n - p + 2.0
        if rt == 0.0 and expo < 0:
            return math.inf
        return coeff * (r0 ** expo - rt ** expo) / (n * expo)

    def mixed_norm_power(self, t, p, q):
        """integral_0^t (integral |A|^p dmu)^(q/p) ds."""
        self._check(t, closed=True)
        n, r0 = self.n, self.r0
        rt = math.sqrt(max(r0 ** 2 - 2.0 * n * t, 0.0))
        coeff = (n ** (q / 2.0)
                 * sphere_area_constant(n) ** (q / p))
        m = (n - p) * q / p
        if abs(m + 2.0) < 1e-12:  # exactly the critical pairs
            if rt == 0.0:
                return math.inf
            return coeff / (2.0 * n) * math.log(r0 ** 2 / rt ** 2)
        if rt == 0.0 and m + 2.0 < 0:
            return math.inf
        return coeff * (r0 ** (m + 2.0) - rt ** (m + 2.0)) / (n * (m + 2.0))

    def mixed_norm(self, t, p, q):
        return self.mixed_norm_power(t, p, q) ** (1.0 / q)

    def g_instantaneous(self, t):
        """G(t) = integral |A|^(n+2)/log(2+|A|) dmu, closed form."""
        self._check(t)
        n = self.n
        r = self.radius(t)
        return (n ** ((n + 2) / 2.0) * sphere_area_constant(n)
                / (r ** 2 * math.log(2.0 + math.sqrt(n) / r)))

    def g_cumulative(self, t, rtol=1e-10):
        """integral_0^t G(s) ds by adaptive quadrature (no elementary form)."""
        self._check(t, closed=True)
        if t == 0.0:
            return 0.0
        value, err = quad(self.g_instantaneous, 0.0, min(t, self.T * (1 - 1e-15)),
                          epsabs=1e-12, epsrel=rtol, limit=200)
        return value

    def h_mixed23(self, t):
        """integral_0^t (integral |H|^(n+3) dmu)^(2/3) ds, closed form.

        This is the critical mixed power of |H| entering the constant C1;
        it carries the same logarithm as the critical |A| integral.
        """
        self._check(t, closed=True)
        n, r0 = self.n, self.r0
        rt = math.sqrt(max(r0 ** 2 - 2.0 * n * t, 0.0))
        if rt == 0.0:
            return math.inf
        coeff = (float(n) ** (2.0 * (n + 3) / 3.0)
                 * sphere_area_constant(n) ** (2.0 / 3.0))
        return coeff / (2.0 * n) * math.log(r0 ** 2 / rt ** 2)


def sphere_functional(n, r0, t, spec):
    """Evaluate one named functional of the exact solution at time t."""
    sol = SphereSolution(n, r0)
    name = str(spec).strip().lower()
    if name == "radius":
        return sol.radius(t)
    if name in ("sup-a", "sup_a"):
        return sol.abs_a(t)
    if name == "h":
        return sol.mean_curvature(t)
    if name == "measure":
        return sol.measure(t)
    if name == "critical":
        return sol.cumulative_moment(t, n + 2)
    if name == "supercritical":
        return sol.cumulative_moment(t, n + 3)
    if name == "subcritical-log":
        return sol.g_instantaneous(t)
    if name == "subcritical-log-cumulative":
        return sol.g_cumulative(t)
    if name in ("h-moment", "h_moment"):
        return sol.h_moment(t)
    if name == "h-mixed-23":
        return sol.h_mixed23(t)
    parts = name.split(":")
    if parts[0] == "moment" and len(parts) == 2:
        return sol.moment(t, float(parts[1]))
    if parts[0] == "cumulative" and len(parts) == 2:
        return sol.cumulative_moment(t, float(parts[1]))
    if parts[0] == "mixed" and len(parts) == 3:
        return sol.mixed_norm(t, float(parts[1]), float(parts[2]))
    raise ValueError(f"unknown functional spec {spec!r}")


def sampled_trajectory(n, r0, times, surface=None):
    """Exact-solution record table shaped like a simulated trajectory.

    Useful for testing post-processing without running a flow. Cumulative
    columns are filled from the closed forms (quadrature for the
    log-weighted one), so they are exact rather than left-endpoint sums.
    The optional surface becomes the single snapshot at times[0].
    """
    from .flow import FlowConfig, FlowTrajectory, Snapshot, moment_key

    sol = SphereSolution(n, r0)
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0 or times[-1] >= sol.T:
        raise OutOfRange("times must lie in [0, T)")
    config = FlowConfig(t_end=float(times[-1]))
    p_list = config.p_list(n)

    columns = {
        "radius": np.array([sol.radius(t) for t in times]),
        "sup_a": np.array([sol.abs_a(t) for t in times]),
        "a_q95": np.array([sol.abs_a(t) for t in times]),
        "measure": np.array([sol.measure(t) for t in times]),
        "g": np.array([sol.g_instantaneous(t) for t in times]),
        "g13": np.array([
            sol.moment(t, n + 2) / math.log1p(sol.abs_a(t)) for t in times
        ]),
        "h_moment": np.array([sol.h_moment(t) for t in times]),
    }
    cumulative = {
        "g": np.array([sol.g_cumulative(t) for t in times]),
        "g13": np.full(times.shape, np.nan),
        "h_moment": np.array([_h_cumulative(sol, t) for t in times]),
        "hpow23": np.array([sol.h_mixed23(t) for t in times]),
    }
    for p in p_list:
        columns[moment_key(p)] = np.array([sol.moment(t, p) for t in times])
        cumulative[moment_key(p)] = np.array(
            [sol.cumulative_moment(t, p) for t in times]
        )

    dts = np.diff(times, append=times[-1])
    snapshots = [Snapshot(0, float(times[0]), surface)] if surface is not None else []
    return FlowTrajectory(
        n=n,
        times=times,
        dts=dts,
        columns=columns,
        cumulative=cumulative,
        snapshots=snapshots,
        status="ReachedTEnd",
        stop_reasons=[],
        remesh_events=[],
        config=config,
        provenance={"source": "closed-form sphere solution", "r0": r0},
    )


def _h_cumulative(sol, t):
    """integral_0^t integral |H|^(n+3) dmu ds (closed form, like moments)."""
    n, r0 = sol.n, sol.r0
    rt = math.sqrt(max(r0 ** 2 - 2.0 * n * t, 0.0))
    p = n + 3.0
    coeff = float(n) ** p * sphere_area_constant(n)
    expo = n - p + 2.0
    if rt == 0.0:
        return math.inf
    return coeff * (r0 ** expo - rt ** expo) / (n * expo)


def compare(trajectory, solution, horizon_fraction=0.8):
    """Per-time relative errors of a trajectory against the exact solution.

    Scores radius, sup|A|, measure, and every cumulative functional over
    t in [0, horizon_fraction * T]; reports max and median relative error
    per quantity. The initial snapshot must be a discretized sphere of
    radius r0: every vertex within 1% of r0 from the vertex centroid.
    """
    if trajectory.n != solution.n:
        raise ShapeMismatch(
            f"trajectory has n={trajectory.n}, oracle n={solution.n}"
        )
    if trajectory.snapshots and trajectory.snapshots[0].surface is not None:
        first = trajectory.snapshots[0].surface
        centroid = first.positions.mean(axis=0)
        radii = np.linalg.norm(first.positions - centroid, axis=1)
        if np.abs(radii - solution.r0).max() > 0.01 * solution.r0:
            raise ShapeMismatch(
                "initial surface is not a sphere of the oracle radius "
                f"(worst vertex off by {np.abs(radii - solution.r0).max():.3g})"
            )

    horizon = horizon_fraction * solution.T
    mask = trajectory.times <= horizon + 1e-15
    if not mask.any():
        raise ShapeMismatch("no records inside the comparison horizon")
    times = trajectory.times[mask]

    report = {"horizon": float(horizon), "samples": int(mask.sum()), "series": {}}

    def score(name, measured, exact):
        exact = np.asarray(exact)
        measured = np.asarray(measured)
        keep = np.isfinite(measured) & np.isfinite(exact)
        scale = np.maximum(np.abs(exact), 1e-300)
        rel = np.abs(measured - exact)[keep] / scale[keep]
        if rel.size:
            report["series"][name] = {
                "max_rel": float(rel.max()),
                "median_rel": float(np.median(rel)),
            }

    score("radius", trajectory.columns["radius"][mask],
          [solution.radius(t) for t in times])
    score("sup_a", trajectory.columns["sup_a"][mask],
          [solution.abs_a(t) for t in times])
    score("measure", trajectory.columns["measure"][mask],
          [solution.measure(t) for t in times])
    from .flow import moment_key

    for p in trajectory.p_list():
        key = moment_key(p)
        if key in trajectory.cumulative:
            score("cumulative " + key, trajectory.cumulative[key][mask],
                  [solution.cumulative_moment(t, p) for t in times])
    if "g" in trajectory.cumulative:
        score("cumulative g", trajectory.cumulative["g"][mask],
              [solution.g_cumulative(t, rtol=1e-8) for t in times])
    if "hpow23" in trajectory.cumulative:
        score("cumulative hpow23", trajectory.cumulative["hpow23"][mask],
              [solution.h_mixed23(t) for t in times])

    worst = max((s["max_rel"] for s in report["series"].values()), default=0.0)
    report["max_rel_overall"] = float(worst)
    return report
