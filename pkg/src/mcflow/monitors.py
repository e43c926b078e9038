"""Blow-up functionals along trajectories and criticality classification.

Functional kinds (for a trajectory of an n-dimensional flow):

    MixedNorm(p, q)    ||A||_{L^{p,q}} = (integral (integral |A|^p dmu)^{q/p} dt)^{1/q}
    SubcriticalLog     cumulative integral of G(s) = integral |A|^(n+2)/log(2+|A|) dmu
    Supercritical      cumulative integral integral |A|^(n+3) dmu ds
    SupA               sup |A| series

The pair (p, q) is critical when n/p + 2/q = 1; smaller is supercritical,
larger subcritical. Natural logarithms throughout; the log(1+|A|) variant
of the subcritical-log integrand is recorded alongside as "g13".

Divergence diagnosis is a growth-rate fit: regress log(series) on
log(1/(T_est - t)) over the final decade of the series and flag the
monitor divergent when the slope exceeds 0.5. Which series is fitted
depends on the monitor kind: cumulative monitors fit their *integrand*
(the time derivative: a cumulative quantity diverges iff its integrand
is at least critical, while log(cumulative) itself grows too slowly for
any raw threshold), whereas mixed-norm monitors fit the norm series
itself, so the flag reads "grows at least at the critical rate". The
fitted slope is always part of the report; on the shrinking sphere the
critical integrand has slope 1, the log-weighted integrand just below 1,
and a supercritical-side (6,6) norm series slope 1/6.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import TrajectoryTooShort
from .flow import moment_key

SLOPE_THRESHOLD = 0.5

# sup|A| at any singular time satisfies the universal lower bound
# sup|A| >= (2(T - t))^(-1/2), so its log-log slope is >= 1/2 with
# equality in the self-similar case; flagging that series against the
# critical threshold itself would be a coin flip, so it gets slack
# comparable to the rate-exponent tolerance.
SUPA_SLOPE_THRESHOLD = 0.45

SUBCRITICAL = "Subcritical"
CRITICAL = "Critical"
SUPERCRITICAL = "Supercritical"


def criticality(n, p, q, tol=1e-12):
    """Classify the pair (p, q): n/p + 2/q versus 1."""
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    value = n / p + 2.0 / q
    if abs(value - 1.0) <= tol:
        return CRITICAL
    return SUPERCRITICAL if value < 1.0 else SUBCRITICAL


@dataclass
class RateFit:
    slope: float
    intercept: float
    t_singular: float
    points: int
    residual: float

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "t_singular": self.t_singular,
            "points": self.points,
            "residual": self.residual,
        }


@dataclass
class MonitorReport:
    kind: str
    params: dict
    times: np.ndarray
    instantaneous: np.ndarray
    cumulative: np.ndarray
    fitted_series: str
    fit: RateFit | None
    divergent: bool | None
    notes: list = field(default_factory=list)

    @property
    def final(self):
        """Last finite cumulative value, or last sample for sup-style
        reports that accumulate nothing."""
        finite = self.cumulative[np.isfinite(self.cumulative)]
        if finite.size:
            return float(finite[-1])
        finite = self.instantaneous[np.isfinite(self.instantaneous)]
        return float(finite[-1]) if finite.size else float("nan")

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": self.params,
            "t": [float(v) for v in self.times],
            "instantaneous": _jsonable(self.instantaneous),
            "cumulative": _jsonable(self.cumulative),
            "fitted_series": self.fitted_series,
            "fit": self.fit.to_dict() if self.fit else None,
            "divergent": self.divergent,
            "final": self.final,
            "notes": list(self.notes),
        }


def _jsonable(values):
    return [float(v) if np.isfinite(v) else None for v in np.asarray(values)]


def growth_rate_fit(times, values, t_singular, min_points=8):
    """Slope of log(values) against log(1/(t_singular - t)), final decade.

    Returns None when the series has no usable window (too few positive
    finite points within a factor 10 of the maximum, or no t_singular).
    """
    if t_singular is None:
        return None
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    good = np.isfinite(values) & (values > 0.0) & (times < t_singular)
    if not good.any():
        return None
    peak = values[good].max()
    window = good & (values >= peak / 10.0)
    if int(window.sum()) < min_points:
        return None
    x = np.log(1.0 / (t_singular - times[window]))
    y = np.log(values[window])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - slope * x - intercept) ** 2)))
    return RateFit(float(slope), float(intercept), float(t_singular),
                   int(window.sum()), resid)


def _singular_time(trajectory):
    if trajectory.estimated_T is not None:
        return trajectory.estimated_T
    if trajectory.status == "SingularityDetected":
        from .flow import estimate_singular_time
        from .errors import InsufficientData

        try:
            return estimate_singular_time(trajectory)[0]
        except InsufficientData:
            return None
    return None


def _left_cumsum(values, dts):
    """Left-endpoint cumulative integral aligned with the record grid."""
    contrib = np.where(np.isfinite(values), values, 0.0) * dts
    out = np.concatenate([[0.0], np.cumsum(contrib[:-1])])
    bad = ~np.isfinite(values)
    if bad.any():
        # poison everything after the first unusable integrand value
        first = int(np.argmax(bad))
        out[first + 1:] = np.nan
    return out


def mixed_norm(trajectory, p, q):
    """Final value of the L^{p,q} norm of |A| over the whole trajectory."""
    report = mixed_norm_report(trajectory, p, q)
    power = report.cumulative[np.isfinite(report.cumulative)]
    return float(power[-1] ** (1.0 / q)) if power.size else float("nan")


def mixed_norm_report(trajectory, p, q):
    """MixedNorm(p, q) report; cumulative holds the q-th power integral.

    The divergence fit runs on the norm series itself (see module
    docstring for the semantics).
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    inst, notes = _moment_series(trajectory, p)
    power = _left_cumsum(inst ** (q / p), trajectory.dts)
    norm_series = power ** (1.0 / q)
    fit = growth_rate_fit(trajectory.times, norm_series,
                          _singular_time(trajectory))
    return MonitorReport(
        kind="MixedNorm",
        params={"p": float(p), "q": float(q),
                "criticality": criticality(trajectory.n, p, q)},
        times=trajectory.times,
        instantaneous=inst,
        cumulative=power,
        fitted_series="norm",
        fit=fit,
        divergent=None if fit is None else bool(fit.slope > SLOPE_THRESHOLD),
        notes=notes,
    )


def power_report(trajectory, p, kind="PowerIntegral"):
    """Cumulative integral of integral |A|^p dmu; integrand-rate diagnosis."""
    inst, notes = _moment_series(trajectory, p)
    key = moment_key(p)
    if key in trajectory.cumulative:
        cumulative = trajectory.cumulative[key]
    else:
        cumulative = _left_cumsum(inst, trajectory.dts)
        notes = notes + ["cumulative rebuilt from the record grid"]
    fit = growth_rate_fit(trajectory.times, inst, _singular_time(trajectory))
    return MonitorReport(
        kind=kind,
        params={"p": float(p)},
        times=trajectory.times,
        instantaneous=inst,
        cumulative=cumulative,
        fitted_series="integrand",
        fit=fit,
        divergent=None if fit is None else bool(fit.slope > SLOPE_THRESHOLD),
        notes=notes,
    )


def critical_power(trajectory):
    """The critical cumulative monitor, integral integral |A|^(n+2)."""
    return power_report(trajectory, trajectory.n + 2, kind="CriticalPower")


def supercritical(trajectory):
    """Prop-1.4-style supercritical monitor, integral integral |A|^(n+3)."""
    return power_report(trajectory, trajectory.n + 3, kind="Supercritical")


def subcritical_log(trajectory, variant="log2"):
    """Cumulative log-weighted monitor: integrand |A|^(n+2)/log(2+|A|).

    variant="log1" selects the log(1+|A|) integrand recorded alongside.
    Rows where the integrand is not recoverable (rescaled trajectories
    away from snapshots) are NaN and the cumulative stops there.
    """
    column = {"log2": "g", "log1": "g13"}[variant]
    inst = trajectory.columns[column]
    notes = []
    if column in trajectory.cumulative and np.isfinite(
        trajectory.cumulative[column]
    ).all():
        cumulative = trajectory.cumulative[column]
    else:
        cumulative = _left_cumsum(inst, trajectory.dts)
        if not np.isfinite(inst).all():
            notes.append("integrand has gaps; cumulative truncated at the "
                         "first gap")
    fit = growth_rate_fit(trajectory.times, inst, _singular_time(trajectory))
    return MonitorReport(
        kind="SubcriticalLog",
        params={"variant": variant},
        times=trajectory.times,
        instantaneous=inst,
        cumulative=cumulative,
        fitted_series="integrand",
        fit=fit,
        divergent=None if fit is None else bool(fit.slope > SLOPE_THRESHOLD),
        notes=notes,
    )


def sup_a_report(trajectory):
    """sup|A| series with its own growth-rate fit (slope 1/2 at blow-up)."""
    inst = trajectory.columns["sup_a"]
    fit = growth_rate_fit(trajectory.times, inst, _singular_time(trajectory))
    return MonitorReport(
        kind="SupA",
        params={},
        times=trajectory.times,
        instantaneous=inst,
        cumulative=np.full(inst.shape, np.nan),
        fitted_series="series",
        fit=fit,
        divergent=None if fit is None
        else bool(fit.slope > SUPA_SLOPE_THRESHOLD),
        notes=["cumulative not defined for SupA"],
    )


@dataclass
class KeyboundReport:
    lam: float
    c_lambda: float | None
    times: np.ndarray
    ratio: np.ndarray
    max_ratio: float
    exceeded: bool | None

    def to_dict(self):
        return {
            "lambda": self.lam,
            "c_lambda": self.c_lambda,
            "t": [float(v) for v in self.times],
            "ratio": [float(v) for v in self.ratio],
            "max_ratio": self.max_ratio,
            "exceeded": self.exceeded,
        }


def keybound_check(trajectory, lam, c_lambda=None):
    """Ratio r(t) = sup|A|(t) / (1 + cumulative integral |A|^(n+3)).

    Evaluated for t >= lam; when c_lambda is given the report flags
    whether max r exceeds it. The ratio's boundedness as t -> T is the
    content of the key a-priori estimate (both sides blow up like
    (T - t)^(-1/2) on shrinking spheres).
    """
    if not (0.0 < lam <= 1.0):
        raise ValueError("lambda must lie in (0, 1]")
    if trajectory.duration < lam:
        raise TrajectoryTooShort(
            f"trajectory covers [0, {trajectory.duration:.4g}], needs t >= {lam}"
        )
    key = moment_key(trajectory.n + 3)
    mask = trajectory.times >= lam - 1e-15
    sup_a = trajectory.columns["sup_a"][mask]
    cum = trajectory.cumulative[key][mask]
    ratio = sup_a / (1.0 + cum)
    max_ratio = float(ratio.max())
    return KeyboundReport(
        lam=float(lam),
        c_lambda=None if c_lambda is None else float(c_lambda),
        times=trajectory.times[mask],
        ratio=ratio,
        max_ratio=max_ratio,
        exceeded=None if c_lambda is None else bool(max_ratio > c_lambda),
    )


def _moment_series(trajectory, p):
    """Instantaneous integral |A|^p dmu series, recomputed if unrecorded."""
    key = moment_key(p)
    if key in trajectory.columns:
        return trajectory.columns[key], []
    from .surface import integrate

    values = np.full(trajectory.times.shape, np.nan)
    for snap in trajectory.snapshots:
        if snap.surface is not None:
            a = np.sqrt(snap.surface.A2)
            values[snap.row] = integrate(snap.surface, a, p)
    return values, [f"moment p={p:g} not recorded; snapshot grid only"]
