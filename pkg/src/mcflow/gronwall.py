"""Extension criterion: the log-Gronwall comparison function and verdict.

The machinery bounds f(t) = sup|A| via the slowly diverging functional
G(t) (the log-weighted curvature integral): with Psi(s) = s log(2+s),

    h(t) = c (1 + integral_0^t Psi(f(s)) G(s) ds),
    PsiTilde(y) = integral_c^y ds / Psi(s),

the comparison f <= h plus PsiTilde's divergence at infinity turn a
finite cumulative G into a finite bound on f, which is the extension
criterion: a flow whose log-weighted monitor stays integrable up to the
stop time has bounded curvature and can be continued.

The constant c absorbs several universal constants and has no formula;
it is configurable everywhere. The default is the empirical analogue of
the key-bound ratio taken with the Gronwall denominator,

    c = max_{t >= tau1} f(t) / (1 + integral_0^t Psi(f) G ds),

the smallest constant for which the comparison f <= h holds on the
recorded samples. (The supercritical-denominator ratio reported by
keybound_check scales differently and is too small for the comparison
on exact shrinking spheres.)
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, MissingMonitors, TrajectoryTooShort
from .monitors import subcritical_log

DEFAULT_TAU1 = 0.05

EXTENDABLE = "Extendable"
SUBCRITICAL_DIVERGES = "SubcriticalDiverges"


def psi(s):
    """Psi(s) = s log(2 + s), the superlinear Gronwall weight."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("psi requires s >= 0")
    out = s * np.log(2.0 + s)
    return float(out) if out.ndim == 0 else out


def psi_tilde(y, c):
    """integral_c^y ds / (s log(2+s)), adaptive quadrature, rel <= 1e-8.

    Evaluated in log space (s = e^u turns the measure ds/s into du and
    log(2+e^u) into logaddexp), which keeps the quadrature well behaved
    over arbitrarily many decades and avoids overflow up to y ~ 1e300.
    """
    if c <= 0.0:
        raise ValueError("the lower limit c must be positive")
    if y < c:
        raise DomainError(f"psi_tilde needs y >= c, got y={y:g} < c={c:g}")
    if y == c:
        return 0.0
    value, _ = quad(lambda u: 1.0 / np.logaddexp(np.log(2.0), u),
                    np.log(c), np.log(y),
                    epsrel=1e-10, epsabs=1e-12, limit=200)
    return float(value)


def psi_tilde_inverse(target, c, hi_cap=1e300):
    """y with psi_tilde(y, c) = target, by bracketed root finding.

    The search runs in u = log y, where the log log growth of the
    integral becomes a tame, nearly linear function; a direct bracket
    in y can span hundreds of decades and starves the root finder.
    Targets beyond psi_tilde(hi_cap, c) have no representable preimage
    and return inf (the bound exists but exceeds floating-point range).
    """
    if target < 0.0:
        raise DomainError("psi_tilde is nonnegative")
    if target == 0.0:
        return float(c)
    u_cap = np.log(hi_cap)
    if psi_tilde(hi_cap, c) < target:
        return float("inf")

    u_lo = np.log(c)

    def g(u):
        return psi_tilde(float(np.exp(u)), c) - target

    width = 1.0
    u_hi = min(u_lo + width, u_cap)
    while g(u_hi) < 0.0:
        width *= 2.0
        u_hi = min(u_lo + width, u_cap)
        if u_hi == u_cap:
            break
    u = brentq(g, u_lo, u_hi, xtol=1e-13, rtol=1e-13, maxiter=200)
    return float(np.exp(u))


@dataclass
class GronwallState:
    """Sampled chain: f, G, h, PsiTilde(h) on the record grid."""

    c: float
    c_source: str
    tau1: float
    times: np.ndarray
    f: np.ndarray
    G: np.ndarray
    h: np.ndarray
    psi_tilde_h: np.ndarray
    comparison_holds: bool
    comparison_margin: float
    chain_holds: bool
    chain_violation: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "c": self.c,
            "c_source": self.c_source,
            "tau1": self.tau1,
            "t": [float(v) for v in self.times],
            "f": [float(v) for v in self.f],
            "G": [float(v) for v in self.G],
            "h": [float(v) for v in self.h],
            "psi_tilde_h": [float(v) for v in self.psi_tilde_h],
            "comparison_holds": self.comparison_holds,
            "comparison_margin": self.comparison_margin,
            "chain_holds": self.chain_holds,
            "chain_violation": self.chain_violation,
            "notes": list(self.notes),
        }


def _series(trajectory):
    for key in ("sup_a", "g"):
        if key not in trajectory.columns:
            raise MissingMonitors(f"trajectory lacks the {key!r} series")
    f = np.asarray(trajectory.columns["sup_a"], dtype=float)
    G = np.asarray(trajectory.columns["g"], dtype=float)
    if not np.isfinite(f).all():
        raise MissingMonitors("sup|A| series has gaps")
    if not np.isfinite(G).all():
        raise MissingMonitors(
            "log-weighted monitor has gaps (rescaled trajectory?); "
            "recompute it on a full record grid first"
        )
    return f, G


def empirical_c(trajectory, tau1=DEFAULT_TAU1):
    """Smallest c with f <= h on the samples with t >= tau1."""
    f, G = _series(trajectory)
    ratio = _comparison_ratio(trajectory.times, trajectory.dts, f, G, tau1)
    return float(ratio.max())


def _comparison_ratio(times, dts, f, G, tau1):
    base = np.concatenate([[0.0], np.cumsum(psi(f[:-1]) * G[:-1] * dts[:-1])])
    mask = times >= tau1 - 1e-15
    if not mask.any():
        raise TrajectoryTooShort(
            f"no samples at or after tau1={tau1:g} "
            f"(duration {float(times[-1]):g})"
        )
    return f[mask] / (1.0 + base[mask])


def h_bound(trajectory, c=None, tau1=DEFAULT_TAU1):
    """Comparison function h and the two Gronwall chain checks.

    h is the left-endpoint quadrature of c Psi(f) G from 0; check (i) is
    f(t) <= h(t) for t >= tau1, check (ii) is the substitution identity
    PsiTilde(h(t)) - PsiTilde(h(tau1)) <= c integral_{tau1}^t G ds, both
    up to quadrature tolerance. c defaults to the empirical constant
    (see module docstring); tau1 is clamped into the recorded span.
    """
    f, G = _series(trajectory)
    times = trajectory.times
    dts = trajectory.dts
    tau1 = float(min(tau1, trajectory.duration))

    if c is None:
        c = empirical_c(trajectory, tau1)
        c_source = "empirical"
    else:
        c = float(c)
        c_source = "configured"
    if c <= 0.0:
        raise ValueError("c must be positive")

    h = c * (
        1.0
        + np.concatenate([[0.0], np.cumsum(psi(f[:-1]) * G[:-1] * dts[:-1])])
    )

    # incremental quadrature keeps the series exactly additive;
    # psi_tilde_h[0] = psi_tilde(h[0], c) = 0 because h(0) = c
    psi_tilde_h = np.zeros_like(h)
    for k in range(1, len(h)):
        psi_tilde_h[k] = psi_tilde_h[k - 1] + psi_tilde(h[k], h[k - 1])

    window = times >= tau1 - 1e-15
    diff = h[window] - f[window]
    margin = float(diff.min()) if diff.size else float("inf")
    holds_i = bool(margin >= -1e-9 * max(1.0, float(np.abs(f).max())))

    idx0 = int(np.argmax(window))
    g_cum = np.concatenate([[0.0], np.cumsum(G[:-1] * dts[:-1])])
    rhs = c * (g_cum[window] - g_cum[idx0])
    lhs = psi_tilde_h[window] - psi_tilde_h[idx0]
    violation = float((lhs - rhs).max()) if diff.size else 0.0
    holds_ii = bool(violation <= 1e-8 * (1.0 + float(np.abs(rhs).max()
                                                     if rhs.size else 0.0)))

    return GronwallState(
        c=c,
        c_source=c_source,
        tau1=tau1,
        times=times,
        f=f,
        G=G,
        h=h,
        psi_tilde_h=psi_tilde_h,
        comparison_holds=holds_i,
        comparison_margin=margin,
        chain_holds=holds_ii,
        chain_violation=violation,
    )


def extension_verdict(trajectory, c=None, tau1=DEFAULT_TAU1):
    """Extendable vs SubcriticalDiverges, with the curvature bound.

    The verdict is SubcriticalDiverges when the log-weighted cumulative
    monitor's growth-rate fit flags divergence (the singular case);
    otherwise Extendable, with sup f bounded by
    PsiTilde^{-1}(PsiTilde(h(tau1)) + c integral_{tau1} G ds).
    """
    report = subcritical_log(trajectory)
    state = h_bound(trajectory, c=c, tau1=tau1)
    diagnostics = {
        "c": state.c,
        "c_source": state.c_source,
        "tau1": state.tau1,
        "slope": None if report.fit is None else report.fit.slope,
        "monitor_divergent": report.divergent,
        "comparison_holds": state.comparison_holds,
        "chain_holds": state.chain_holds,
    }
    if report.divergent:
        diagnostics["verdict"] = SUBCRITICAL_DIVERGES
        diagnostics["bound"] = None
        return diagnostics

    window = trajectory.times >= state.tau1 - 1e-15
    idx0 = int(np.argmax(window))
    g_cum = np.concatenate(
        [[0.0], np.cumsum(state.G[:-1] * trajectory.dts[:-1])]
    )
    budget = state.c * float(g_cum[-1] - g_cum[idx0])
    start = psi_tilde(state.h[idx0], state.c)
    bound = psi_tilde_inverse(start + budget, state.c)
    diagnostics["verdict"] = EXTENDABLE
    diagnostics["bound"] = bound
    diagnostics["observed_sup_f"] = float(state.f[window].max())
    return diagnostics
