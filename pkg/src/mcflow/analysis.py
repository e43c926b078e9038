"""Functional-inequality checks: Sobolev chain, iteration constants,
spacetime Harnack bound.

Everything here is a measurement, not a proof: the inequalities assert
the existence of dimensional constants, and the checks either verify a
given constant (gap >= 0) or report the smallest constant that makes a
battery of random trials pass. The geometric constant c_n is therefore
always an input with default 1.

Conventions shared by the checks:

  * |grad f| is the per-face gradient magnitude, integrated with face
    areas (lowest-order quadrature, matching the mass convention).
  * Mixed norms of |H| enter through the critical power
    integral (integral |H|^(n+3) dmu)^(2/3) dt, recorded as "hpow23".
  * Interpolation norms are taken w.r.t. the normalized measure
    dmu / mu(M); the unnormalized version fails on large surfaces.
  * Suprema over spacetime regions are maxima over vertex samples at
    snapshot times, which under-resolves the true supremum; reports
    carry that caveat.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyRegion,
    ExponentOrder,
    SubcriticalExponent,
    TrajectoryRange,
    UnsupportedDimension,
    ZeroDenominator,
)
from .flow import moment_key
from .monitors import power_report
from .surface import dirichlet_energy, gradient_l1, integrate, lp_norm


# --------------------------------------------------------------------------
# exponent bookkeeping


@dataclass(frozen=True)
class SobolevExponents:
    """The exponent family of the curvature Sobolev lemma.

    For n > 2 everything is forced: Q = n/(n-2),
    m = (n-1)(n+3)/((n-2)(n+2)), and the interpolation exponent
    alpha = Q(m-1)/(Q-m) = n(2n+1)/(3(n-2)). For n = 2 the lemma holds
    for every finite Q, so Q is configured (default 10) and m keeps the
    limiting ratio m/Q -> (n-1)(n+3)/(n(n+2)) = 5/8 as n -> 2, which
    preserves the Hoelder bookkeeping; alpha then follows from the same
    interpolation identity.
    """

    n: int
    q_sob: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise UnsupportedDimension("Sobolev exponents need n >= 2")
        if self.n == 2 and self.q_sob is not None and self.q_sob <= 1.0:
            raise ValueError("q_sob must exceed 1")

    @property
    def Q(self):
        if self.n > 2:
            return self.n / (self.n - 2)
        return 10.0 if self.q_sob is None else float(self.q_sob)

    @property
    def m(self):
        n = self.n
        if n > 2:
            return (n - 1) * (n + 3) / ((n - 2) * (n + 2))
        return (n - 1) * (n + 3) / (n * (n + 2)) * self.Q

    @property
    def alpha(self):
        Q, m = self.Q, self.m
        return Q * (m - 1.0) / (Q - m)

    @property
    def beta_par(self):
        return 2.0 * (self.n + 2) / self.n

    def validate(self):
        assert 1.0 < self.m < self.Q
        assert self.beta_par > 2.0
        if self.n > 2:
            n = self.n
            expected = n * (2 * n + 1) / (3.0 * (n - 2))
            assert abs(self.alpha - expected) <= 1e-12 * expected
        return True


@dataclass(frozen=True)
class MoserConstants:
    """Closed-form constants of the iteration scheme.

    nu = (n+2)/(2q-(n+2)) requires q > (n+2)/2; the remaining fields
    follow the fixed recipe

        C_a = (2 c_n C0 C1)^(1+nu)
        C_z = 4^2 100^(1+nu) c_n C_a
        C_b(beta) = (4 lam^(1+nu) C_z beta^(1+nu))^(n^2/beta),
                    lam = (n+2)/n, beta >= 2.
    """

    n: int
    q: float
    c_n: float
    C0: float
    C1: float

    def __post_init__(self):
        if self.q <= (self.n + 2) / 2.0:
            raise SubcriticalExponent(
                f"q={self.q:g} must exceed (n+2)/2 = {(self.n + 2) / 2:g}"
            )

    @property
    def nu(self):
        return (self.n + 2) / (2.0 * self.q - (self.n + 2))

    @property
    def lam(self):
        return (self.n + 2) / self.n

    @property
    def C_a(self):
        return (2.0 * self.c_n * self.C0 * self.C1) ** (1.0 + self.nu)

    @property
    def C_z(self):
        return 16.0 * 100.0 ** (1.0 + self.nu) * self.c_n * self.C_a

    def Lam(self, beta):
        return 100.0 * beta

    def C_b(self, beta):
        if beta < 2.0:
            raise ValueError("C_b is defined only for beta >= 2")
        base = 4.0 * self.lam ** (1.0 + self.nu) * self.C_z \
            * beta ** (1.0 + self.nu)
        return base ** (self.n ** 2 / beta)

    def to_dict(self, beta=None):
        out = {
            "n": self.n, "q": self.q, "c_n": self.c_n,
            "C0": self.C0, "C1": self.C1,
            "nu": self.nu, "lambda": self.lam,
            "C_a": self.C_a, "C_z": self.C_z,
        }
        if beta is not None:
            out["beta"] = float(beta)
            out["Lambda"] = self.Lam(beta)
            out["C_b"] = self.C_b(beta)
        return out


def moser_constants(n, q, C0, C1, c_n=1.0):
    """Bundle the closed-form iteration constants for given norms."""
    return MoserConstants(n=n, q=float(q), c_n=float(c_n),
                          C0=float(C0), C1=float(C1))


# --------------------------------------------------------------------------
# pointwise-in-time inequalities


def michael_simon_ratio(surface, field):
    """(integral f^(n/(n-1)))^((n-1)/n) over integral(|grad f| + |H| f).

    The ratio is dilation-invariant; the inequality asserts it is
    bounded by a dimensional constant (of order one for smooth fields).
    """
    if surface.n < 2:
        raise UnsupportedDimension("the inequality needs n >= 2")
    f = np.asarray(field, dtype=float)
    if f.min() < -1e-12 * max(1.0, abs(f).max()):
        raise ValueError("field must be nonnegative")
    f = np.maximum(f, 0.0)
    if not f.any():
        raise ValueError("field must not vanish identically")
    n = surface.n
    lhs = integrate(surface, f, n / (n - 1.0)) ** ((n - 1.0) / n)
    rhs = gradient_l1(surface, f) + float(
        (np.abs(surface.H) * f) @ surface.w
    )
    if rhs == 0.0:
        raise ZeroDenominator("gradient and mean curvature both vanish")
    return float(lhs / rhs)


def lemma21_gap(surface, field, c_n=1.0, q_sob=None):
    """c_n(||grad v||_2^2 + ||H||_{n+3}^{2(n+3)/3} ||v||_2^2) - ||v||_{2Q}^2.

    Nonnegative gap means the curvature Sobolev inequality holds at
    constant c_n for this field. Q comes from SobolevExponents.
    """
    if surface.n < 2:
        raise UnsupportedDimension("the lemma needs n >= 2")
    exps = SobolevExponents(surface.n, q_sob)
    v = np.asarray(field, dtype=float)
    grad2 = dirichlet_energy(surface, v)
    h_pow = integrate(surface, np.abs(surface.H), surface.n + 3) ** (2.0 / 3.0)
    l2sq = integrate(surface, v, 2.0)
    lhs = lp_norm(surface, v, 2.0 * exps.Q) ** 2
    return float(c_n * (grad2 + h_pow * l2sq) - lhs)


def interpolation_gap(surface, field, eps, r, s, t):
    """eps ||v||_s + eps^(-mu) ||v||_t - ||v||_r with normalized measure.

    mu = (1/t - 1/r)/(1/r - 1/s); requires t < r < s and eps > 0. The
    gap is nonnegative for every eps by log-convexity of L^p norms plus
    the weighted Young inequality.
    """
    if not (t < r < s):
        raise ExponentOrder(f"need t < r < s, got t={t:g} r={r:g} s={s:g}")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    mu = (1.0 / t - 1.0 / r) / (1.0 / r - 1.0 / s)
    v = np.asarray(field, dtype=float)
    total = surface.total_measure

    def norm(p):
        return (integrate(surface, v, p) / total) ** (1.0 / p)

    return float(eps * norm(s) + eps ** (-mu) * norm(t) - norm(r))


# --------------------------------------------------------------------------
# spacetime inequalities


def _snapshot_steps(snapshots, t_hi=None):
    """(snapshot, dt) pairs with left-endpoint spacing, capped at t_hi."""
    out = []
    usable = [s for s in snapshots if s.surface is not None]
    for k, here in enumerate(usable):
        if k + 1 < len(usable):
            t_next = usable[k + 1].time
        else:
            t_next = here.time if t_hi is None else t_hi
        if t_hi is not None:
            t_next = min(t_next, t_hi)
        out.append((here, max(0.0, t_next - here.time)))
    return out


def parabolic_sobolev_gap(trajectory, field_per_time, c_n=1.0):
    """Spacetime Sobolev gap for v(t) sampled on snapshots.

    LHS = integral integral v^beta, beta = 2(n+2)/n; RHS couples the
    Dirichlet energy with the critical |H| mixed power and two factors
    of max_t ||v||_2. Gap = c_n RHS - LHS, PASS iff >= 0.
    """
    n = trajectory.n
    if n < 2:
        raise UnsupportedDimension("the inequality needs n >= 2")
    beta = 2.0 * (n + 2) / n
    lhs = 0.0
    grad_total = 0.0
    max_l2sq = 0.0
    for snap, dt in _snapshot_steps(trajectory.snapshots):
        v = np.asarray(field_per_time(snap.surface, snap.time), dtype=float)
        lhs += integrate(snap.surface, v, beta) * dt
        grad_total += dirichlet_energy(snap.surface, v) * dt
        max_l2sq = max(max_l2sq, integrate(snap.surface, v, 2.0))
    hpow23 = float(trajectory.cumulative["hpow23"][-1])
    rhs = max_l2sq ** (2.0 / n) * (grad_total + max_l2sq * hpow23)
    return float(c_n * rhs - lhs)


def c1_from_c0_bound(trajectory):
    """Check C1 <= (1 + C0^(n+3))^(n/(n+2)) with f = 2|A|², q = (n+3)/2.

    Both sides come from recorded cumulative integrals: C0 from the
    supercritical power of |A|, C1 from the critical mixed power of |H|.
    The bound encodes |H| <= sqrt(n) |A| plus Hoelder in time, so it
    needs the trajectory no longer than unit time; the report carries
    the measured values either way.
    """
    n = trajectory.n
    q = (n + 3) / 2.0
    mass = float(trajectory.cumulative[moment_key(n + 3)][-1])
    C0 = 2.0 * mass ** (1.0 / q)
    hpow23 = float(trajectory.cumulative["hpow23"][-1])
    C1 = (1.0 + hpow23) ** (n / (n + 2.0))
    bound = (1.0 + C0 ** (n + 3)) ** (n / (n + 2.0))
    return {
        "C0": C0,
        "C1": C1,
        "bound": bound,
        "duration": trajectory.duration,
        "pass": bool(C1 <= bound * (1.0 + 1e-12)),
    }


@dataclass
class SpacetimeRegion:
    """Vertex-time samples of a trajectory inside a ball over a window."""

    center: np.ndarray
    radius: float
    t_lo: float
    t_hi: float
    slices: list = field(default_factory=list)  # (snapshot, dt, vertex_ids)

    @property
    def is_empty(self):
        return not any(ids.size for _, _, ids in self.slices)

    def pairs(self):
        out = set()
        for snap, _, ids in self.slices:
            out.update((snap.row, int(i)) for i in ids)
        return out

    def sup(self, values_fn):
        best = -np.inf
        for snap, _, ids in self.slices:
            if ids.size:
                best = max(best, float(values_fn(snap.surface)[ids].max()))
        return best

    def lp_norm(self, values_fn, p):
        total = 0.0
        for snap, dt, ids in self.slices:
            if ids.size and dt > 0.0:
                v = np.abs(values_fn(snap.surface)[ids]) ** p
                total += float(v @ snap.surface.w[ids]) * dt
        return total ** (1.0 / p)


def extract_region(trajectory, center, radius, t_lo, t_hi):
    """Collect per-snapshot vertex samples inside B(center, radius) for
    snapshot times within [t_lo, t_hi]."""
    center = np.asarray(center, dtype=float)
    slices = []
    window = [
        s for s in trajectory.snapshots
        if s.surface is not None and t_lo - 1e-12 <= s.time <= t_hi + 1e-12
    ]
    for snap, dt in _snapshot_steps(window, t_hi=t_hi):
        if center.shape != (snap.surface.positions.shape[1],):
            raise ValueError("center dimension does not match the surface")
        dist = np.linalg.norm(snap.surface.positions - center, axis=1)
        slices.append((snap, dt, np.nonzero(dist < radius)[0]))
    return SpacetimeRegion(center, float(radius), float(t_lo), float(t_hi),
                           slices)


def harnack_check(trajectory, x0, beta=None, q=None, c_n=1.0):
    """Mean-value bound sup_{D'} |A|^2 <= C_b ||A^2||_{L^beta(D)}.

    D is the unit ball around x0 over [0, 1], D' the half ball over
    [1/12, 1]; the trajectory must span [0, 1] in rescaled units.
    Returns the measured sides, the closed-form C_b, the PASS flag and
    the smallest c_n that would make it pass.
    """
    n = trajectory.n
    beta = float(n + 3 if beta is None else beta)
    q = float((n + 3) / 2.0 if q is None else q)
    if trajectory.duration < 1.0 - 1e-9:
        raise TrajectoryRange(
            f"trajectory spans [0, {trajectory.duration:.4g}], needs [0, 1]"
        )

    D = extract_region(trajectory, x0, 1.0, 0.0, 1.0)
    Dp = extract_region(trajectory, x0, 0.5, 1.0 / 12.0, 1.0)
    if D.is_empty or Dp.is_empty:
        raise EmptyRegion("no vertex samples inside the Harnack region")

    def v_of(surface):
        return surface.A2

    sup_dp = Dp.sup(v_of)
    norm_d = D.lp_norm(v_of, beta)
    if norm_d == 0.0:
        raise ZeroDenominator("|A|^2 vanishes on D")

    # C0 = ||2|A|^2||_{L^q} over M x [0,1): reuse the recorded power
    # integral of |A| at exponent 2q when available
    mass = _cumulative_until(trajectory, 2.0 * q, 1.0)
    C0 = 2.0 * mass ** (1.0 / q)
    idx = trajectory.row_at_or_before(1.0)
    C1 = (1.0 + float(trajectory.cumulative["hpow23"][idx])) ** (n / (n + 2.0))
    consts = moser_constants(n, q, C0, C1, c_n)
    C_b = consts.C_b(beta)

    passes = bool(sup_dp <= C_b * norm_d * (1.0 + 1e-12))
    # C_b scales like c_n^((2+nu) n^2 / beta); invert for the threshold
    expo = (2.0 + consts.nu) * n ** 2 / beta
    c_n_min = c_n * (sup_dp / (C_b * norm_d)) ** (1.0 / expo)
    return {
        "sup_Dprime": sup_dp,
        "norm_beta_D": norm_d,
        "beta": beta,
        "q": q,
        "constants": consts.to_dict(beta=beta),
        "pass": passes,
        "c_n_min": float(c_n_min),
        "samples_D": len(D.pairs()),
        "samples_Dprime": len(Dp.pairs()),
        "caveat": "sup over D' is a max over vertex samples at snapshot "
                  "times and under-resolves the true supremum",
    }


def _cumulative_until(trajectory, p, t_hi):
    """Cumulative integral integral |A|^p dmu ds up to time t_hi."""
    key = moment_key(p)
    idx = trajectory.row_at_or_before(t_hi)
    if key in trajectory.cumulative:
        return float(trajectory.cumulative[key][idx])
    report = power_report(trajectory, p)
    value = report.cumulative[idx]
    if not np.isfinite(value):
        finite = np.isfinite(report.cumulative[: idx + 1])
        value = report.cumulative[: idx + 1][finite][-1]
    return float(value)


# --------------------------------------------------------------------------
# empirical batteries


def _battery_map(fn, jobs, workers):
    """Map fn over jobs, on a thread pool when workers > 1.

    Each job carries its own seed, so the result list is identical at
    any worker count.
    """
    if workers <= 1:
        return [fn(job) for job in jobs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def standard_surfaces(level=3, seed=0):
    """The three-mesh fleet used by the random-field batteries."""
    from . import shapes

    return [
        shapes.icosphere(level),
        shapes.ellipsoid(level, (1.2, 1.0, 0.8)),
        shapes.bumpy_sphere(level, amplitude=0.2, seed=seed),
    ]


def michael_simon_battery(surfaces=None, trials=1000, seed=0, workers=1):
    """Max isoperimetric-type ratio over random positive fields."""
    from .shapes import random_positive_field

    surfaces = standard_surfaces() if surfaces is None else surfaces
    per_surface = []
    for k, surface in enumerate(surfaces):
        def one(j, surface=surface, k=k):
            f = random_positive_field(surface, seed=seed + 1000 * k + j)
            return michael_simon_ratio(surface, f)

        per_surface.append(max(_battery_map(one, range(trials), workers)))
    return {"max_ratio": max(per_surface), "per_surface": per_surface,
            "trials": trials, "seed": seed}


def lemma21_battery(surfaces=None, trials=500, seed=0, c_n=1.0, q_sob=None,
                    workers=1):
    """Min gap at fixed c_n plus the smallest all-PASS constant.

    The recommended constant carries a 5% safety factor so that a
    held-out battery of the same size stays nonnegative.
    """
    from .shapes import random_positive_field

    surfaces = standard_surfaces() if surfaces is None else surfaces
    min_gap = np.inf
    worst_ratio = 0.0
    for k, surface in enumerate(surfaces):
        exps = SobolevExponents(surface.n, q_sob)
        h_pow = integrate(surface, np.abs(surface.H),
                          surface.n + 3) ** (2.0 / 3.0)

        def one(j, surface=surface, k=k, exps=exps, h_pow=h_pow):
            v = random_positive_field(surface, seed=seed + 1000 * k + j)
            grad2 = dirichlet_energy(surface, v)
            l2sq = integrate(surface, v, 2.0)
            lhs = lp_norm(surface, v, 2.0 * exps.Q) ** 2
            rhs1 = grad2 + h_pow * l2sq
            return c_n * rhs1 - lhs, lhs / rhs1

        for gap, ratio in _battery_map(one, range(trials), workers):
            min_gap = min(min_gap, gap)
            worst_ratio = max(worst_ratio, ratio)
    return {
        "min_gap": float(min_gap),
        "c_n": c_n,
        "c_n_min": float(worst_ratio),
        "c_n_recommended": float(worst_ratio) * 1.05,
        "trials": trials,
        "seed": seed,
    }


def interpolation_battery(surfaces=None, trials=200, seed=0, n_exponents=3,
                          eps_grid=None, workers=1):
    """Gap sweep over random fields and eps for the (2, 2m, 2Q) family."""
    from .shapes import random_positive_field

    surfaces = standard_surfaces() if surfaces is None else surfaces
    eps_grid = np.logspace(-2, 2, 9) if eps_grid is None else eps_grid
    exps = SobolevExponents(n_exponents)
    t, r, s = 2.0, 2.0 * exps.m, 2.0 * exps.Q
    min_gap = np.inf
    for k, surface in enumerate(surfaces):
        def one(j, surface=surface, k=k):
            v = random_positive_field(surface, seed=seed + 1000 * k + j)
            return min(interpolation_gap(surface, v, eps, r, s, t)
                       for eps in eps_grid)

        min_gap = min(min_gap, min(_battery_map(one, range(trials), workers)))
    return {"min_gap": float(min_gap), "exponents": {"t": t, "r": r, "s": s},
            "trials": trials, "seed": seed}


def harnack_battery(trajectories, points=10, seed=0, beta=None, q=None,
                    c_n=1.0):
    """Smallest c_n over random centers near each trajectory's support."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    reports = []
    for trajectory in trajectories:
        snap = trajectory.snapshots[len(trajectory.snapshots) // 2]
        pos = snap.surface.positions
        for _ in range(points):
            x0 = pos[rng.integers(pos.shape[0])]
            x0 = x0 + rng.normal(scale=0.05, size=x0.shape)
            try:
                rep = harnack_check(trajectory, x0, beta=beta, q=q, c_n=c_n)
            except EmptyRegion:
                continue
            reports.append(rep)
            worst = max(worst, rep["c_n_min"])
    if not reports:
        raise EmptyRegion("no Harnack region was populated in the battery")
    return {"c_n_min": worst, "checks": len(reports),
            "all_pass": all(r["pass"] for r in reports), "seed": seed}
