"""Command-line entry point.

Subcommands: flow run | flow monitor | flow rescale | flow gronwall |
verify michael-simon | verify lemma21 | verify parabolic-sobolev |
verify interpolation | verify harnack | constants | oracle sphere |
oracle compare | report plot.

Exit codes: 0 success, 1 a verification check failed, 2 usage or input
error. Randomized batteries take --seed (default 0). A TOML file given
via --config supplies defaults for the flags of that subcommand (keys
are flag names with underscores); flags on the command line win.
MCFLOW_THREADS caps battery parallelism (default 1, serial).
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from . import __version__
from .errors import McflowError
from . import analysis, gronwall, monitors, oracle, persist, plots, rescale
from . import shapes
from .flow import FlowConfig, RemeshPolicy, run
from .fileio import load_surface
from .shapes import random_positive_field
from .surface import integrate, lp_norm


def _workers():
    try:
        return max(1, int(os.environ.get("MCFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _print_json(payload, out=None):
    """Emit a sanitized JSON report to stdout and optionally a file."""
    clean = persist.sanitize(payload)
    text = json.dumps(clean, indent=1, sort_keys=True, allow_nan=False)
    print(text)
    if out is not None:
        persist.write_json(payload, out)
    return clean


def _load_run(path):
    return persist.load_trajectory(Path(path))


# --------------------------------------------------------------------------
# flow


def _build_input(args):
    """Surface plus a provenance record, from --input or --shape."""
    if args.input is not None:
        path = Path(args.input)
        data = path.read_bytes()
        surface = load_surface(path)
        provenance = {"input": str(path),
                      "sha256": hashlib.sha256(data).hexdigest()}
        return surface, provenance
    spec = {"shape": args.shape, "radius": args.radius, "seed": args.seed}
    if args.shape == "sphere":
        surface = shapes.icosphere(args.level, radius=args.radius)
        spec["level"] = args.level
    elif args.shape == "ellipsoid":
        axes = (1.2 * args.radius, 1.0 * args.radius, 0.8 * args.radius)
        surface = shapes.ellipsoid(args.level, axes)
        spec.update(level=args.level, semi_axes=list(axes))
    elif args.shape == "bumpy":
        surface = shapes.bumpy_sphere(args.level, amplitude=args.amplitude,
                                      seed=args.seed)
        spec.update(level=args.level, amplitude=args.amplitude)
    elif args.shape == "circle":
        surface = shapes.regular_polygon(args.k, radius=args.radius)
        spec["k"] = args.k
    elif args.shape == "wavy":
        surface = shapes.wavy_polygon(args.k, amplitude=args.amplitude,
                                      seed=args.seed, radius=args.radius)
        spec.update(k=args.k, amplitude=args.amplitude)
    else:
        raise McflowError(f"unknown shape {args.shape!r}")
    return surface, spec


def cmd_flow_run(args):
    if args.input is None and args.shape is None:
        raise McflowError("flow run needs --input FILE or --shape NAME")
    surface, provenance = _build_input(args)
    config = FlowConfig(
        scheme=args.scheme,
        dt_max=args.dt_max,
        t_end=None if args.until_singular else args.t_end,
        snapshot_stride=args.snapshot_stride,
        remesh=RemeshPolicy(enabled=not args.no_remesh),
    )
    trajectory = run(surface, config)
    parameters = {
        "seed": args.seed,
        "c_n": args.cn,
        "c0": args.c0,
        "c": args.c,
        "tau1": args.tau1,
        "q_sob": args.q_sob,
        "provenance": provenance,
    }
    out = Path(args.out)
    persist.save_trajectory(trajectory, out, parameters=parameters,
                            force=args.force)
    print(f"status: {trajectory.status}")
    print(f"rows: {trajectory.row_count}  duration: {trajectory.duration!r}")
    if trajectory.estimated_T is not None:
        print(f"estimated_T: {trajectory.estimated_T!r}  "
              f"rate_exponent: {trajectory.rate_exponent!r}")
    print(f"saved: {out / 'manifest.json'}")
    return 0


def cmd_flow_monitor(args):
    trajectory = _load_run(args.run)
    reports = [
        monitors.critical_power(trajectory),
        monitors.supercritical(trajectory),
        monitors.subcritical_log(trajectory),
        monitors.sup_a_report(trajectory),
    ]
    if args.p is not None or args.q is not None:
        if args.p is None or args.q is None:
            raise McflowError("--p and --q must be given together")
        reports.append(monitors.mixed_norm_report(trajectory, args.p, args.q))
    payload = {"run": str(args.run), "reports": [r.to_dict() for r in reports]}
    if args.keybound_lambda is not None:
        kb = monitors.keybound_check(trajectory, args.keybound_lambda)
        payload["keybound"] = kb.to_dict()
    out_dir = Path(args.out) if args.out else Path(args.run) / "monitors"
    out_dir.mkdir(parents=True, exist_ok=True)
    with persist.output_lock(out_dir):
        persist.write_json(payload, out_dir / "monitors.json")
        for report in reports:
            name = report.kind.lower().replace(" ", "_")
            persist.monitor_csv(report, out_dir / f"{name}.csv")
    for report in reports:
        slope = None if report.fit is None else round(report.fit.slope, 4)
        print(f"{report.kind}: final={report.final!r} slope={slope} "
              f"divergent={report.divergent}")
    print(f"wrote {out_dir / 'monitors.json'}")
    return 0


def cmd_flow_rescale(args):
    chosen = [x is not None for x in (args.factor, args.c0, args.unit_time)]
    if sum(chosen) != 1:
        raise McflowError(
            "flow rescale needs exactly one of --factor, --c0, --unit-time")
    trajectory = _load_run(args.run)
    if args.factor is not None:
        spec = rescale.RescaleSpec(mode="explicit", factor=args.factor)
    elif args.c0 is not None:
        spec = rescale.RescaleSpec(mode="normalizing", c0=args.c0)
    else:
        spec = rescale.RescaleSpec(mode="unit-time", t_target=args.unit_time)
    Q = spec.resolve(trajectory)
    scaled = rescale.rescale_trajectory(trajectory, Q)
    report = {"mode": spec.mode, "Q": Q, "source": str(args.run)}
    code = 0
    if args.factor is not None:
        inv = rescale.invariance_report(trajectory, Q)
        report["invariance"] = inv
        code = 0 if inv["passed"] else 1
    out = Path(args.out)
    persist.save_trajectory(scaled, out, parameters={"rescale": report},
                            force=args.force)
    persist.write_json(report, out / "rescale_report.json")
    print(f"Q: {Q!r}  mode: {spec.mode}")
    if "invariance" in report:
        print(f"invariance: {'PASS' if code == 0 else 'FAIL'}")
    print(f"saved: {out / 'manifest.json'}")
    return code


def cmd_flow_gronwall(args):
    trajectory = _load_run(args.run)
    state = gronwall.h_bound(trajectory, c=args.c, tau1=args.tau1)
    verdict = gronwall.extension_verdict(trajectory, c=args.c,
                                         tau1=args.tau1)
    payload = {"state": state.to_dict(), **verdict}
    out = Path(args.out) if args.out else Path(args.run) / "gronwall.json"
    persist.write_json(payload, out)
    print(f"verdict: {verdict['verdict']}")
    if verdict.get("bound") is not None:
        print(f"bound: {verdict['bound']!r}  "
              f"observed sup f: {verdict['observed_sup_f']!r}")
    print(f"comparison f<=h: {state.comparison_holds}  "
          f"chain: {state.chain_holds}")
    print(f"wrote {out}")
    return 0 if (state.comparison_holds and state.chain_holds) else 1


# --------------------------------------------------------------------------
# verify


def _verdict(passed, payload, out):
    payload["pass"] = bool(passed)
    _print_json(payload, out)
    print("PASS" if passed else "FAIL")
    return 0 if passed else 1


def cmd_verify_ms(args):
    if args.mesh is not None:
        surface = load_surface(Path(args.mesh))
        if args.field == "const":
            field = np.ones(surface.vertex_count)
        else:
            field = random_positive_field(surface, seed=args.seed)
        ratio = analysis.michael_simon_ratio(surface, field)
        payload = {"mesh": str(args.mesh), "field": args.field,
                   "ratio": ratio, "c_n": args.cn}
        return _verdict(ratio <= args.cn, payload, args.out)
    report = analysis.michael_simon_battery(trials=args.trials,
                                            seed=args.seed,
                                            workers=_workers())
    report["c_n"] = args.cn
    return _verdict(report["max_ratio"] <= args.cn, report, args.out)


def cmd_verify_lemma21(args):
    report = analysis.lemma21_battery(trials=args.trials, seed=args.seed,
                                      c_n=args.cn, q_sob=args.q_sob,
                                      workers=_workers())
    return _verdict(report["min_gap"] >= 0.0, report, args.out)


def cmd_verify_parabolic(args):
    if args.run is not None:
        trajectory = _load_run(args.run)
    else:
        print("no --run given; flowing a subdivision-2 sphere to t=0.1")
        trajectory = run(shapes.icosphere(2),
                         FlowConfig(t_end=0.1, dt_max=1e-3))

    def curvature_field(surface, t):
        return np.sqrt(surface.A2)

    def random_field(surface, t):
        return random_positive_field(surface, seed=args.seed)

    gaps = {
        "abs_A": analysis.parabolic_sobolev_gap(trajectory, curvature_field,
                                                c_n=args.cn),
        "random": analysis.parabolic_sobolev_gap(trajectory, random_field,
                                                 c_n=args.cn),
    }
    payload = {"gaps": gaps, "c_n": args.cn, "n": trajectory.n}
    return _verdict(all(g >= 0.0 for g in gaps.values()), payload, args.out)


def cmd_verify_interp(args):
    report = analysis.interpolation_battery(trials=args.trials,
                                            seed=args.seed,
                                            workers=_workers())
    return _verdict(report["min_gap"] >= 0.0, report, args.out)


def cmd_verify_harnack(args):
    if args.run is not None:
        trajectory = _load_run(args.run)
    else:
        print("no --run given; flowing a subdivision-2 sphere to "
              "near-singular time")
        trajectory = run(shapes.icosphere(2), FlowConfig(dt_max=5e-4))
    if trajectory.duration < 1.0 - 1e-9:
        Q = rescale.unit_time_factor(trajectory)
        print(f"duration {trajectory.duration:.4g} < 1; "
              f"rescaling by Q={Q:.6g} to unit time")
        trajectory = rescale.rescale_trajectory(trajectory, Q)
    report = analysis.harnack_battery([trajectory], points=args.points,
                                      seed=args.seed, beta=args.beta,
                                      q=args.q, c_n=args.cn)
    return _verdict(report["all_pass"], report, args.out)


# --------------------------------------------------------------------------
# constants / oracle / report


def cmd_constants(args):
    mc = analysis.moser_constants(args.n, args.q, C0=args.c0, C1=args.c1,
                                  c_n=args.cn)
    payload = dict(mc.to_dict(beta=args.beta))
    try:
        exps = analysis.SobolevExponents(args.n, args.q_sob)
        payload["sobolev"] = {"Q": exps.Q, "m": exps.m, "alpha": exps.alpha,
                              "beta_par": exps.beta_par}
    except McflowError as exc:
        payload["sobolev"] = None
        payload["sobolev_note"] = str(exc)
    _print_json(payload, args.out)
    return 0


def cmd_oracle_sphere(args):
    value = oracle.sphere_functional(args.n, args.r0, args.t, args.functional)
    _print_json({"n": args.n, "r0": args.r0, "t": args.t,
                 "functional": args.functional, "value": value}, args.out)
    return 0


def cmd_oracle_compare(args):
    trajectory = _load_run(args.traj)
    solution = oracle.SphereSolution(trajectory.n, args.r0)
    report = oracle.compare(trajectory, solution,
                            horizon_fraction=args.horizon)
    report["tolerance"] = args.tol
    for name in sorted(report["series"]):
        print(f"{name}: max_rel={report['series'][name]['max_rel']:.3e}")
    radius_err = report["series"].get("radius", {}).get("max_rel", np.inf)
    return _verdict(radius_err <= args.tol, report, args.out)


def cmd_report_plot(args):
    trajectory = _load_run(args.run)
    out_dir = Path(args.out) if args.out else Path(args.run) / "plots"
    written = []
    if args.kind in ("monitors", "both"):
        written.append(plots.plot_monitors(
            trajectory, out_dir / "monitors.svg"))
    if args.kind in ("silhouettes", "both"):
        written.append(plots.plot_silhouettes(
            trajectory, out_dir / "silhouettes.svg"))
    for path in written:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# parser


def _add_seed_config(parser):
    parser.add_argument("--seed", type=int, default=0,
                        help="RNG seed for randomized inputs (default 0)")
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML file of flag defaults for this subcommand")
    parser.add_argument("--out", type=Path, default=None,
                        help="write the JSON report here as well")


def build_parser():
    """The full argparse tree; returns (parser, list of leaf parsers)."""
    parser = argparse.ArgumentParser(
        prog="mcflow",
        description="mean curvature flow laboratory: evolve discrete "
                    "hypersurfaces, monitor blow-up functionals, verify "
                    "the supporting inequalities",
    )
    parser.add_argument("--version", action="version",
                        version=f"mcflow {__version__}")
    top = parser.add_subparsers(dest="command", required=True)
    leaves = []

    def leaf(sub, name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        leaves.append(p)
        return p

    flow = top.add_parser("flow", help="run and post-process flows")
    flow_sub = flow.add_subparsers(dest="subcommand", required=True)

    p = leaf(flow_sub, "run", cmd_flow_run,
             help="evolve a surface and save the trajectory")
    p.add_argument("--input", type=Path, default=None,
                   help="surface file (.obj mesh or .curve.json polygon)")
    p.add_argument("--shape", default=None,
                   choices=["sphere", "circle", "ellipsoid", "bumpy", "wavy"],
                   help="built-in initial surface instead of --input")
    p.add_argument("--level", type=int, default=3,
                   help="mesh subdivision level for built-in shapes")
    p.add_argument("--k", type=int, default=200,
                   help="vertex count for built-in curves")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=0.2,
                   help="perturbation size for bumpy/wavy shapes")
    p.add_argument("--until-singular", action="store_true",
                   help="run to the curvature-blow-up stop (default when "
                        "--t-end is not given)")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt-max", type=float, default=2.5e-4)
    p.add_argument("--scheme", default="semi-implicit",
                   choices=["semi-implicit", "explicit"])
    p.add_argument("--snapshot-stride", type=int, default=10)
    p.add_argument("--no-remesh", action="store_true")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing trajectory directory")
    p.add_argument("--cn", type=float, default=1.0,
                   help="analysis constant echoed into the manifest")
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--tau1", type=float, default=gronwall.DEFAULT_TAU1)
    p.add_argument("--q-sob", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True,
                   help="trajectory output directory")

    p = leaf(flow_sub, "monitor", cmd_flow_monitor,
             help="blow-up monitor reports for a saved run")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--p", type=float, default=None,
                   help="spatial exponent of an extra mixed norm")
    p.add_argument("--q", type=float, default=None,
                   help="time exponent of an extra mixed norm")
    p.add_argument("--keybound-lambda", type=float, default=None,
                   help="also evaluate the keybound ratio from this time")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None,
                   help="report directory (default RUN/monitors)")

    p = leaf(flow_sub, "rescale", cmd_flow_rescale,
             help="parabolic rescaling of a saved run")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--factor", type=float, default=None,
                   help="explicit scale factor Q")
    p.add_argument("--c0", type=float, default=None,
                   help="normalize the supercritical integral to this mass")
    p.add_argument("--unit-time", type=float, nargs="?", const=1.0,
                   default=None, metavar="T",
                   help="scale the duration to T (default 1.0)")
    p.add_argument("--force", action="store_true")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = leaf(flow_sub, "gronwall", cmd_flow_gronwall,
             help="comparison-function bound and extension verdict")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--c", type=float, default=None,
                   help="lower-limit constant (default: empirical fit)")
    p.add_argument("--tau1", type=float, default=gronwall.DEFAULT_TAU1)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None,
                   help="report path (default RUN/gronwall.json)")

    verify = top.add_parser("verify",
                            help="numerical checks of the inequalities")
    verify_sub = verify.add_subparsers(dest="subcommand", required=True)

    p = leaf(verify_sub, "michael-simon", cmd_verify_ms,
             help="isoperimetric-type inequality on meshes")
    p.add_argument("--mesh", type=Path, default=None,
                   help="single mesh file; default runs the random battery")
    p.add_argument("--field", default="const", choices=["const", "random"])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--cn", type=float, default=1.0)
    _add_seed_config(p)

    p = leaf(verify_sub, "lemma21", cmd_verify_lemma21,
             help="curvature-weighted Sobolev bound on meshes")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--cn", type=float, default=1.0)
    p.add_argument("--q-sob", type=float, default=None)
    _add_seed_config(p)

    p = leaf(verify_sub, "parabolic-sobolev", cmd_verify_parabolic,
             help="spacetime Sobolev bound along a flow")
    p.add_argument("--run", type=Path, default=None,
                   help="saved trajectory (default: flow a small sphere)")
    p.add_argument("--cn", type=float, default=1.0)
    _add_seed_config(p)

    p = leaf(verify_sub, "interpolation", cmd_verify_interp,
             help="epsilon-interpolation bound between Lp norms")
    p.add_argument("--trials", type=int, default=200)
    _add_seed_config(p)

    p = leaf(verify_sub, "harnack", cmd_verify_harnack,
             help="local sup bound over unit spacetime regions")
    p.add_argument("--run", type=Path, default=None,
                   help="saved trajectory (default: flow a small sphere)")
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--cn", type=float, default=1.0)
    _add_seed_config(p)

    p = leaf(top, "constants", cmd_constants,
             help="iteration constants and Sobolev exponents")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--cn", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=None,
                   help="also evaluate the beta-dependent constants")
    p.add_argument("--q-sob", type=float, default=None)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None)

    orc = top.add_parser("oracle", help="closed-form shrinking solutions")
    orc_sub = orc.add_subparsers(dest="subcommand", required=True)

    p = leaf(orc_sub, "sphere", cmd_oracle_sphere,
             help="evaluate one exact-solution functional")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--functional", required=True,
                   help="radius | sup-a | h | measure | critical | "
                        "supercritical | subcritical-log[-cumulative] | "
                        "h-moment | h-mixed-23 | moment:P | cumulative:P | "
                        "mixed:P:Q")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None)

    p = leaf(orc_sub, "compare", cmd_oracle_compare,
             help="error report of a saved run against the exact solution")
    p.add_argument("--traj", type=Path, required=True,
                   help="trajectory directory from flow run")
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=0.8,
                   help="compare over [0, horizon * T]")
    p.add_argument("--tol", type=float, default=0.01,
                   help="PASS threshold on the radius max relative error")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None)

    rpt = top.add_parser("report", help="SVG reports for saved runs")
    rpt_sub = rpt.add_subparsers(dest="subcommand", required=True)

    p = leaf(rpt_sub, "plot", cmd_report_plot,
             help="monitor charts and snapshot silhouettes")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--kind", default="both",
                   choices=["monitors", "silhouettes", "both"])
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None,
                   help="plot directory (default RUN/plots)")

    return parser, leaves


def _apply_config(argv, leaves):
    """Fold --config TOML values in as subcommand defaults."""
    if "--config" not in argv:
        return
    path = Path(argv[argv.index("--config") + 1])
    try:
        with open(path, "rb") as fh:
            table = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise McflowError(f"cannot read config {path}: {exc}") from exc
    for p in leaves:
        dests = {a.dest for a in p._actions}
        known = {k: v for k, v in table.items() if k in dests}
        if known:
            p.set_defaults(**known)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        _apply_config(argv, leaves)
        args = parser.parse_args(argv)
        return args.func(args)
    except IndexError:
        print("error: --config needs a path", file=sys.stderr)
        return 2
    except (McflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
