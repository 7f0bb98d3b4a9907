"""Command-line front end.

Exit codes: 0 success, 1 configuration/schema/usage error, 2 singular-Jacobian
abort, 3 numerical divergence.
"""
import argparse
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

from . import control as C
from . import sim
from . import trajectory as T
from .errors import ConfigError, QuatSlideError, UnreachableTrajectory

log = logging.getLogger("quatslide")

DEMOS = {
    "setpoint": (["setpoint"], "hold the home pose; errors stay at zero"),
    "tracking": (["tracking"], "sinusoidal position + constant-axis slew, local-frame sliding variable"),
    "unwinding": (["unwinding-local", "unwinding-naive"],
                  "350-degree orientation error: sliding controller vs. sgn-free baseline"),
    "global-frame": (["global-frame"], "tracking with the inertial-frame sliding variable"),
    "singular": (["singular"], "converge onto a wrist singularity; aborts with exit code 2"),
}


def _demo_doc(name):
    text = resources.files("quatslide").joinpath(f"data/demos/{name}.json").read_text()
    return json.loads(text)


def _execute(cfg, resolved, out_dir, figures):
    log.info("running %s (%s, dt=%g, T=%g)", cfg.name, cfg.controller.mode, cfg.dt, cfg.duration)
    result = sim.run(cfg)
    resolved["outputs"]["dir"] = str(out_dir)
    sim.write_outputs(result, out_dir, resolved, figures=figures)
    m = result.metrics
    print(f"{cfg.name}: exit={result.exit_code} final_p_err={m.final_p_err:.3e} "
          f"final_qvec_err={m.final_qvec_err:.3e} rate_p={m.fitted_rate_position:.4g} "
          f"rate_q={m.fitted_rate_orientation:.4g} path_length={m.path_length:.4f} "
          f"final_sign={m.final_sign:+d} -> {out_dir}")
    if m.aborted:
        print(f"{cfg.name}: aborted: {m.aborted}", file=sys.stderr)
    return result.exit_code


def cmd_run(args):
    cfg, resolved, outputs = sim.load_scenario(args.scenario)
    out = Path(args.out or outputs.get("dir") or Path("runs") / cfg.name)
    figures = outputs.get("figures", True) and not args.no_figures
    return _execute(cfg, resolved, out, figures)


def cmd_demo(args):
    if args.name not in DEMOS:
        raise ConfigError(f"unknown demo {args.name!r}; try 'list-demos'")
    files, _ = DEMOS[args.name]
    base = Path(args.out or Path("runs") / args.name)
    code = 0
    for f in files:
        cfg, resolved, _ = sim.config_from_dict(_demo_doc(f))
        out = base if len(files) == 1 else base / f.split("-", 1)[1]
        code = max(code, _execute(cfg, resolved, out, not args.no_figures))
    return code


def cmd_list_demos(_args):
    for name, (_, desc) in DEMOS.items():
        print(f"{name:14s} {desc}")
    return 0


def cmd_validate(args):
    cfg, _, _ = sim.load_scenario(args.scenario)
    print(f"{args.scenario}: schema ok ({cfg.controller.mode}, dt={cfg.dt:g}, T={cfg.duration:g})")
    if cfg.controller.mode == C.JOINT:
        return 0
    try:
        rep = T.reachability_check(cfg.model, cfg.trajectory, n_samples=args.samples,
                                   theta_seed=cfg.theta0, cond_abort=cfg.controller.cond_abort)
    except UnreachableTrajectory as exc:
        print(f"{args.scenario}: unreachable: {exc}", file=sys.stderr)
        return 1
    print(f"{args.scenario}: min manipulability {rep.min_manipulability:.4g}, "
          f"max condition {rep.max_condition:.4g}")
    if not rep.ok:
        print(f"{args.scenario}: condition exceeds {cfg.controller.cond_abort:g} at "
              f"t={rep.violations[0]:.4g}", file=sys.stderr)
        return 2
    return 0


def cmd_plot(args):
    from .plotting import render_report

    trace_path = Path(args.trace)
    trace = sim.read_trace(trace_path)
    metrics = None
    mpath = trace_path.parent / "metrics.json"
    if mpath.exists():
        raw = json.loads(mpath.read_text())
        raw = {k: (math.nan if v is None and k.startswith("fitted") else v) for k, v in raw.items()}
        metrics = sim.RunMetrics(**raw)
    out = Path(args.out or trace_path.parent)
    out.mkdir(parents=True, exist_ok=True)
    for p in render_report(trace, metrics, out):
        print(p)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="quatslide", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory (default: outputs.dir or runs/<name>)")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("demo", help="run a built-in scenario")
    d.add_argument("name")
    d.add_argument("--out")
    d.add_argument("--no-figures", action="store_true")
    d.set_defaults(func=cmd_demo)

    ls = sub.add_parser("list-demos", help="list built-in scenarios")
    ls.set_defaults(func=cmd_list_demos)

    v = sub.add_parser("validate", help="check a scenario's schema and reachability")
    v.add_argument("scenario")
    v.add_argument("--samples", type=int, default=50)
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plot", help="render report figures from a trace.csv")
    pl.add_argument("trace")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; keep 2 reserved for singular aborts
        return 1 if exc.code == 2 else exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except QuatSlideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
