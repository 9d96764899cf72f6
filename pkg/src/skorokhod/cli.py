"""Command-line entry point: ``skorokhod <command> ...``.

Exit status is 0 when every gating check of the command passes, 1 when a
gate fails and 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .fluid import FluidCertificationError
from .harness import (ConfigError, load_config, output_dir, run_convergence, run_figure1,
                      run_srpt_sjf_agreement, solve_fluid, write_report)
from .simulator import SimTrace, simulate, verify_exact_identities
from .step_paths import write_path_csv


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _echo(report: dict, path: Path) -> None:
    gates = report.get("gates", {})
    for name in sorted(gates):
        print(f"{'PASS' if gates[name]['passed'] else 'FAIL'}  {name}")
    print(f"report: {path}")


def cmd_fluid_solve(args) -> int:
    cfg = _load(args)
    out = output_dir(cfg, args.out)
    try:
        fl = solve_fluid(cfg, tol=args.tol)
    except FluidCertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return 1
    fl.alpha.to_csv(out / "alpha.csv")
    fl.xi.to_csv(out / "xi.csv")
    fl.beta.to_csv(out / "beta.csv")
    t = fl.xi.times
    write_path_csv(out / "iota.csv", t, fl.iota.values)
    write_path_csv(out / "rho.csv", t, fl.rho.values)
    write_path_csv(out / "mu.csv", t, fl.mu(t))
    figures = []
    if not args.no_plots:
        from .plotting import plot_fluid
        figures.append(plot_fluid(fl, out / "fluid.svg").name)
    report = {"schema": "skorokhod-report/1", "kind": "fluid", "experiment": cfg.name,
              "policy": cfg.policy, "certification": fl.report, "figures": figures,
              "gates": {"certified": {"passed": bool(fl.report["passed"])}},
              "passed": bool(fl.report["passed"])}
    _echo(report, write_report(report, out / "report.json"))
    return 0 if report["passed"] else 1


def cmd_simulate(args) -> int:
    cfg = _load(args)
    N = args.N if args.N is not None else cfg.N_list[0]
    out = output_dir(cfg, args.out)
    trace = simulate(cfg.sim_config(N, cfg.seed))
    trace.save(out)
    tol = cfg.tol_identity if args.tol is None else args.tol
    rep = verify_exact_identities(trace, tol=tol, max_columns=cfg.identity_columns)
    report = _identity_report(rep, trace)
    _echo(report, write_report(report, out / "report.json"))
    return 0 if report["passed"] else 1


def _identity_report(rep: dict, trace: SimTrace) -> dict:
    res = {k: rep[k] for k in rep["checked"]}
    return {"schema": "skorokhod-report/1", "kind": "identities",
            "policy": trace.config.policy, "N": trace.config.N, "seed": trace.config.seed,
            "n_jobs": rep["n_jobs"], "n_records": rep["n_records"], "bound": rep["bound"],
            "residuals": res,
            "gates": {k: {"passed": bool(v <= rep["bound"])} for k, v in res.items()},
            "passed": bool(rep["passed"])}


def cmd_verify(args) -> int:
    trace = SimTrace.load(args.trace)
    tol = 1e-9 if args.tol is None else args.tol
    rep = verify_exact_identities(trace, tol=tol)
    report = _identity_report(rep, trace)
    target = Path(args.out) if args.out else (Path(args.trace) if Path(args.trace).is_dir()
                                              else Path(args.trace).parent)
    _echo(report, write_report(report, target / "verify.json"))
    return 0 if report["passed"] else 1


def _progress(args):
    if args.quiet:
        return None
    return lambda N, s: print(f"  N={N} seed={s}", file=sys.stderr)


def cmd_converge(args) -> int:
    cfg = _load(args)
    if args.tol is not None:
        cfg = cfg.replace(tol_identity=args.tol)
    out = output_dir(cfg, args.out)
    try:
        report = run_convergence(cfg, progress=_progress(args))
    except FluidCertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return 1
    if not args.no_plots:
        from .plotting import plot_convergence
        report["figures"] = [plot_convergence(report, out / "convergence.svg").name]
    _write_metric_csv(report, out / "metrics.csv")
    _echo(report, write_report(report, out / "report.json"))
    return 0 if report["passed"] else 1


def cmd_agreement(args) -> int:
    cfg = _load(args)
    out = output_dir(cfg, args.out)
    report = run_srpt_sjf_agreement(cfg, progress=_progress(args))
    if not args.no_plots:
        from .plotting import plot_convergence
        report["figures"] = [plot_convergence(report, out / "agreement.svg").name]
    _write_metric_csv(report, out / "metrics.csv")
    _echo(report, write_report(report, out / "agreement.json"))
    return 0 if report["passed"] else 1


def cmd_figure1(args) -> int:
    out = output_dir(None, args.out, name="figure1")
    report = run_figure1(out, seed=0 if args.seed is None else args.seed,
                         render=not args.no_plots)
    _echo(report, write_report(report, out / "report.json"))
    return 0 if report["passed"] else 1


def _write_metric_csv(report: dict, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write("metric,N,replication,value\n")
        for name in sorted(report["metrics"]):
            for N in report["N_list"]:
                for r, v in enumerate(report["metrics"][name][str(N)]["values"]):
                    fh.write(f"{name},{N},{r},{v!r}\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skorokhod", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, seed=True):
        if config:
            sp.add_argument("config", help="experiment config (TOML)")
        sp.add_argument("--out", help="output directory (default: config 'out', "
                                      "then $SKOROKHOD_OUT/<name>, then out/<name>)")
        sp.add_argument("--tol", type=float, help="override the command's gating tolerance")
        if seed:
            sp.add_argument("--seed", type=int, help="override the base seed")
        sp.add_argument("--no-plots", action="store_true", help="skip SVG rendering")
        sp.add_argument("-q", "--quiet", action="store_true", help="no progress output")
        return sp

    common(sub.add_parser("fluid-solve", help="solve and certify the fluid model"), seed=False) \
        .set_defaults(func=cmd_fluid_solve)
    sp = common(sub.add_parser("simulate", help="one stochastic run plus identity check"))
    sp.add_argument("--N", type=int, help="scaling parameter (default: first of N_list)")
    sp.set_defaults(func=cmd_simulate)
    sp = sub.add_parser("verify", help="check exact identities on a saved trace")
    sp.add_argument("trace", help="trace directory written by 'simulate' (or a file in it)")
    sp.add_argument("--out", help="where to write verify.json (default: the trace directory)")
    sp.add_argument("--tol", type=float, help="relative tolerance (residual <= tol * N)")
    sp.set_defaults(func=cmd_verify)
    common(sub.add_parser("converge", help="N-sweep against the fluid limit")) \
        .set_defaults(func=cmd_converge)
    common(sub.add_parser("agreement", help="paired SJF/SRPT runs")) \
        .set_defaults(func=cmd_agreement)
    common(sub.add_parser("figure1", help="hard-EDF lead-time histograms (preset)"), config=False) \
        .set_defaults(func=cmd_figure1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.exit(2, f"{parser.prog}: config error: {exc}\n")
    except FileNotFoundError as exc:
        parser.exit(2, f"{parser.prog}: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
