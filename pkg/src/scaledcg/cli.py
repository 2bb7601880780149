"""Command-line entry point: ``scaledcg run|sweep|check``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .cg import LINESEARCH_FAILED
from .core import ManifoldError, UsageError
from .experiments import PRESETS, ExperimentSpec, run_checks, run_experiment, run_restart_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4


def _restart(text):
    if text.lower() in ("none", "0"):
        return None
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("restart period must be positive")
    return n


def _add_run_args(p, sweep=False):
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--variant", choices=("fr", "scaled-fr"), default="scaled-fr",
                   help="fr = differentiated-retraction transport, scaled-fr = switching transport")
    if sweep:
        p.add_argument("--periods", default="19,50,100,none",
                       help="comma-separated restart periods; 'none' = no restart")
        p.add_argument("--workers", type=int, default=1)
    else:
        p.add_argument("--restart", type=_restart, default=None, metavar="N",
                       help="reset beta to 0 every N iterations (default: never)")
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--grad-tol", type=float, default=None,
                   help="stop when |grad f| falls to this (default: preset value)")
    p.add_argument("--c1", type=float, default=1e-4)
    p.add_argument("--c2", type=float, default=0.1)
    p.add_argument("--x0", default="paper",
                   help="'paper' (the preset's reference start point) or 'random:<seed>'")
    p.add_argument("--out", default=None, help="trace file path (default: $SCALEDCG_OUT_DIR or ./traces)")
    p.add_argument("--format", dest="fmt", choices=("csv", "jsonl"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaledcg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log line-search fallbacks")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="run one experiment and write its trace"))
    _add_run_args(sub.add_parser("sweep", help="run one experiment per restart period"), sweep=True)
    chk = sub.add_parser("check", help="run the invariant suite")
    chk.add_argument("--scope", default="all",
                     help="'all', 'fast', or comma-separated groups "
                          "(metric,projection,retraction,transport,gradient,solver)")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--json", action="store_true", help="print the full report as JSON")
    return parser


def _spec(args, restart=None) -> ExperimentSpec:
    return ExperimentSpec(
        preset=args.preset,
        variant=args.variant,
        restart_period=restart,
        max_iter=args.max_iter,
        grad_tol=args.grad_tol,
        c1=args.c1,
        c2=args.c2,
        x0=args.x0,
        out=args.out,
        fmt=args.fmt,
    )


def _print_summary(res):
    s = res.summary
    print(f"{s['preset']} {s['variant']} restart={s['restart'] or 'none'}: "
          f"status={s['status']} iterations={s['iterations']} "
          f"final_f={s['final_f']:.17g} final_dist={s['final_dist']:.6e} "
          f"scaling_events={s['scaling_events']} trace={res.path}")


def _cmd_run(args):
    res = run_experiment(_spec(args, args.restart))
    _print_summary(res)
    return EXIT_SOLVER if res.result.status == LINESEARCH_FAILED else EXIT_OK


def _cmd_sweep(args):
    periods = [_restart(p.strip()) for p in args.periods.split(",") if p.strip()]
    bundle = run_restart_sweep(_spec(args), periods, workers=args.workers)
    code = EXIT_OK
    for res in bundle.values():
        _print_summary(res)
        if res.result.status == LINESEARCH_FAILED:
            code = EXIT_SOLVER
    return code


def _cmd_check(args):
    report = run_checks(args.scope, seed=args.seed)
    if args.json:
        print(json.dumps(report, indent=2, default=float))
    else:
        for group, r in report.items():
            print(f"{group:<12} {'PASS' if r['ok'] else 'FAIL'}")
    return EXIT_OK if all(r["ok"] for r in report.values()) else EXIT_CHECK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "check": _cmd_check}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"scaledcg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ManifoldError as exc:
        print(f"scaledcg: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
