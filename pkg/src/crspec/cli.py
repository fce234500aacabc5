"""Command-line entry point: ``crspec run`` and ``crspec verify``."""

import argparse
import json
import sys

import numpy as np

from .harness import SCENARIOS, ScenarioConfig, emit, run_scenario

EXIT_FAILED = 2


def _build_parser():
    p = argparse.ArgumentParser(prog="crspec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo scenario and write a rate table")
    run.add_argument("--config", help="JSON file with ScenarioConfig fields; flags override it")
    run.add_argument("--scenario", help=f"one of {', '.join(SCENARIOS)} (or fig2..fig6)")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output path (stdout if omitted)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--pt-min", type=float)
    run.add_argument("--pt-max", type=float)
    run.add_argument("--pt-points", type=int)
    run.add_argument("--gamma", type=float)
    run.add_argument("--mts", type=int, dest="M_ts")
    run.add_argument("--mrs", type=int, dest="M_rs")
    run.add_argument("--k", type=int, dest="K")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    ver = sub.add_parser("verify", help="run the acceptance checks")
    ver.add_argument("--only", nargs="+", metavar="KEY", help="check keys to run (default all)")
    return p


def config_from_args(args):
    """Merge a ``--config`` file with command-line overrides."""
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    for key in ("scenario", "trials", "seed", "gamma", "M_ts", "M_rs", "K"):
        val = getattr(args, key)
        if val is not None:
            d[key] = val
    if any(v is not None for v in (args.pt_min, args.pt_max, args.pt_points)):
        lo = args.pt_min if args.pt_min is not None else 1.0
        hi = args.pt_max if args.pt_max is not None else 100.0
        n = args.pt_points if args.pt_points is not None else 9
        if lo <= 0 or hi < lo or n < 1:
            raise ValueError("need 0 < pt-min <= pt-max and pt-points >= 1")
        d["P_t_grid"] = [lo] if n == 1 else np.logspace(np.log10(lo), np.log10(hi), n).tolist()
    return ScenarioConfig.from_dict(d)


def _cmd_run(args):
    cfg = config_from_args(args)
    rows = run_scenario(cfg, jobs=max(1, args.jobs))
    text = emit(rows, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    flagged = sum(r.flagged for r in rows)
    if flagged:
        print(f"note: {flagged} method/draw pairs could not run and scored 0", file=sys.stderr)
    return 0


def _cmd_verify(args):
    from .acceptance import run_all

    results = run_all(args.only, echo=lambda s: print(s, flush=True))
    failed = [r.key for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_verify(args)
    except (ValueError, OSError) as exc:
        print(f"crspec: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
