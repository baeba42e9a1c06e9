"""Command-line harness entry point.

Verbs:
  run NAME|CONFIG.json   train and evaluate a preset scenario or a JSON config
  list-scenarios         show the preset catalog
  validate-theory        run the exact absorbing-chain suite
  report DIR             pretty-print a finished run directory

Exit codes: 0 on success, 1 on configuration or usage errors, 2 when --check
(or the theory suite) finds a failing check.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .harness import ConfigError, ExperimentConfig, run_experiment, write_outputs
from .scenarios import SCENARIOS, _run_theory, list_scenarios, run_scenario


def _default_threads() -> int:
    env = os.environ.get("HEATGRID_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SystemExit(f"HEATGRID_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _print_checks(checks) -> bool:
    all_ok = True
    for c in checks:
        mark = "PASS" if c.ok else "FAIL"
        print(f"  [{mark}] {c.name}: {c.detail}")
        all_ok = all_ok and c.ok
    return all_ok


def _cmd_run(args) -> int:
    target = args.target
    threads = args.threads if args.threads else _default_threads()
    if target.endswith(".json"):
        path = Path(target)
        if not path.exists():
            print(f"config file not found: {path}", file=sys.stderr)
            return 1
        try:
            config = ExperimentConfig.from_dict(json.loads(path.read_text()))
        except (json.JSONDecodeError, ConfigError) as exc:
            print(str(exc), file=sys.stderr)
            return 1
        if args.seed is not None:
            config.master_seed = args.seed
        out_dir = Path(args.out) if args.out else Path("runs") / config.scenario
        try:
            run = run_experiment(config, workers=threads)
            write_outputs(run, out_dir, force=args.force)
        except FileExistsError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        print(f"wrote {len(run.rows)} result rows to {out_dir / 'results.csv'}")
        if args.check:
            print("no checks defined for ad-hoc configs")
        return 0

    if target not in SCENARIOS:
        print(f"unknown scenario {target!r}; run list-scenarios to see the "
              f"presets, or pass a .json config file", file=sys.stderr)
        return 1
    out_dir = Path(args.out) if args.out else Path("runs") / target
    try:
        outcome = run_scenario(target, out_dir=out_dir, master_seed=args.seed,
                               workers=threads, force=args.force)
    except FileExistsError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"wrote {len(outcome.rows)} result rows to "
          f"{outcome.out_dir / 'results.csv'}")
    if outcome.checks:
        ok = _print_checks(outcome.checks)
        if args.check and not ok:
            return 2
    return 0


def _cmd_list(_args) -> int:
    width = max(len(name) for name, _ in list_scenarios())
    for name, desc in list_scenarios():
        print(f"{name:<{width}}  {desc}")
    return 0


def _cmd_theory(args) -> int:
    out_dir = Path(args.out) if args.out else None
    seed = args.seed if args.seed is not None else 20260815
    _rows, checks = _run_theory(out_dir, seed, 1, args.force,
                                mc_runs=args.mc_runs)
    ok = _print_checks(checks)
    if out_dir is not None:
        print(f"wrote theory report to {out_dir / 'results.csv'}")
    return 0 if ok else 2


def _cmd_report(args) -> int:
    run_dir = Path(args.dir)
    results = run_dir / "results.csv"
    if not results.exists():
        print(f"no results.csv under {run_dir}", file=sys.stderr)
        return 1
    with open(results, newline="") as fh:
        reader = csv.reader(fh)
        table = list(reader)
    if not table:
        print("results.csv is empty", file=sys.stderr)
        return 1
    header, body = table[0], table[1:]
    keep = [i for i, name in enumerate(header)
            if any(row[i] for row in body)]
    header = [header[i] for i in keep]
    body = [[row[i] for i in keep] for row in body]
    widths = [max(len(header[j]), *(len(row[j]) for row in body)) if body
              else len(header[j]) for j in range(len(header))]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in body:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    checks = run_dir / "checks.csv"
    if checks.exists():
        print()
        with open(checks, newline="") as fh:
            for rec in csv.DictReader(fh):
                mark = "PASS" if rec["ok"] == "true" else "FAIL"
                print(f"  [{mark}] {rec['check']}: {rec['detail']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatgrid",
        description="Temperature-dependent gridworlds: train tabular learners, "
                    "evaluate first-passage times, validate the exact chain "
                    "theory.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a preset scenario or a JSON config")
    p_run.add_argument("target", help="scenario name or path to a .json config")
    p_run.add_argument("--out", help="output directory (default runs/<scenario>)")
    p_run.add_argument("--seed", type=int, help="master seed override")
    p_run.add_argument("--threads", type=int,
                       help="worker processes (default HEATGRID_THREADS or all cores)")
    p_run.add_argument("--check", action="store_true",
                       help="exit with status 2 if any scenario check fails")
    p_run.add_argument("--force", action="store_true",
                       help="overwrite an existing results.csv")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list-scenarios", help="list preset scenarios")
    p_list.set_defaults(func=_cmd_list)

    p_theory = sub.add_parser("validate-theory",
                              help="run the absorbing-chain theory suite")
    p_theory.add_argument("--out", help="optional output directory")
    p_theory.add_argument("--seed", type=int, help="master seed override")
    p_theory.add_argument("--mc-runs", type=int, default=100_000,
                          help="Monte Carlo runs for the simulation check")
    p_theory.add_argument("--force", action="store_true",
                          help="overwrite an existing results.csv")
    p_theory.set_defaults(func=_cmd_theory)

    p_report = sub.add_parser("report", help="pretty-print a run directory")
    p_report.add_argument("dir")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
