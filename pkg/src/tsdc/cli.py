"""Command-line front end.

Machine-readable output goes to stdout, diagnostics to stderr.  Exit status:
0 success, 1 usage error, 2 invalid input or infeasible schedule.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .bench import (
    ALGORITHMS, averages, load_suite, plot_data, records_from_csv, records_to_csv, render_svg,
    run_algorithm, run_bench, stat_reports,
)
from .ils import SolverConfig, solve
from .instance import InstanceFormatError, Layout, Profile, generate_instance, instance_to_dict, write_instance
from .milp import build_model, write_lp
from .schedule import ScheduleError, evaluate, simulate_slots
from .stats import rank_sum_test
from .validation import check_instance, check_schedule

EXIT_OK, EXIT_USAGE, EXIT_INPUT = 0, 1, 2
SEED_ENV = "TSDC_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _emit(doc, out: str | None = None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args) -> SolverConfig:
    return SolverConfig(
        stall_limit=args.stall_limit,
        wall_clock_limit=args.time_limit,
        seed=_seed(args),
        per_ap_cap=args.cap,
    )


def cmd_generate(args) -> int:
    profile = Profile(area=args.area) if args.area is not None else None
    inst = generate_instance(Layout(args.layout), args.n, _seed(args), profile, args.name)
    if args.json:
        text = json.dumps(instance_to_dict(inst), indent=2) + "\n"
    else:
        text = write_instance(inst)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = check_instance(args.instance)
    cfg = _config(args)
    if args.algorithm == "ils-mdp":
        result = solve(inst, cfg)
        doc = result.to_dict()
        sched, ev = result.best, result.best_eval
    else:
        sched = run_algorithm(inst, args.algorithm, cfg.seed, cfg, args.duration)
        ev = evaluate(inst, sched)
        doc = {"schema": 1, "algorithm": args.algorithm, "best": sched.to_dict(), "best_eval": ev.to_dict()}
    if args.schedule_out:
        _emit(sched.to_dict(), args.schedule_out)
    if args.json:
        _emit(doc)
    else:
        print(f"{inst.name}: objective {float(ev.objective):.3f} route {list(sched.route)} "
              f"durations {list(sched.durations)}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    inst = check_instance(args.instance)
    sched = check_schedule(args.schedule, inst)
    ev = (simulate_slots if args.oracle else evaluate)(inst, sched, strict=args.strict)
    _emit(ev.to_dict())
    if not ev.feasible:
        print(f"infeasible schedule: {', '.join(ev.reasons)}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_bench(args) -> int:
    instances = load_suite(args.suite)
    if not instances:
        print(f"no instances found in {args.suite}", file=sys.stderr)
        return EXIT_INPUT
    base = _seed(args)
    algorithms = args.algorithm or ["ils-mdp", "greedy"]
    records = run_bench(
        instances, algorithms, range(base, base + args.runs), _config(args), args.workers, args.duration,
    )
    if args.csv:
        Path(args.csv).write_text(records_to_csv(records), encoding="utf-8")
    if args.json or not args.csv:
        _emit({
            "schema": 1,
            "records": [r.__dict__ for r in records],
            "averages": averages(records),
            "stats": [s.to_dict() for s in stat_reports(records)] if "ils-mdp" in algorithms else [],
        })
    return EXIT_OK


def cmd_export_milp(args) -> int:
    inst = check_instance(args.instance)
    text = write_lp(build_model(inst, args.cap, args.strict_collection))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _sample(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"sample must be comma-separated numbers: {text!r}") from None


def cmd_stats(args) -> int:
    if args.csv:
        records = records_from_csv(Path(args.csv).read_text(encoding="utf-8"))
        _emit({"schema": 1, "stats": [s.to_dict() for s in stat_reports(records, args.reference)]})
        return EXIT_OK
    if args.a is None or args.b is None:
        raise UsageError("stats needs --csv PATH or both --a and --b samples")
    res = rank_sum_test(_sample(args.a), _sample(args.b), args.method)
    _emit({"schema": 1, "statistic": res.statistic, "p_value": res.p_value, "method": res.method,
           "significant": res.p_value < 0.05})
    return EXIT_OK


def cmd_plot_data(args) -> int:
    inst = check_instance(args.instance)
    sched = check_schedule(args.schedule, inst)
    doc = plot_data(inst, sched)
    if args.svg:
        Path(args.svg).write_text(render_svg(doc), encoding="utf-8")
    _emit(doc, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tsdc", description="UAV data-collection scheduling toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def solver_flags(q):
        q.add_argument("--seed", type=int, help=f"random seed (default: ${SEED_ENV} or 0)")
        q.add_argument("--time-limit", type=float, default=1800.0, help="wall-clock limit in seconds")
        q.add_argument("--stall-limit", type=int, default=15)
        q.add_argument("--cap", type=int, default=31, help="per-AP collection cap in slots")
        q.add_argument("--duration", type=int, default=5, help="slots per AP for the uniform baseline")

    g = sub.add_parser("generate", help="write a generated instance")
    g.add_argument("--layout", choices=[m.value for m in Layout], required=True)
    g.add_argument("--n", type=int, required=True, help="number of APs")
    g.add_argument("--seed", type=int)
    g.add_argument("--area", type=float)
    g.add_argument("--name")
    g.add_argument("--json", action="store_true", help="JSON instead of the text format")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", choices=ALGORITHMS, default="ils-mdp")
    solver_flags(s)
    s.add_argument("--json", action="store_true")
    s.add_argument("--schedule-out", help="also write the schedule document here")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="evaluate a schedule")
    e.add_argument("--instance", required=True)
    e.add_argument("--schedule", required=True)
    e.add_argument("--oracle", action="store_true", help="use the slot-by-slot simulator")
    e.add_argument("--strict", action="store_true", help="treat drain-bound violations as infeasible")
    e.add_argument("--json", action="store_true", help="accepted for symmetry; output is always JSON")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="run algorithms over a suite directory")
    b.add_argument("--suite", required=True)
    b.add_argument("--runs", type=int, default=10)
    b.add_argument("--algorithm", action="append", choices=ALGORITHMS)
    b.add_argument("--workers", type=int, default=1)
    solver_flags(b)
    b.add_argument("--csv")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("export-milp", help="write the MILP in LP format")
    m.add_argument("--instance", required=True)
    m.add_argument("--cap", type=int, default=31)
    m.add_argument("--strict-collection", action="store_true")
    m.add_argument("--out")
    m.set_defaults(func=cmd_export_milp)

    t = sub.add_parser("stats", help="rank-sum tests")
    t.add_argument("--csv", help="bench CSV; tests --reference against every other algorithm")
    t.add_argument("--reference", default="ils-mdp")
    t.add_argument("--a", help="comma-separated first sample")
    t.add_argument("--b", help="comma-separated second sample")
    t.add_argument("--method", choices=("auto", "exact", "normal"), default="auto")
    t.set_defaults(func=cmd_stats)

    d = sub.add_parser("plot-data", help="emit route geometry")
    d.add_argument("--instance", required=True)
    d.add_argument("--schedule", required=True)
    d.add_argument("--svg")
    d.add_argument("--out")
    d.set_defaults(func=cmd_plot_data)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("tsdc: a subcommand is required")
        if getattr(args, "runs", 1) < 1:
            raise UsageError("--runs must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (InstanceFormatError, ScheduleError, FileNotFoundError, IsADirectoryError, ValueError, KeyError) as exc:
        print(f"tsdc: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
