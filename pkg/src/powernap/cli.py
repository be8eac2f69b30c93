"""Command-line front end: ``solve``, ``gen``, ``check`` and ``report``.

Exit codes: 0 success; 1 a requested bound or check failed; 2 usage error
(unknown algorithm, malformed input); 3 infeasible instance; 4 the oracle
refused an instance as too large.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from .core import (
    InfeasibleInstance,
    Instance,
    InstanceError,
    Schedule,
    TooLarge,
    dump_instance,
    load_instance,
    schedule_from_dict,
    schedule_to_dict,
)
from .feasibility import dsi_check

EXIT_BOUND, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_TOO_LARGE = 1, 2, 3, 4


class UsageError(Exception):
    pass


def _brute(instance: Instance, alpha: Fraction | None = None) -> Schedule:
    from .oracle import brute_opt_multi, brute_opt_single

    res = brute_opt_single(instance) if instance.machines == 1 else brute_opt_multi(instance)
    return res.witness


def _multi_skeleton(instance: Instance, alpha: Fraction | None = None) -> Schedule:
    from .multi import check_feasible, multi_skeleton

    check_feasible(instance)
    skel = multi_skeleton(instance)
    levels = [list(s.intervals) for s in skel.levels]
    return Schedule.build("multi-skeleton", levels, None, instance.wake_cost)


def _registry() -> dict[str, Callable[[Instance, Fraction | None], Schedule]]:
    from .lp_round import round_two_approx
    from .multi import six_approx
    from .single import approx_35_18, near_optimal, opt_plus_p, scaled_algorithm

    return {
        "opt-plus-p": lambda inst, a: opt_plus_p(inst),
        "scaled": lambda inst, a: scaled_algorithm(inst, a if a is not None else 2),
        "near-opt": lambda inst, a: near_optimal(inst),
        "a35-18": lambda inst, a: approx_35_18(inst),
        "multi-skeleton": _multi_skeleton,
        "six-approx": lambda inst, a: six_approx(inst),
        "lp-two-approx": lambda inst, a: round_two_approx(inst),
        "brute": _brute,
    }


ALGORITHMS = ("opt-plus-p", "scaled", "near-opt", "a35-18", "multi-skeleton", "six-approx",
              "lp-two-approx", "brute")


def run_algorithm(name: str, instance: Instance, alpha: Fraction | None = None) -> Schedule:
    registry = _registry()
    if name not in registry:
        raise UsageError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    if instance.machines > 1 and name in ("opt-plus-p", "scaled", "near-opt", "a35-18"):
        raise UsageError(f"{name} is a single-machine algorithm; instance has m = {instance.machines}")
    return registry[name](instance, alpha)


def oracle_guarantee(name: str, instance: Instance, schedule: Schedule, alpha: Fraction | None):
    from .oracle import brute_opt_multi, brute_opt_single
    from .single import guarantee

    res = brute_opt_single(instance) if instance.machines == 1 else brute_opt_multi(instance)
    if name == "scaled" and alpha is None:
        alpha = Fraction(2)
    lp_value = schedule.details.get("lp_value")
    return guarantee(
        name,
        schedule.cost.total,
        res.opt_cost,
        instance.total_processing,
        res.q_min,
        alpha=alpha,
        lp_value=None if lp_value is None else Fraction(lp_value),
    )


def _read_instance(path: str) -> Instance:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        return load_instance(text)
    except InstanceError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _infeasible_doc(instance: Instance) -> dict[str, Any]:
    check = dsi_check([instance.machines] * instance.horizon, instance.jobs)
    return {
        "error": "infeasible",
        "bound_certificate": None if check.feasible else check.certificate.to_dict(),
    }


def cmd_solve(args: argparse.Namespace) -> int:
    instance = _read_instance(args.instance)
    alpha = Fraction(args.alpha) if args.alpha is not None else None
    try:
        if args.lp_only:
            from .lp_round import build_and_solve_lp

            _emit(json.dumps(build_and_solve_lp(instance).to_dict(), indent=1) + "\n", args.output)
            return 0
        schedule = run_algorithm(args.alg, instance, alpha)
    except InfeasibleInstance:
        _emit(json.dumps(_infeasible_doc(instance)) + "\n", args.output)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = schedule_to_dict(schedule)
    code = 0
    if args.oracle:
        try:
            report = oracle_guarantee(args.alg, instance, schedule, alpha)
        except TooLarge as exc:
            print(f"oracle: {exc}", file=sys.stderr)
            return EXIT_TOO_LARGE
        doc["guarantee"] = report.to_dict()
        code = 0 if report.satisfied else EXIT_BOUND
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algorithm", "active", "wakeups", "total"] + (["opt", "bound", "satisfied"] if args.oracle else []))
        row = [doc["algorithm"], doc["cost"]["active"], doc["cost"]["wakeups"], doc["cost"]["total"]]
        if args.oracle:
            g = doc["guarantee"]
            row += [g["OPT"], g["bound"], g["satisfied"]]
        w.writerow(row)
        _emit(buf.getvalue(), args.output)
    else:
        _emit(json.dumps(doc, indent=1) + "\n", args.output)
    return code


def _seed(args: argparse.Namespace) -> int | None:
    env = os.environ.get("POWERNAP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"POWERNAP_SEED is not an integer: {env!r}") from exc
    return args.seed


def cmd_gen(args: argparse.Namespace) -> int:
    from .oracle import gap_instance, random_instance

    if args.gap_instance is not None:
        try:
            inst = gap_instance(args.gap_instance)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    elif args.random:
        seed = _seed(args)
        if seed is None:
            raise UsageError("--random needs --seed (or POWERNAP_SEED)")
        try:
            inst = random_instance(seed, args.n, args.d, args.q, args.m)
        except (ValueError, InstanceError) as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("gen needs --gap-instance Q or --random")
    _emit(dump_instance(inst), args.output)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    instance = _read_instance(args.instance)
    try:
        doc = json.loads(Path(args.report).read_text())
        schedule = schedule_from_dict(doc, instance.wake_cost)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from exc
    problems = []
    if schedule.assignment is None:
        problems.append("report has no assignment")
    else:
        v = schedule.violation(instance)
        if v is not None:
            problems.append(str(v))
    claimed = doc.get("cost", {}).get("total")
    if claimed is not None and Fraction(claimed) != schedule.cost.total:
        problems.append(f"claimed total {claimed} != recomputed {schedule.cost.total}")
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return EXIT_BOUND
    print(f"ok: total {schedule.cost.total}")
    return 0


REPORT_COLUMNS = ("instance", "algorithm", "status", "cost", "opt", "ratio", "runtime_ms")


def _report_row(task: tuple[str, str, bool]) -> dict[str, Any]:
    path, alg, with_oracle = task
    row: dict[str, Any] = {"instance": path, "algorithm": alg, "status": "ok",
                           "cost": None, "opt": None, "ratio": None, "runtime_ms": None}
    try:
        instance = load_instance(Path(path).read_text())
        start = time.perf_counter()
        schedule = run_algorithm(alg, instance)
        row["runtime_ms"] = round((time.perf_counter() - start) * 1000, 3)
        row["cost"] = int(schedule.cost.total)
        if with_oracle:
            from .oracle import brute_opt_multi, brute_opt_single

            try:
                res = brute_opt_single(instance) if instance.machines == 1 else brute_opt_multi(instance)
                row["opt"] = res.opt_cost
                if res.opt_cost:
                    row["ratio"] = f"{schedule.cost.total / res.opt_cost:.6f}"
            except TooLarge:
                pass
    except Exception as exc:  # a row failure must not abort the table
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def cmd_report(args: argparse.Namespace) -> int:
    algs = [a for a in args.algs.split(",") if a]
    for a in algs:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    tasks = [(path, alg, not args.no_oracle) for path in args.instances for alg in algs]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_report_row, tasks))
    else:
        rows = [_report_row(t) for t in tasks]
    if args.format == "json":
        _emit(json.dumps(rows, indent=1) + "\n", args.output)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if r[k] is None else r[k] for k in REPORT_COLUMNS})
        _emit(buf.getvalue(), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="powernap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one algorithm on an instance file")
    s.add_argument("instance", help="instance JSON path, or - for stdin")
    s.add_argument("--alg", default="opt-plus-p", help=", ".join(ALGORITHMS))
    s.add_argument("--alpha", help="scale for --alg scaled (rational, > 1; default 2)")
    s.add_argument("--oracle", action="store_true", help="compare against the brute-force optimum")
    s.add_argument("--lp-only", action="store_true", help="emit the fractional LP solution only")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("--gap-instance", type=int, metavar="Q")
    g.add_argument("--random", action="store_true")
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--q", type=int, default=2)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--seed", type=int)
    g.add_argument("--output", "-o")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="validate a schedule report against its instance")
    c.add_argument("report")
    c.add_argument("--instance", required=True)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("report", help="compare algorithms across instances")
    r.add_argument("instances", nargs="*")
    r.add_argument("--algs", default="opt-plus-p,brute")
    r.add_argument("--no-oracle", action="store_true")
    r.add_argument("--format", choices=("json", "csv"), default="csv")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--output", "-o")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"powernap: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
