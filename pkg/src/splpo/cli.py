"""Command-line front end.

    splpo generate --m 75 --n 50 --seed 1 --count 4 --out-dir instances/
    splpo solve instances/a75_50_1.splpo --algorithm ada --preset a75_50
    splpo bench "instances/*.splpo" --algorithms hc,hs,exact --out report.csv

Exit codes: 0 success, 2 usage error, 3 infeasible, 4 stopped at a limit.
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .ada import AdaConfig, ada, preset_config
from .exact import InfeasibleError, ProblemSpec, branch_and_bound, brute_force
from .instance import GeneratorConfig, Instance, generate_instance, parse_instance, write_instance
from .lagrange import SgConfig, subgradient_method
from .report import ReportRow, RunReport, config_hash, gap_fields
from .semilagrange import DaConfig, dual_ascent, feasible_solution_from
from .solution import heuristic_hc, heuristic_hs, solution_to_json

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INCOMPLETE = 4

ALGORITHMS = ("hc", "hs", "sg", "da", "ada", "exact", "brute")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splpo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write seeded canonical instance files")
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--out-dir", type=Path, required=True)
    gen.add_argument("--tag", default="a", help="filename family prefix")
    gen.add_argument("--mode", choices=("uniform", "cost-consistent"), default="uniform")
    gen.add_argument("--scale", type=int, default=1)

    solve = sub.add_parser("solve", help="run one algorithm on one instance")
    solve.add_argument("instance", type=Path)
    solve.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    solve.add_argument("--solution-out", type=Path, default=None)
    solve.add_argument("--report-out", type=Path, default=None, help="append a report row here")
    _add_solver_flags(solve)

    bench = sub.add_parser("bench", help="compare algorithms across instances")
    bench.add_argument("instances", nargs="+", help="instance paths or globs")
    bench.add_argument("--algorithms", default="hc,hs,exact")
    bench.add_argument("--out", type=Path, default=None)
    bench.add_argument("--format", choices=("csv", "json"), default="csv")
    bench.add_argument("--optima", type=Path, default=None,
                       help="JSON file mapping instance name to its optimal value")
    _add_solver_flags(bench)
    return parser


def _add_solver_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--preset", default=None)
    cmd.add_argument("--sg-iter", type=int, default=None)
    cmd.add_argument("--da-iter", type=int, default=None)
    cmd.add_argument("--vfh-iter", type=int, default=None)
    cmd.add_argument("--ps", type=float, default=None)
    cmd.add_argument("--epsilon", type=float, default=None)
    cmd.add_argument("--beta0", type=float, default=None)
    cmd.add_argument("--stall-k", type=int, default=None)
    cmd.add_argument("--beta-dec", type=float, default=None)
    cmd.add_argument("--node-limit", type=int, default=None)
    cmd.add_argument("--time-limit", type=float, default=None)
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--prefix-x", action="store_true", help="pre-fix x variables by reduced cost")
    cmd.add_argument("--snap-top", action="store_true",
                     help="use the epsilon-offset rule above the ladder's top cost")


def _ada_config(args, inst: Instance) -> AdaConfig:
    cfg = preset_config(args.preset) if args.preset else preset_config((inst.m, inst.n))
    updates = {}
    for flag, name in (
        ("sg_iter", "sg_iter"),
        ("da_iter", "da_iter"),
        ("vfh_iter", "vfh_iter"),
        ("ps", "ps"),
        ("epsilon", "epsilon"),
        ("node_limit", "node_limit"),
        ("time_limit", "time_limit"),
    ):
        value = getattr(args, flag)
        if value is not None:
            updates[name] = value
    if args.prefix_x:
        updates["prefix"] = True
    if args.snap_top:
        updates["top_rule"] = "snap"
    return replace(cfg, **updates) if updates else cfg


def _sg_config(args, lr_aim=None) -> SgConfig:
    kwargs = {}
    if args.sg_iter is not None:
        kwargs["max_iter"] = args.sg_iter
    if args.beta0 is not None:
        kwargs["beta0"] = args.beta0
    if args.stall_k is not None:
        kwargs["stall_window"] = args.stall_k
    if args.beta_dec is not None:
        kwargs["beta_decrement"] = args.beta_dec
    if lr_aim is not None:
        kwargs["lr_aim"] = lr_aim
    return SgConfig(**kwargs)


def _da_config(args) -> DaConfig:
    return DaConfig(
        epsilon=args.epsilon,
        max_iter=args.da_iter,
        prefix=args.prefix_x,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
        top_rule="snap" if args.snap_top else "ceiling",
    )


def _effective_config(args, algorithm: str) -> dict:
    keys = (
        "preset sg_iter da_iter vfh_iter ps epsilon beta0 stall_k beta_dec "
        "node_limit time_limit seed prefix_x snap_top"
    ).split()
    payload = {k: getattr(args, k, None) for k in keys}
    payload["algorithm"] = algorithm
    return payload


def _run_algorithm(inst: Instance, algorithm: str, args) -> tuple:
    t0 = time.perf_counter()
    name = inst.name or "instance"
    ub = lb = opt = None
    y_count = iterations = best_iteration = None
    status = "ok"
    solution = None
    stage_time = None

    if algorithm == "hc" or algorithm == "hs":
        run = heuristic_hc if algorithm == "hc" else heuristic_hs
        sol, trace = run(inst)
        solution, ub = sol, sol.objective
        y_count, iterations = len(sol.open_facilities), len(trace)
    elif algorithm == "sg":
        res = subgradient_method(inst, _sg_config(args))
        lb, iterations, best_iteration = res.best_value, res.iterations, res.best_iteration
        status = res.status
    elif algorithm == "da":
        res = dual_ascent(inst, np.zeros(inst.m), _da_config(args))
        lb, iterations, status = res.best_value, res.iterations, res.status
        if res.last is not None:
            sol = feasible_solution_from(res.last, inst)
            if sol is not None:
                solution, ub = sol, sol.objective
                y_count = len(sol.open_facilities)
    elif algorithm == "ada":
        res = ada(inst, _ada_config(args, inst))
        solution, ub, lb = res.best_solution, res.best_ub, res.best_lb
        y_count = len(res.best_solution.open_facilities)
        iterations = res.sg.iterations + len(res.da_trace)
        status = res.da_status
        stage_time = res.timings.get("da", 0.0) + res.timings.get("vfh", 0.0)
    elif algorithm in ("exact", "brute"):
        spec = ProblemSpec.splpo(inst)
        if algorithm == "exact":
            res = branch_and_bound(spec, node_limit=args.node_limit, time_limit=args.time_limit)
        else:
            res = brute_force(spec)
        solution, ub, lb, status = res.solution, res.value, res.lower_bound, res.status
        opt = res.value if res.status == "optimal" else None
        y_count = len(res.solution.open_facilities) if res.solution else None
        iterations = res.nodes
    else:
        raise CliError(f"unknown algorithm {algorithm!r}")

    gap_abs, gap_pct = gap_fields(ub, opt)
    total = time.perf_counter() - t0
    row = ReportRow(
        prob=name,
        algorithm=algorithm,
        status=str(status),
        best_ub=ub,
        lower_bound=lb,
        opt=opt,
        gap_abs=gap_abs,
        gap_pct=gap_pct,
        y_count=y_count,
        iterations=iterations,
        best_iteration=best_iteration,
        time_s=round(total if stage_time is None else stage_time, 3),
        total_time_s=round(total, 3),
        seed=args.seed,
        config_hash=config_hash(_effective_config(args, algorithm)),
    )
    return row, solution


def cmd_generate(args) -> int:
    if args.m < 1 or args.n < 1:
        raise CliError("m and n must be at least 1")
    if args.count < 1:
        raise CliError("count must be at least 1")
    cfg = GeneratorConfig(mode=args.mode, scale=args.scale)
    out_dir = args.out_dir
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out_dir}: {exc}") from exc
    base_seed = args.seed if args.seed is not None else 0
    for k in range(1, args.count + 1):
        name = f"{args.tag}{args.m}_{args.n}_{k}"
        inst = generate_instance(args.m, args.n, base_seed + k - 1, cfg, name=name)
        path = out_dir / f"{name}.splpo"
        path.write_text(write_instance(inst))
        print(path)
    return EXIT_OK


def _load_instance(path: Path) -> Instance:
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    return parse_instance(text, name=path.stem)


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    try:
        row, solution = _run_algorithm(inst, args.algorithm, args)
    except InfeasibleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    if args.solution_out:
        if solution is None:
            doc = {
                "open": None,
                "assign": None,
                "objective": None,
                "provenance": {"algorithm": args.algorithm, "lower_bound": row.lower_bound},
            }
            args.solution_out.write_text(json.dumps(doc, indent=2, sort_keys=True))
        else:
            args.solution_out.write_text(solution_to_json(solution))
    if args.report_out:
        _append_report(args.report_out, [row])

    summary = {k: v for k, v in (("bestUB", row.best_ub), ("LB", row.lower_bound)) if v is not None}
    print(f"{row.prob} {args.algorithm}: {summary} status={row.status} t={row.time_s}s")
    return EXIT_INCOMPLETE if row.status == "incomplete" else EXIT_OK


def _append_report(path: Path, rows) -> None:
    if path.exists():
        report = RunReport.from_csv(path.read_text())
        report.rows.extend(rows)
    else:
        report = RunReport(rows=list(rows))
    path.write_text(report.to_csv())


def cmd_bench(args) -> int:
    paths = []
    for pattern in args.instances:
        hits = sorted(glob.glob(pattern))
        if not hits and Path(pattern).exists():
            hits = [pattern]
        paths.extend(hits)
    paths = sorted(dict.fromkeys(paths))
    if not paths:
        raise CliError("no instances match the given patterns")
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise CliError(f"unknown algorithms: {', '.join(unknown)}")

    optima = {}
    if args.optima:
        optima = json.loads(args.optima.read_text())

    rows = []
    for path in paths:
        inst = _load_instance(Path(path))
        opt = optima.get(inst.name)
        per_instance = []
        for algorithm in algorithms:
            try:
                row, _ = _run_algorithm(inst, algorithm, args)
            except (InfeasibleError, ValueError) as exc:
                per_instance.append(
                    ReportRow(prob=inst.name, algorithm=algorithm, status=f"error: {exc}")
                )
                continue
            if row.opt is not None and opt is None:
                opt = row.opt
            per_instance.append(row)
        if opt is not None:
            fixed = []
            for row in per_instance:
                gap_abs, gap_pct = gap_fields(row.best_ub, opt)
                fixed.append(replace(row, opt=opt, gap_abs=gap_abs, gap_pct=gap_pct))
            per_instance = fixed
        rows.extend(per_instance)

    report = RunReport(rows=rows)
    payload = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        args.out.write_text(payload)
        print(args.out)
    else:
        print(payload, end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "bench":
            return cmd_bench(args)
        raise CliError(f"unknown command {args.command!r}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # malformed inputs and the like
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
