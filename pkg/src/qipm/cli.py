"""Command-line entry point: ``qipm solve`` and ``qipm sweep``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .central_path import RestorationError
from .instances import default_rows, random_feasible_instance
from .lp_model import ProblemError, load_problem
from .loop import SolverConfig, StepLengthError, run, write_trace_csv
from .solvers import BackendError, BackendId
from .terminate import INFEASIBLE_STATUSES, Status

EXIT_OPTIMAL = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NOT_SOLVED = 3

DEFAULT_EPSILON = {BackendId.EXACT: 1e-8, BackendId.CG: 1e-8, BackendId.QLSA: 0.05}

AGGREGATE_COLUMNS = ("n", "m", "backend", "median_iterations", "median_cost", "median_kappa")
RUN_COLUMNS = ("n", "m", "instance", "backend", "status", "iterations", "cost", "max_kappa", "objective")


class _Parser(argparse.ArgumentParser):
    # Usage errors share exit code 1 with bad input; 2 means infeasible.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return value


def _nonnegative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return value


def _int_list(text):
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"sizes must be positive integers: {text!r}")
    return values


def _backend_list(text):
    try:
        return [BackendId(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown backend in {text!r}; choose from exact, cg, qlsa") from None


def _add_solver_flags(parser):
    parser.add_argument("--epsilon", type=_positive_float, help="per-solve precision and default gap tolerance")
    parser.add_argument("--eps1", type=_positive_float, help="scaled duality gap tolerance")
    parser.add_argument("--eps2", type=_positive_float, help="scaled infeasibility tolerance")
    parser.add_argument("--eps3", type=_positive_float, default=1e-8, help="tau collapse threshold")
    parser.add_argument("--seed", type=_nonnegative_int, default=0)
    parser.add_argument("--max-iterations", type=_nonnegative_int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qipm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve one LP from a JSON file")
    solve.add_argument("--input", required=True, type=Path)
    solve.add_argument("--backend", choices=[b.value for b in BackendId], default=BackendId.EXACT.value)
    _add_solver_flags(solve)
    solve.add_argument("--trace", type=Path, help="write the per-step trace CSV here")
    solve.add_argument("--output", type=Path, help="write the solution JSON here (default: stdout)")

    sweep = sub.add_parser("sweep", help="solve random feasible instances over several sizes")
    sweep.add_argument("--sizes", type=_int_list, required=True)
    sweep.add_argument("--count", type=_positive_int, default=3)
    sweep.add_argument("--workers", type=_positive_int, default=1)
    sweep.add_argument("--backend", type=_backend_list, default=[BackendId.EXACT])
    _add_solver_flags(sweep)
    sweep.add_argument("--output", type=Path, required=True, help="aggregate CSV")
    sweep.add_argument("--runs-output", type=Path, help="per-instance CSV")
    sweep.add_argument("--trace-dir", type=Path, help="directory for per-instance trace CSVs")
    return parser


def _config(args, backend: BackendId, seed: int) -> SolverConfig:
    epsilon = args.epsilon if args.epsilon is not None else DEFAULT_EPSILON[backend]
    return SolverConfig(backend=backend, epsilon=epsilon, eps1=args.eps1, eps2=args.eps2, eps3=args.eps3,
                        max_iterations=args.max_iterations, seed=seed)


def _exit_code(status: Status) -> int:
    if status is Status.OPTIMAL:
        return EXIT_OPTIMAL
    if status in INFEASIBLE_STATUSES:
        return EXIT_INFEASIBLE
    return EXIT_NOT_SOLVED


def solve_command(args) -> int:
    try:
        problem = load_problem(args.input)
        config = _config(args, BackendId(args.backend), args.seed)
    except (OSError, ProblemError, ValueError) as exc:
        print(f"qipm solve: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = run(problem, config)
    except (BackendError, RestorationError, StepLengthError) as exc:
        if args.trace is not None:
            write_trace_csv(getattr(exc, "trace", []), args.trace)
        print(f"qipm solve: solver failed: {exc}", file=sys.stderr)
        return EXIT_NOT_SOLVED
    if args.trace is not None:
        write_trace_csv(report.trace, args.trace)
    text = json.dumps(report.to_json(trace_path=args.trace), indent=2) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text)
    return _exit_code(report.status)


def _sweep_task(task):
    n, index, backend, config, base_seed, trace_dir = task
    m = default_rows(n)
    instance_seed = np.random.SeedSequence(entropy=base_seed, spawn_key=(n, index))
    problem = random_feasible_instance(n, m, np.random.default_rng(instance_seed))
    row = {"n": n, "m": m, "instance": index, "backend": backend.value}
    try:
        report = run(problem, config)
    except (BackendError, RestorationError, StepLengthError) as exc:
        trace = getattr(exc, "trace", [])
        status, objective = "Failed", float("nan")
    else:
        trace = report.trace
        status, objective = report.status.value, report.solution.objective_primal
    if trace_dir is not None:
        write_trace_csv(trace, Path(trace_dir) / f"n{n}_i{index}_{backend.value}.csv")
    kappas = [r.kappa for r in trace]
    row.update(
        status=status,
        iterations=len(trace),
        cost=float(sum(r.cost_units for r in trace)),
        max_kappa=float(max(kappas)) if kappas else float("nan"),
        objective=objective,
    )
    return row


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def sweep_command(args) -> int:
    try:
        tasks = []
        for n in args.sizes:
            for index in range(args.count):
                for backend in args.backend:
                    # Distinct, reproducible solver seed per instance.
                    solver_seed = int(np.random.SeedSequence(entropy=args.seed, spawn_key=(n, index, 1)).generate_state(1)[0])
                    tasks.append((n, index, backend, _config(args, backend, solver_seed), args.seed,
                                  None if args.trace_dir is None else str(args.trace_dir)))
    except ValueError as exc:
        print(f"qipm sweep: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.trace_dir is not None:
        args.trace_dir.mkdir(parents=True, exist_ok=True)

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(task) for task in tasks]
    backend_order = {b: i for i, b in enumerate(b.value for b in args.backend)}
    rows.sort(key=lambda r: (r["n"], r["instance"], backend_order[r["backend"]]))

    if args.runs_output is not None:
        with open(args.runs_output, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RUN_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in RUN_COLUMNS])

    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for n in args.sizes:
            for backend in args.backend:
                group = [r for r in rows if r["n"] == n and r["backend"] == backend.value]
                writer.writerow([
                    n, default_rows(n), backend.value,
                    _fmt(float(np.median([r["iterations"] for r in group]))),
                    _fmt(float(np.median([r["cost"] for r in group]))),
                    _fmt(float(np.median([r["max_kappa"] for r in group]))),
                ])
    return EXIT_OPTIMAL if all(r["status"] == Status.OPTIMAL.value for r in rows) else EXIT_NOT_SOLVED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return solve_command(args)
    return sweep_command(args)


if __name__ == "__main__":
    sys.exit(main())
