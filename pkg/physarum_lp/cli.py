"""Batch front end: solve, verify-bounds, md-compare, oracle and generate.

Exit codes: 0 success, 1 failed check or other error, 2 step-size collapse,
3 unusable instance or input.
"""
import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional, Set

import numpy as np
from tqdm import tqdm

from . import config
from .diagnostics import bound_time_kl, bound_time_mu, cost, time_to_accuracy
from .errors import InfeasibleStart, InstanceError, PhysarumError, StepCollapse, TooLarge
from .integrator import integrate
from .lp_instance import (
    load_any,
    random_instance,
    random_network,
    random_simplex_instance,
    save,
    save_network,
    uniform_start,
    validate,
)
from .mirror_descent import compare_trajectories
from .models import BoundCheck, IntegrationConfig, LpInstance, OracleSolution, PhysarumState, RunSummary, TrajectoryTrace
from .oracle import solve_exact

logger = logging.getLogger(__name__)

MD_TOLERANCE = 1e-5
BOUND_SLACK = 1e-6


def exit_code(error: BaseException) -> int:
    if isinstance(error, InstanceError):
        return 3
    if isinstance(error, StepCollapse):
        return 2
    return 1


def read_instance(path: str) -> LpInstance:
    instance = load_any(Path(path).read_bytes())
    if instance.name is None:
        instance = instance.model_copy(update={"name": Path(path).stem})
    validate(instance)
    return instance


def parse_x0(value: Optional[str], instance: LpInstance) -> np.ndarray:
    """`uniform` (the default) or a comma-separated list of positive numbers."""
    if value is None or value == "uniform":
        return uniform_start(instance)
    try:
        x0 = np.array([float(item) for item in value.split(",")])
    except ValueError as e:
        raise InstanceError(f"--x0 must be 'uniform' or a comma-separated list of numbers: {value!r}") from e
    if x0.shape != (instance.cols,):
        raise InstanceError(f"--x0 has {x0.size} entries, the instance has {instance.cols} variables")
    if not np.all(x0 > 0):
        raise InstanceError(f"--x0 must be strictly positive, got {value!r}")
    return x0


def integration_config(args: argparse.Namespace, **overrides) -> IntegrationConfig:
    values = dict(
        method=args.method,
        initial_step=args.step,
        max_time=args.max_time,
        trace_interval=args.trace_interval,
    )
    values.update(overrides)
    return IntegrationConfig.from_env(**values)


def oracle_or_none(instance: LpInstance) -> Optional[OracleSolution]:
    try:
        return solve_exact(instance)
    except TooLarge as e:
        logger.warning(f"No exact optimum for {instance.name}: {e}")
        return None


def write_trace_csv(trace: TrajectoryTrace, path: Path) -> None:
    cols = trace.records[0].x.size
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", *[f"x_{j}" for j in range(cols)], "cost", "energy", "infeasibility", "kl", "potential"])
        for record in trace.records:
            writer.writerow([
                repr(record.t),
                *[repr(float(v)) for v in record.x],
                repr(record.cost),
                repr(record.energy),
                repr(record.infeasibility),
                "" if record.kl is None else repr(record.kl),
                "" if record.potential is None else repr(record.potential),
            ])


def summarize(instance: LpInstance, x0: np.ndarray, trace: TrajectoryTrace,
              solution: Optional[OracleSolution], eps: float) -> RunSummary:
    final = trace.final
    opt = None
    relative_gap = None
    bounds = {}
    achieved = None
    if solution is not None:
        opt = solution.opt
        relative_gap = final.cost / opt - 1.0
        achieved = time_to_accuracy(trace, solution, eps)
        try:
            bounds = dict(
                bound_time_kl=bound_time_kl(instance, x0, solution, eps),
                bound_time_mu=bound_time_mu(instance, x0, solution, eps),
            )
        except InfeasibleStart:
            logger.info(f"{instance.name}: infeasible start, convergence-time bounds not reported")
    return RunSummary(
        instance_name=instance.name or "instance",
        final_t=final.t,
        final_cost=final.cost,
        opt=opt,
        relative_gap=relative_gap,
        eps=eps,
        achieved_time=achieved,
        converged=achieved is not None,
        integrator_stats=trace.stats,
        **bounds,
    )


def unique_stem(name: str, used: Set[str]) -> str:
    """`name`, or `name_2`, `name_3`, ... when an earlier output of this run already took it."""
    stem, k = name, 1
    while stem in used:
        k += 1
        stem = f"{name}_{k}"
    used.add(stem)
    if stem != name:
        logger.warning(f"Output name {name} already taken, writing {stem} instead")
    return stem


def solve_one(instance: LpInstance, stem: str, args: argparse.Namespace) -> RunSummary:
    x0 = parse_x0(args.x0, instance)
    solution = oracle_or_none(instance)
    settings = integration_config(args)
    logger.info(f"Solving {instance.name} ({instance.rows}x{instance.cols}) with {settings.method} up to t={settings.max_time:g}")

    trace = integrate(instance, PhysarumState(x=x0), settings, oracle=solution)
    summary = summarize(instance, x0, trace, solution, args.eps)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out_dir / f"{stem}_trace.csv")
    (out_dir / f"{stem}_summary.json").write_text(summary.model_dump_json(indent=2))
    gap = "unknown" if summary.relative_gap is None else f"{summary.relative_gap:.3e}"
    logger.info(f"{stem}: cost {summary.final_cost:.9g}, gap {gap}")
    return summary


def report_failure(path: str, e: PhysarumError) -> int:
    logger.error(f"{path}: {type(e).__name__}: {e}")
    print(f"{path}: {type(e).__name__}: {e}", file=sys.stderr)
    return exit_code(e)


def cmd_solve(args: argparse.Namespace) -> int:
    code = 0
    used: Set[str] = set()
    jobs = []
    for path in args.instance:
        try:
            instance = read_instance(path)
        except PhysarumError as e:
            code = max(code, report_failure(path, e))
            continue
        jobs.append((path, instance, unique_stem(instance.name, used)))

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as executor:
        futures = {executor.submit(solve_one, instance, stem, args): path for path, instance, stem in jobs}
        for future in tqdm(as_completed(futures), total=len(futures), desc="Solving instances",
                           disable=len(futures) < 2):
            try:
                summary = future.result()
            except PhysarumError as e:
                code = max(code, report_failure(futures[future], e))
                continue
            print(summary.model_dump_json())
    return code


def check_bound(instance: LpInstance, x0: np.ndarray, solution: OracleSolution, eps: float,
                args: argparse.Namespace) -> BoundCheck:
    """Integrate up to the KL bound time and check cost ≤ (1+ε)·opt there."""
    bound = bound_time_kl(instance, x0, solution, eps)
    mu_bound = bound_time_mu(instance, x0, solution, eps)
    if bound > 0:
        trace = integrate(instance, PhysarumState(x=x0), integration_config(args, max_time=bound), oracle=solution)
        final_cost = trace.final.cost
        achieved = time_to_accuracy(trace, solution, eps)
    else:
        final_cost = cost(instance, x0)
        achieved = 0.0
    passed = final_cost <= (1.0 + eps) * solution.opt + BOUND_SLACK * solution.opt
    return BoundCheck(
        eps=eps,
        bound_time_kl=bound,
        bound_time_mu=mu_bound,
        final_cost=final_cost,
        opt=solution.opt,
        achieved_time=achieved,
        achieved_over_bound=achieved / bound if achieved is not None and bound > 0 else None,
        passed=passed,
    )


def cmd_verify_bounds(args: argparse.Namespace) -> int:
    code = 0
    used: Set[str] = set()
    for path in args.instance:
        instance = read_instance(path)
        x0 = parse_x0(args.x0, instance)
        solution = solve_exact(instance)
        checks: List[BoundCheck] = []
        for eps in tqdm(args.eps, desc=f"Bounds for {instance.name}", disable=len(args.eps) < 2):
            check = check_bound(instance, x0, solution, eps, args)
            logger.info(
                f"{instance.name} eps={eps:g}: bound {check.bound_time_kl:.6g}, achieved {check.achieved_time}, "
                f"{'passed' if check.passed else 'FAILED'}"
            )
            checks.append(check)
            if not check.passed:
                code = 1
        report = json.dumps([check.model_dump() for check in checks], indent=2)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{unique_stem(instance.name, used)}_bounds.json").write_text(report)
        print(report)
    return code


def cmd_md_compare(args: argparse.Namespace) -> int:
    code = 0
    used: Set[str] = set()
    settings = IntegrationConfig(
        method=args.method or "rk4",
        adaptive=False,
        initial_step=args.step or 1e-2,
        trace_interval=args.trace_interval or 0.1,
    )
    out_dir = Path(args.out_dir)
    for path in args.instance:
        instance = read_instance(path)
        x0 = parse_x0(args.x0, instance)
        comparison = compare_trajectories(instance, x0, args.horizon, settings)
        report = comparison.model_dump_json(indent=2)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{unique_stem(instance.name, used)}_md_compare.json").write_text(report)
        print(report)
        if comparison.max_deviation > MD_TOLERANCE:
            logger.error(f"{instance.name}: trajectories deviate by {comparison.max_deviation:.3e} > {MD_TOLERANCE:g}")
            code = 1
    return code


def cmd_oracle(args: argparse.Namespace) -> int:
    for path in args.instance:
        print(solve_exact(read_instance(path)).model_dump_json(indent=2))
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    starts = {}
    for k in tqdm(range(args.count), desc=f"Generating {args.kind} instances"):
        name = f"{args.kind}_{k:03d}"
        if args.kind == "lp":
            instance, start = random_instance(rng, args.rows, args.cols, name=name)
            data = save(instance)
        elif args.kind == "simplex":
            instance, start = random_simplex_instance(rng, args.cols, name=name)
            data = save(instance)
        else:
            spec, start = random_network(rng, args.rows, args.cols, name=name)
            data = save_network(spec)
        (out_dir / f"{name}.json").write_bytes(data)
        starts[name] = start.tolist()
    (out_dir / "feasible_starts.json").write_text(json.dumps(starts, indent=2))
    logger.info(f"Wrote {args.count} {args.kind} instances to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=config.LOG_LEVEL, help="Logging level (default: %(default)s)")
    common.add_argument("--out-dir", default=config.OUT_DIR, help="Directory for traces and reports")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--instance", nargs="+", required=True, help="Instance or network JSON file(s)")
    run.add_argument("--x0", default="uniform", help="'uniform' or a comma-separated starting point")
    run.add_argument("--method", choices=["euler", "rk4"], default=None)
    run.add_argument("--step", type=float, default=None, help="Initial (or fixed) step size")
    run.add_argument("--max-time", type=float, default=None)
    run.add_argument("--trace-interval", type=float, default=None)

    parser = argparse.ArgumentParser(prog="physarum-lp", description="Physarum dynamics for linear programs")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[common, run], help="Integrate and write trace and summary")
    solve.add_argument("--eps", type=float, default=config.EPS)
    solve.add_argument("--jobs", type=int, default=config.JOBS, help="Instances solved in parallel")
    solve.set_defaults(handler=cmd_solve)

    verify = commands.add_parser("verify-bounds", parents=[common, run], help="Check cost ≤ (1+ε)opt at the bound time")
    verify.add_argument("--eps", type=float, nargs="+", default=[config.EPS])
    verify.set_defaults(handler=cmd_verify_bounds)

    md = commands.add_parser("md-compare", parents=[common, run], help="Physarum vs Mirror Descent on a simplex instance")
    md.add_argument("--horizon", type=float, default=20.0)
    md.set_defaults(handler=cmd_md_compare)

    exact = commands.add_parser("oracle", parents=[common], help="Exact optimum by vertex enumeration")
    exact.add_argument("--instance", nargs="+", required=True)
    exact.set_defaults(handler=cmd_oracle)

    generate = commands.add_parser("generate", parents=[common], help="Write random instances")
    generate.add_argument("--kind", choices=["lp", "simplex", "network"], default="lp")
    generate.add_argument("--rows", type=int, default=3, help="Rows (lp) or nodes (network)")
    generate.add_argument("--cols", type=int, default=6, help="Columns (lp, simplex) or extra edges (network)")
    generate.add_argument("--count", type=int, default=10)
    generate.add_argument("--seed", type=int, default=0)
    generate.set_defaults(handler=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s'
    )
    try:
        return args.handler(args)
    except PhysarumError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return exit_code(e)
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
