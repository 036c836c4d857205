#!/usr/bin/env python3
"""
mcs-alloc CLI - multi-task allocation for mobile crowd sensing.

Usage:
    mcs-alloc generate --mode fpmt --seed 7 --m 10 --n 20 --q 5 -o inst.yaml
    mcs-alloc solve inst.yaml --solver mtp-mcmf --k 12
    mcs-alloc sweep --preset k --seeds 0..19
    mcs-alloc sweep --preset appropriate_k_q --seeds 0..19
    mcs-alloc bounds mpft.yaml
    mcs-alloc validate inst.yaml
"""

import argparse
import json
import logging
import sys

from . import __version__
from .errors import AllocationError, ParameterError
from .experiment import (
    SOLVERS,
    SWEEP_HEADER,
    SolverParams,
    SweepSpec,
    aggregate_rows,
    list_presets,
    load_preset,
    parse_seeds,
    report_csv,
    run_solver,
    run_sweep,
    write_csv,
)
from .fpmt import SolverSettings
from .mpft import MpftInstance, compute_bounds
from .scenario import (
    ProblemMode,
    ScenarioConfig,
    TaskDistribution,
    generate_instance,
    load_instance,
    load_towers_csv,
    save_instance,
    validate_instance,
)
from .tsp import TspSolver

logger = logging.getLogger("mcs_alloc")


def cmd_generate(args):
    """Generate a seeded instance file"""
    base = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    config = base.with_overrides(
        mode=ProblemMode(args.mode),
        seed=args.seed,
        m=args.m,
        n=args.n,
        q=args.q,
        p=args.p,
        area_count=args.area_count,
        distribution=TaskDistribution(args.distribution) if args.distribution else None,
    )
    towers = load_towers_csv(args.towers) if args.towers else None
    instance, resolved = generate_instance(config, towers)
    digest = save_instance(instance, args.out, resolved)
    print(f"{args.out} {digest}")


def _settings(args) -> SolverSettings:
    return SolverSettings(
        enumeration_budget=args.enumeration_budget,
        tsp_solver=TspSolver(args.tsp),
        workers=args.workers,
    )


def cmd_solve(args):
    """Run one solver and print its report"""
    instance = load_instance(args.instance)
    params = SolverParams(
        k=args.k, k1=args.k1, k2=args.k2, budget=args.budget, speed=args.speed, tolerance=args.tolerance
    )
    report = run_solver(instance, args.solver, params, _settings(args))
    if args.format == "csv":
        sys.stdout.write(report_csv(report))
    else:
        print(report.to_json(include_runtime=not args.omit_runtime))


def cmd_sweep(args):
    """Run a parameter sweep and write CSV rows"""
    if args.list_presets:
        for name in list_presets():
            spec = load_preset(name)
            print(f"  {name}: {spec.description or spec.axis.value}")
        return
    if bool(args.preset) == bool(args.spec):
        raise ParameterError("give exactly one of --preset or --spec")
    spec = load_preset(args.preset) if args.preset else SweepSpec.from_file(args.spec)
    if args.seeds:
        spec.seeds = parse_seeds(args.seeds)
    instance = load_instance(args.instance) if args.instance else None

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    rows: list[dict] = []

    def collected():
        for row in run_sweep(spec, instance, _settings(args), args.workers):
            rows.append(row)
            yield row

    try:
        write_csv(collected(), SWEEP_HEADER, out)
        if len(spec.seeds) > 1 and instance is None and not args.no_aggregate:
            write_csv(aggregate_rows(rows), SWEEP_HEADER, out, write_header=False)
    finally:
        if out is not sys.stdout:
            out.close()
    logger.info("sweep %s: %d rows", spec.name, len(rows))


def cmd_bounds(args):
    """Print the payoff-table objective bounds of an MPFT instance"""
    instance = load_instance(args.instance)
    if not isinstance(instance, MpftInstance):
        raise ParameterError("bounds apply to mpft instances only")
    print(json.dumps(compute_bounds(instance).to_dict(), indent=2))


def cmd_validate(args):
    """Check instance invariants"""
    instance = load_instance(args.instance)
    problems = validate_instance(instance)
    if problems:
        for p in problems:
            print(f"  ✗ {p}")
        raise ParameterError(f"{args.instance}: {len(problems)} problem(s)")
    print(f"  ✓ {args.instance} is valid")


def cmd_version(args):
    """Show version"""
    print(f"mcs-alloc v{__version__}")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tsp", choices=[s.value for s in TspSolver], default="auto",
                   help="Route solver for task-set costing (default: auto)")
    p.add_argument("--enumeration-budget", type=int, default=10**6,
                   help="Maximum number of candidate routes (default: 1000000)")
    p.add_argument("--workers", type=int, help="Worker processes (default: $MCS_ALLOC_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcs-alloc",
        description="Multi-task allocation for mobile crowd sensing (FPMT / MPFT)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  mcs-alloc generate --mode fpmt --seed 7 -o inst.yaml   Generate an instance
  mcs-alloc solve inst.yaml --solver mt-mcmf             Solve it
  mcs-alloc sweep --preset tasks --seeds 0..19           Reproduce a sweep
  mcs-alloc sweep --list-presets                         List sweep presets

Exit codes: 0 ok, 2 usage, 3 input/mode, 4 infeasible, 5 size limit
        """
    )
    parser.add_argument("--version", action="version", version=f"mcs-alloc v{__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for solver detail (stderr)")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # generate
    gen = subparsers.add_parser("generate", help="Generate a seeded instance file")
    gen.add_argument("--mode", required=True, choices=[m.value for m in ProblemMode])
    gen.add_argument("--seed", type=int)
    gen.add_argument("--m", type=int, help="Participants (fpmt)")
    gen.add_argument("--n", type=int, help="Tasks")
    gen.add_argument("--q", type=int, help="Tasks per participant (fpmt; default drawn from 2..7)")
    gen.add_argument("--p", type=int, help="Task capacity (fpmt) or demand (mpft)")
    gen.add_argument("--area-count", type=int, help="Working areas (mpft)")
    gen.add_argument("--distribution", choices=[d.value for d in TaskDistribution])
    gen.add_argument("--config", help="Scenario YAML; flags override its fields")
    gen.add_argument("--towers", help="Tower CSV (id,lat,lon) to place entities on")
    gen.add_argument("-o", "--out", default="instance.yaml", help="Output path (default: instance.yaml)")
    gen.set_defaults(func=cmd_generate)

    # solve
    solve = subparsers.add_parser("solve", help="Run a solver on an instance")
    solve.add_argument("instance", help="Instance file")
    solve.add_argument("--solver", required=True, choices=list(SOLVERS))
    solve.add_argument("--k", type=int, help="Pruning width (mtp-mcmf)")
    solve.add_argument("--k1", type=float, default=0.5, help="Incentive weight (w-ilp, w-grd)")
    solve.add_argument("--k2", type=float, default=0.5, help="Distance weight (w-ilp, w-grd)")
    solve.add_argument("--budget", type=float, help="Incentive budget (c-ilp, c-grd)")
    solve.add_argument("--speed", type=float, default=70.0, help="Walking speed in m/min (default: 70)")
    solve.add_argument("--tolerance", type=float, default=0.01,
                       help="Relative distance tolerance (appropriate-k, default: 0.01)")
    solve.add_argument("--format", choices=["json", "csv"], default="json")
    solve.add_argument("--omit-runtime", action="store_true", help="Leave runtime out of JSON output")
    _add_solver_flags(solve)
    solve.set_defaults(func=cmd_solve)

    # sweep
    sweep = subparsers.add_parser("sweep", help="Sweep a parameter and emit CSV")
    sweep.add_argument("instance", nargs="?", help="Fixed instance (k, weights and budgets axes)")
    sweep.add_argument("--preset", help="Built-in sweep preset")
    sweep.add_argument("--spec", help="Sweep spec YAML")
    sweep.add_argument("--seeds", help="Seed range a..b (inclusive)")
    sweep.add_argument("--out", help="CSV path (default: stdout)")
    sweep.add_argument("--no-aggregate", action="store_true", help="Skip mean/stddev rows")
    sweep.add_argument("--list-presets", action="store_true", help="List presets and exit")
    _add_solver_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)

    # bounds
    bounds = subparsers.add_parser("bounds", help="Print objective bounds of an mpft instance")
    bounds.add_argument("instance")
    bounds.set_defaults(func=cmd_bounds)

    # validate
    validate = subparsers.add_parser("validate", help="Check instance invariants")
    validate.add_argument("instance")
    validate.set_defaults(func=cmd_validate)

    # version
    version = subparsers.add_parser("version", help="Show version")
    version.set_defaults(func=cmd_version)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    if not args.command:
        parser.print_help()
        return 0

    try:
        args.func(args)
    except AllocationError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
