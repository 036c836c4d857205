#!/usr/bin/env python3
"""
Performance benchmark for mcs-alloc solvers.

Times route costing, task-set enumeration and the allocation solvers on generated
instances of experiment size.
"""

import time
import statistics

import numpy as np

from mcs_alloc.fpmt import SolverSettings, enumerate_full, enumerate_pruned, solve_mt_grdpt, solve_mt_mcmf
from mcs_alloc.geo import Location, build_distance_matrix
from mcs_alloc.mpft import compute_bounds, solve_c_ilp, solve_w_grd, solve_w_ilp
from mcs_alloc.scenario import ProblemMode, ScenarioConfig, generate_fpmt, generate_mpft
from mcs_alloc.tsp import RouteProblem, TspSolver, solve_route


def benchmark(func, iterations=1000):
    """Run a function multiple times and return timing stats."""
    times = []
    for _ in range(iterations):
        start = time.perf_counter()
        func()
        end = time.perf_counter()
        times.append(end - start)

    return {
        "mean": statistics.mean(times) * 1000,  # Convert to ms
        "median": statistics.median(times) * 1000,
        "stdev": statistics.stdev(times) * 1000 if len(times) > 1 else 0,
        "min": min(times) * 1000,
        "max": max(times) * 1000,
    }


def report(label, stats):
    print(f"\n{label}:")
    print(f"  Mean: {stats['mean']:.4f} ms")
    print(f"  Median: {stats['median']:.4f} ms")
    print(f"  Min/Max: {stats['min']:.4f} / {stats['max']:.4f} ms")


def test_route_solvers():
    """Held-Karp and Christofides on random planar points."""
    rng = np.random.default_rng(0)
    points = [Location.planar(float(x), float(y)) for x, y in rng.uniform(0, 3000, size=(30, 2))]
    small = RouteProblem(build_distance_matrix(points[:12]).entries)
    large = RouteProblem(build_distance_matrix(points).entries)

    print("\n" + "="*60)
    print("ROUTE SOLVER BENCHMARK")
    print("="*60)

    report("Held-Karp, 12 nodes (20 iterations)",
           benchmark(lambda: solve_route(small, TspSolver.EXACT), iterations=20))
    report("Christofides, 30 nodes (100 iterations)",
           benchmark(lambda: solve_route(large, TspSolver.CHRISTOFIDES), iterations=100))


def test_enumeration():
    """Full and pruned task-set families at the k-sweep size (m=10, n=15, q=5)."""
    instance, _ = generate_fpmt(ScenarioConfig(seed=0, m=10, n=15, q=5))
    settings = SolverSettings()

    print("\n" + "="*60)
    print("TASK-SET ENUMERATION BENCHMARK")
    print("="*60)

    report("enumerate_full, 30030 routes (5 iterations)",
           benchmark(lambda: enumerate_full(instance, settings), iterations=5))
    report("enumerate_pruned k=10 (5 iterations)",
           benchmark(lambda: enumerate_pruned(instance, 10, settings), iterations=5))


def test_fpmt_solvers():
    """MT-MCMF on a precomputed family against the greedy baseline."""
    instance, _ = generate_fpmt(ScenarioConfig(seed=1, m=10, n=15, q=5))
    family = enumerate_full(instance)

    print("\n" + "="*60)
    print("FPMT SOLVER BENCHMARK")
    print("="*60)

    report("MT-MCMF (20 iterations)", benchmark(lambda: solve_mt_mcmf(instance, family), iterations=20))
    report("MT-GrdPT (200 iterations)", benchmark(lambda: solve_mt_grdpt(instance), iterations=200))


def test_mpft_solvers():
    """Bounds and the exact/greedy allocation solvers on the default city instance."""
    instance, _ = generate_mpft(ScenarioConfig(seed=2, mode=ProblemMode.MPFT))
    bounds = compute_bounds(instance)
    budget = (bounds.c_min + bounds.c_max) / 2

    print("\n" + "="*60)
    print("MPFT SOLVER BENCHMARK")
    print("="*60)

    report("compute_bounds (5 iterations)", benchmark(lambda: compute_bounds(instance), iterations=5))
    report("W-ILP 0.5/0.5 (20 iterations)",
           benchmark(lambda: solve_w_ilp(instance, 0.5, 0.5, bounds), iterations=20))
    report("W-Grd 0.5/0.5 (200 iterations)",
           benchmark(lambda: solve_w_grd(instance, 0.5, 0.5, bounds), iterations=200))
    report("C-ILP mid budget (3 iterations)",
           benchmark(lambda: solve_c_ilp(instance, budget, bounds), iterations=3))


def main():
    """Run all benchmarks."""
    print("\n" + "#"*60)
    print("# MCS-ALLOC PERFORMANCE BENCHMARK")
    print("# Solver runtimes at experiment size")
    print("#"*60)

    test_route_solvers()
    test_enumeration()
    test_fpmt_solvers()
    test_mpft_solvers()

    print("\n" + "="*60)
    print("BENCHMARK COMPLETE")
    print("="*60 + "\n")


if __name__ == "__main__":
    main()
