#!/usr/bin/env python3
"""
Tests for the MPFT allocation solvers.

Verifies payoff-table bounds, the exact W-ILP / C-ILP solvers against the enumeration
oracle, the greedy baselines and Pareto sweeps.
"""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

import conftest  # noqa: F401
from mcs_alloc.errors import InfeasibleBudgetError, InfeasibleError, ParameterError, SizeLimitError
from mcs_alloc.geo import Location
from mcs_alloc.mpft import (
    ORACLE_MAX_AREAS,
    ORACLE_MAX_DEMAND,
    ORACLE_MAX_TASKS,
    AllocationMatrix,
    MpftInstance,
    MpftTask,
    ParetoPoint,
    SweepMode,
    WorkingArea,
    budget_grid,
    compute_bounds,
    exact_enum_oracle,
    pareto_filter,
    pareto_sweep,
    scalarized,
    solve_c_grd,
    solve_c_ilp,
    solve_w_grd,
    solve_w_ilp,
    weight_grid,
)

TOL = 1e-9


def explicit_instance(populations, incentives, demands, dist) -> MpftInstance:
    areas = [WorkingArea(f"a{i}", Location.planar(0, 0), pop, c)
             for i, (pop, c) in enumerate(zip(populations, incentives))]
    tasks = [MpftTask(f"t{j}", Location.planar(0, 0), p) for j, p in enumerate(demands)]
    return MpftInstance(tuple(areas), tuple(tasks), tuple(tuple(row) for row in dist))


def random_instance(seed: int, m: int = 3, n: int = 4) -> MpftInstance:
    """Feasible desk-scale instance (demands <= 3, populations <= 5)"""
    rng = np.random.default_rng(seed)
    while True:
        pops = rng.integers(1, 6, size=m)
        demands = rng.integers(1, 4, size=n)
        if pops.sum() >= demands.sum():
            break
    areas = [
        WorkingArea(f"a{i}", Location.planar(float(x), float(y)), int(pop), 100.0 / float(pop * 10))
        for i, ((x, y), pop) in enumerate(zip(rng.uniform(0, 2000, size=(m, 2)), pops))
    ]
    tasks = [
        MpftTask(f"t{j}", Location.planar(float(x), float(y)), int(p))
        for j, ((x, y), p) in enumerate(zip(rng.uniform(0, 2000, size=(n, 2)), demands))
    ]
    return MpftInstance.from_locations(areas, tasks)


def test_bounds_examples():
    """Hand-enumerated payoff table and the forced single-cell case."""
    print("\n[TEST] compute_bounds examples")

    two = explicit_instance([5, 5], [1.0, 10.0], [5], [[100.0], [1.0]])
    b = compute_bounds(two)
    assert (b.c_min, b.c_max, b.d_min, b.d_max) == (5.0, 50.0, 5.0, 500.0)
    assert b.min_incentive_allocation.x == ((5,), (0,))
    assert b.min_distance_allocation.x == ((0,), (5,))

    single = explicit_instance([3], [2.0], [2], [[40.0]])
    b = compute_bounds(single)
    assert b.c_min == b.c_max == 4.0
    assert b.d_min == b.d_max == 80.0

    print("  ✓ Bounds match hand enumeration")


def test_bounds_against_oracle():
    """c_min / d_min are oracle minima; c_max / d_max follow the payoff-table tie-break."""
    print("\n[TEST] compute_bounds vs oracle")

    for seed in range(15):
        instance = random_instance(seed)
        b = compute_bounds(instance)
        oracle = exact_enum_oracle(instance)
        assert math.isclose(b.c_min, oracle.min_incentive(), rel_tol=TOL)
        assert math.isclose(b.d_min, oracle.min_distance(), rel_tol=TOL)
        cheapest = [d for c, d in oracle.objectives() if c <= b.c_min * (1 + TOL)]
        nearest = [c for c, d in oracle.objectives() if d <= b.d_min * (1 + TOL)]
        assert math.isclose(b.d_max, min(cheapest), rel_tol=TOL)
        assert math.isclose(b.c_max, min(nearest), rel_tol=TOL)
        assert b.c_min <= b.c_max and b.d_min <= b.d_max
        b.min_incentive_allocation.check(instance)
        b.min_distance_allocation.check(instance)

    print("  ✓ 15 random payoff tables agree with enumeration")


def test_infeasible_instance():
    """Supply below demand is reported by every solver."""
    print("\n[TEST] infeasible instance")

    short = explicit_instance([1, 1], [1.0, 2.0], [3], [[1.0], [2.0]])
    assert not short.feasible
    for solve in (compute_bounds, lambda i: solve_w_grd(i, 0.5, 0.5), lambda i: solve_c_grd(i, 10.0)):
        try:
            solve(short)
            assert False, "expected InfeasibleError"
        except InfeasibleError:
            pass

    print("  ✓ InfeasibleError raised")


def test_w_ilp_corners_and_exactness():
    """Corner weights hit the payoff table; mixed weights match the oracle minimum."""
    print("\n[TEST] solve_w_ilp")

    for seed in range(15):
        instance = random_instance(100 + seed)
        b = compute_bounds(instance)
        assert solve_w_ilp(instance, 1, 0, b).incentive == b.c_min
        assert solve_w_ilp(instance, 0, 1, b).distance == b.d_min
        oracle = exact_enum_oracle(instance)
        for k1, k2 in weight_grid(5):
            x = solve_w_ilp(instance, k1, k2, b)
            x.check(instance)
            best = oracle.min_scalarized(b, k1, k2)
            assert math.isclose(scalarized(x, b, k1, k2), best, rel_tol=1e-9, abs_tol=1e-9), (seed, k1)

    try:
        solve_w_ilp(random_instance(1), -0.5, 1.5)
        assert False, "expected ParameterError"
    except ParameterError:
        pass

    print("  ✓ Scalarized optimum equals enumeration minimum")


def test_degenerate_spans():
    """A constant objective contributes nothing and the solver still returns the optimum."""
    print("\n[TEST] degenerate bounds")

    flat = explicit_instance([2, 2], [3.0, 3.0], [1, 2], [[10.0, 50.0], [20.0, 5.0]])
    b = compute_bounds(flat)
    assert b.incentive_span == 0
    x = solve_w_ilp(flat, 0.5, 0.5, b)
    assert x.distance == b.d_min == 20.0
    assert scalarized(x, b, 0.5, 0.5) == 0.0

    single = explicit_instance([3], [2.0], [2], [[40.0]])
    x = solve_w_ilp(single, 0.5, 0.5)
    assert x.x == ((2,),)

    print("  ✓ Zero spans handled")


def test_c_ilp():
    """Slack budgets, tight budgets, oracle exactness and budget monotonicity."""
    print("\n[TEST] solve_c_ilp")

    two = explicit_instance([5, 5], [1.0, 10.0], [5], [[100.0], [1.0]])
    assert solve_c_ilp(two, 1000.0).distance == 5.0
    assert solve_c_ilp(two, 5.0).distance == 500.0
    try:
        solve_c_ilp(two, 4.0)
        assert False, "expected InfeasibleBudgetError"
    except InfeasibleBudgetError as e:
        assert "c_min=5" in str(e)

    for seed in range(12):
        instance = random_instance(200 + seed)
        b = compute_bounds(instance)
        oracle = exact_enum_oracle(instance)
        previous = -math.inf
        for budget in budget_grid(b, 5):
            x = solve_c_ilp(instance, budget, b)
            x.check(instance)
            assert x.incentive <= budget * (1 + 1e-9)
            within = oracle.distances[oracle.incentives <= budget * (1 + 1e-9)]
            assert math.isclose(x.distance, float(within.min()), rel_tol=1e-9)
            # budgets descend, so distances may only grow
            assert x.distance >= previous - 1e-9
            previous = x.distance
        assert math.isclose(solve_c_ilp(instance, b.c_min, b).distance, b.d_max, rel_tol=1e-9)

    print("  ✓ Budget-constrained optimum equals enumeration minimum")


def test_greedy_baselines():
    """Exact solvers dominate the greedy baselines."""
    print("\n[TEST] greedy baselines")

    one_area = explicit_instance([6], [2.0], [2, 3], [[10.0, 20.0]])
    assert solve_w_grd(one_area, 0.5, 0.5).x == solve_w_ilp(one_area, 0.5, 0.5).x

    gaps = []
    for seed in range(20):
        instance = random_instance(300 + seed)
        b = compute_bounds(instance)
        exact = solve_w_ilp(instance, 0.5, 0.5, b)
        greedy = solve_w_grd(instance, 0.5, 0.5, b)
        greedy.check(instance)
        assert scalarized(greedy, b, 0.5, 0.5) >= scalarized(exact, b, 0.5, 0.5) - 1e-9
        gaps.append(scalarized(greedy, b, 0.5, 0.5) - scalarized(exact, b, 0.5, 0.5))

        for budget in budget_grid(b, 4):
            c_exact = solve_c_ilp(instance, budget, b)
            c_greedy = solve_c_grd(instance, budget, b)
            c_greedy.check(instance)
            assert c_greedy.incentive <= budget * (1 + 1e-9)
            assert c_greedy.distance >= c_exact.distance - 1e-9

        if b.distance_span > 0:
            relaxed = solve_c_grd(instance, 1e12, b)
            assert relaxed.x == solve_w_grd(instance, 0, 1, b).x

    print(f"  mean W-Grd gap {np.mean(gaps):.4f}")
    print("  ✓ Baselines feasible and dominated")


def test_pareto_sweeps():
    """Corner sweeps, budget monotonicity and non-dominance against the oracle."""
    print("\n[TEST] pareto_sweep")

    two = explicit_instance([5, 5], [1.0, 10.0], [5], [[100.0], [1.0]])
    corners = pareto_sweep(two, SweepMode.WEIGHTS, [(1, 0), (0, 1)])
    assert [(p.incentive, p.distance) for p in corners] == [(5.0, 500.0), (50.0, 5.0)]

    for seed in range(8):
        instance = random_instance(400 + seed)
        b = compute_bounds(instance)
        oracle = exact_enum_oracle(instance)
        front = pareto_sweep(instance, "weights", weight_grid(9), b)
        budget_front = pareto_sweep(instance, SweepMode.BUDGETS, budget_grid(b, 6), b)
        for points in (front, budget_front):
            incentives = [p.incentive for p in points]
            assert incentives == sorted(incentives)
            for p in points:
                for c, d in oracle.objectives():
                    dominated = (c <= p.incentive + 1e-9 and d <= p.distance + 1e-9
                                 and (c < p.incentive - 1e-9 or d < p.distance - 1e-9))
                    assert not dominated, (seed, p.parameter)
            for a, c in zip(points, points[1:]):
                assert c.distance < a.distance

    try:
        pareto_sweep(two, SweepMode.WEIGHTS, [(0.3, 0.3)])
        assert False, "expected ParameterError"
    except ParameterError:
        pass
    try:
        pareto_sweep(two, SweepMode.BUDGETS, [1.0])
        assert False, "expected InfeasibleBudgetError"
    except InfeasibleBudgetError:
        pass

    print("  ✓ Fronts are non-dominated")


def test_pareto_filter_and_grids():
    """Dominated and duplicate points are dropped; grids span their ranges."""
    print("\n[TEST] pareto_filter and grids")

    two = explicit_instance([5, 5], [1.0, 10.0], [5], [[100.0], [1.0]])
    b = compute_bounds(two)
    x = b.min_incentive_allocation
    points = [ParetoPoint(5.0, 500.0, 1.0, x), ParetoPoint(5.0, 500.0, 2.0, x),
              ParetoPoint(6.0, 600.0, 3.0, x), ParetoPoint(50.0, 5.0, 4.0, x)]
    kept = pareto_filter(points)
    assert [(p.incentive, p.distance) for p in kept] == [(5.0, 500.0), (50.0, 5.0)]

    assert weight_grid(9)[0] == (0.0, 1.0) and weight_grid(9)[-1] == (1.0, 0.0)
    grid = budget_grid(b, 6)
    assert len(grid) == 6 and grid[0] == 50.0 and grid[-1] == 5.0

    print("  ✓ Filter and grids correct")


def test_oracle_examples():
    """Forced, split and stars-and-bars counts; admission limits."""
    print("\n[TEST] exact_enum_oracle")

    assert len(exact_enum_oracle(explicit_instance([2], [1.0], [2], [[1.0]]))) == 1

    split = exact_enum_oracle(explicit_instance([1, 1], [1.0, 1.0], [2], [[1.0], [1.0]]))
    assert len(split) == 1 and split[0].x == ((1,), (1,))

    assert len(exact_enum_oracle(explicit_instance([2, 2], [1.0, 1.0], [2], [[1.0], [1.0]]))) == 3

    budgeted = exact_enum_oracle(explicit_instance([5, 5], [1.0, 10.0], [2], [[100.0], [1.0]]), budget=11.0)
    assert sorted(budgeted.objectives()) == [(2.0, 200.0), (11.0, 101.0)]

    big = explicit_instance([1] * 5, [1.0] * 5, [1], [[1.0]] * 5)
    try:
        exact_enum_oracle(big)
        assert False, "expected SizeLimitError"
    except SizeLimitError:
        pass

    print("  ✓ Oracle counts correct")


def test_allocation_check():
    """AllocationMatrix.check rejects capacity and demand violations."""
    print("\n[TEST] AllocationMatrix.check")

    two = explicit_instance([2, 5], [1.0, 10.0], [3], [[100.0], [1.0]])
    AllocationMatrix.from_x(two, [[2], [1]]).check(two)
    for bad in ([[3], [0]], [[1], [1]]):
        try:
            AllocationMatrix.from_x(two, bad).check(two)
            assert False, "expected ValueError"
        except ValueError:
            pass

    print("  ✓ Violations detected")


def test_determinism():
    """Same instance, same allocation."""
    print("\n[TEST] determinism")

    instance = random_instance(500)
    assert solve_c_ilp(instance, compute_bounds(instance).c_max).to_dict() == \
        solve_c_ilp(instance, compute_bounds(instance).c_max).to_dict()
    assert solve_w_ilp(instance, 0.3, 0.7).to_dict() == solve_w_ilp(instance, 0.3, 0.7).to_dict()

    print("  ✓ Repeated runs identical")


def sized_instance(seed: int, m: int, n: int, flat: bool = False) -> MpftInstance:
    """Feasible instance up to the oracle limits; fractional incentives, or one shared incentive"""
    rng = np.random.default_rng(seed)
    demands = rng.integers(1, ORACLE_MAX_DEMAND + 1, size=n)
    pops = rng.integers(1, 6, size=m)
    pops[-1] += max(0, int(demands.sum() - pops.sum()))
    incentives = np.full(m, 2.5) if flat else rng.uniform(0.5, 10.0, size=m)
    areas = [
        WorkingArea(f"a{i}", Location.planar(float(x), float(y)), int(pop), float(c))
        for i, ((x, y), pop, c) in enumerate(zip(rng.uniform(0, 2000, size=(m, 2)), pops, incentives))
    ]
    tasks = [
        MpftTask(f"t{j}", Location.planar(float(x), float(y)), int(p))
        for j, ((x, y), p) in enumerate(zip(rng.uniform(0, 2000, size=(n, 2)), demands))
    ]
    return MpftInstance.from_locations(areas, tasks)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    m=st.integers(1, ORACLE_MAX_AREAS),
    n=st.integers(1, ORACLE_MAX_TASKS),
    flat=st.booleans(),
    k1=st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]),
)
def test_exact_solvers_match_enumeration_property(seed, m, n, flat, k1):
    """W-ILP and C-ILP optima equal the enumeration minima for every size up to the oracle limits"""
    instance = sized_instance(seed, m, n, flat)
    b = compute_bounds(instance)
    oracle = exact_enum_oracle(instance)
    assert math.isclose(b.c_min, oracle.min_incentive(), rel_tol=1e-9)
    assert math.isclose(b.d_min, oracle.min_distance(), rel_tol=1e-9, abs_tol=1e-9)
    if m == 1 or flat:
        # every allocation pays the same incentive
        assert b.incentive_span == 0

    k2 = 1.0 - k1
    x = solve_w_ilp(instance, k1, k2, b)
    x.check(instance)
    best = oracle.min_scalarized(b, k1, k2)
    assert math.isclose(scalarized(x, b, k1, k2), best, rel_tol=1e-6, abs_tol=1e-9)

    for budget in budget_grid(b, 4):
        y = solve_c_ilp(instance, budget, b)
        y.check(instance)
        assert y.incentive <= budget * (1 + 1e-9)
        within = oracle.distances[oracle.incentives <= budget * (1 + 1e-9)]
        assert math.isclose(y.distance, float(within.min()), rel_tol=1e-6, abs_tol=1e-9)


def main():
    """Run all tests."""
    print("\n" + "="*60)
    print("MCS-ALLOC MPFT TEST SUITE")
    print("="*60)

    test_bounds_examples()
    test_bounds_against_oracle()
    test_infeasible_instance()
    test_w_ilp_corners_and_exactness()
    test_degenerate_spans()
    test_c_ilp()
    test_greedy_baselines()
    test_pareto_sweeps()
    test_pareto_filter_and_grids()
    test_oracle_examples()
    test_allocation_check()
    test_determinism()
    test_exact_solvers_match_enumeration_property()

    print("\n" + "="*60)
    print("ALL TESTS PASSED ✓")
    print("="*60 + "\n")


if __name__ == "__main__":
    main()
