#!/usr/bin/env python3
"""
Tests for mcs-alloc route solvers.

Verifies Held-Karp against brute force, the Christofides open path and the
1.5-approximation on closed tours.
"""

import math

import numpy as np

from conftest import random_planar
from mcs_alloc.errors import SizeLimitError
from mcs_alloc.geo import Location, build_distance_matrix
from mcs_alloc.tsp import (
    AUTO_EXACT_NODE_LIMIT,
    EXACT_NODE_LIMIT,
    RouteProblem,
    TspSolver,
    brute_force_open_path,
    christofides_open_path,
    cycle_length,
    exact_open_path,
    path_length,
    solve_route,
)


def planar_matrix(*xy):
    return build_distance_matrix([Location.planar(x, y) for x, y in xy]).entries


UNIT_SQUARE = planar_matrix((0, 0), (1, 0), (1, 1), (0, 1))


def test_exact_small_cases():
    """Two nodes, a single node and a collinear line."""
    print("\n[TEST] exact_open_path small cases")

    two = exact_open_path(RouteProblem(planar_matrix((0, 0), (0, 70)), start=0))
    assert two.order == (0, 1) and two.length == 70.0

    one = exact_open_path(RouteProblem(np.zeros((1, 1))))
    assert one.order == (0,) and one.length == 0.0

    line = exact_open_path(RouteProblem(planar_matrix((0, 0), (20, 0), (10, 0), (30, 0))))
    assert line.order == (0, 2, 1, 3)
    assert line.length == 30.0

    print("  ✓ Forced and collinear routes correct")


def test_exact_matches_brute_force():
    """Held-Karp equals the full permutation minimum on random instances."""
    print("\n[TEST] exact vs brute force")

    rng = np.random.default_rng(5)
    for trial in range(30):
        dist = build_distance_matrix(random_planar(rng, 6)).entries
        start = int(rng.integers(0, 6))
        problem = RouteProblem(dist, start=start)
        exact = exact_open_path(problem)
        brute = brute_force_open_path(problem)
        assert math.isclose(exact.length, brute.length, rel_tol=1e-9), trial
        assert exact.order[0] == start and sorted(exact.order) == list(range(6))
        assert math.isclose(path_length(dist, exact.order), exact.length, rel_tol=1e-9)

    print("  ✓ 30 random 6-node instances agree")


def test_lexicographic_tie_break():
    """Equal-length routes resolve to the lexicographically smallest order."""
    print("\n[TEST] tie-breaking")

    route = exact_open_path(RouteProblem(UNIT_SQUARE, start=0))
    assert route.order == (0, 1, 2, 3)
    assert route.length == 3.0

    print("  ✓ Smallest order chosen among ties")


def test_christofides_examples():
    """Christofides on two nodes, the unit square and closed tours."""
    print("\n[TEST] christofides examples")

    two = RouteProblem(planar_matrix((0, 0), (5, 12)))
    assert christofides_open_path(two) == exact_open_path(two)

    square = RouteProblem(UNIT_SQUARE, start=0)
    assert christofides_open_path(square).length == 3.0
    assert cycle_length(square, TspSolver.CHRISTOFIDES) == 4.0
    assert cycle_length(square, TspSolver.EXACT) == 4.0

    side = 1.0
    triangle = np.array([[0, side, side], [side, 0, side], [side, side, 0]], dtype=float)
    for solver in (TspSolver.EXACT, TspSolver.CHRISTOFIDES):
        assert cycle_length(RouteProblem(triangle), solver) == 3.0

    print("  ✓ Square and triangle tours correct")


def test_christofides_bounds():
    """Exact <= Christofides on open paths; Christofides cycle <= 1.5 x optimal cycle."""
    print("\n[TEST] christofides bounds")

    rng = np.random.default_rng(17)
    for _ in range(100):
        problem = RouteProblem(build_distance_matrix(random_planar(rng, 7)).entries)
        approx = christofides_open_path(problem)
        assert approx.length >= exact_open_path(problem).length - 1e-9
        assert sorted(approx.order) == list(range(7))
        assert math.isclose(path_length(problem.dist, approx.order), approx.length, rel_tol=1e-9)

    for n in (8, 9, 10):
        for _ in range(10):
            problem = RouteProblem(build_distance_matrix(random_planar(rng, n)).entries)
            optimal = cycle_length(problem, TspSolver.EXACT)
            assert cycle_length(problem, TspSolver.CHRISTOFIDES) <= 1.5 * optimal + 1e-9

    print("  ✓ Approximation bounds hold on random metric instances")


def test_duplicate_start():
    """A task on top of the start adds nothing when visited first."""
    print("\n[TEST] degenerate duplicate")

    rng = np.random.default_rng(2)
    points = random_planar(rng, 5)
    base = exact_open_path(RouteProblem(build_distance_matrix(points).entries))
    doubled = exact_open_path(RouteProblem(build_distance_matrix(points + [points[0]]).entries))
    assert math.isclose(base.length, doubled.length, rel_tol=1e-12)
    assert doubled.order[1] == 5

    print("  ✓ Coincident task costs 0")


def test_dispatch_and_limits():
    """AUTO goes exact up to its cutoff, Christofides beyond; the exact solver refuses larger inputs."""
    print("\n[TEST] dispatch and limits")

    rng = np.random.default_rng(23)
    problem = RouteProblem(build_distance_matrix(random_planar(rng, 8)).entries)
    assert solve_route(problem) == exact_open_path(problem)
    assert solve_route(problem, TspSolver.CHRISTOFIDES) == christofides_open_path(problem)

    big = RouteProblem(np.zeros((EXACT_NODE_LIMIT + 1, EXACT_NODE_LIMIT + 1)))
    try:
        exact_open_path(big)
        assert False, "expected SizeLimitError"
    except SizeLimitError:
        pass

    assert AUTO_EXACT_NODE_LIMIT < EXACT_NODE_LIMIT
    wide = RouteProblem(build_distance_matrix(random_planar(rng, AUTO_EXACT_NODE_LIMIT + 1)).entries)
    assert solve_route(wide) == christofides_open_path(wide)
    edge = RouteProblem(wide.dist[:AUTO_EXACT_NODE_LIMIT, :AUTO_EXACT_NODE_LIMIT])
    assert solve_route(edge) == exact_open_path(edge)
    assert solve_route(wide, TspSolver.EXACT) == exact_open_path(wide)

    print("  ✓ Dispatch and admission limit correct")


def main():
    """Run all tests."""
    print("\n" + "="*60)
    print("MCS-ALLOC TSP TEST SUITE")
    print("="*60)

    test_exact_small_cases()
    test_exact_matches_brute_force()
    test_lexicographic_tie_break()
    test_christofides_examples()
    test_christofides_bounds()
    test_duplicate_start()
    test_dispatch_and_limits()

    print("\n" + "="*60)
    print("ALL TESTS PASSED ✓")
    print("="*60 + "\n")


if __name__ == "__main__":
    main()
