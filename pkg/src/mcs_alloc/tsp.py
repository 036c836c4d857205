"""
Open-path TSP costing for participant -> task-set routes.

A participant starts at its own location, visits every task of a set once and does not
return. Two solvers:
- exact_open_path: Held-Karp dynamic programming over vertex subsets (default for realistic quotas)
- christofides_open_path: spanning tree + odd-vertex matching + Eulerian shortcut, with the
  closing edge dropped

Ties between equal-length routes go to the lexicographically smallest node order.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from typing import Sequence
import logging

import networkx as nx
import numpy as np

from .errors import ParameterError, SizeLimitError

logger = logging.getLogger(__name__)

# Held-Karp admission: q tasks + the participant
EXACT_NODE_LIMIT = 21
# AUTO hands larger routes to Christofides; the DP table grows as 2^nodes x nodes
AUTO_EXACT_NODE_LIMIT = 13
BRUTE_FORCE_NODE_LIMIT = 9


class TspSolver(Enum):
    """Route solver selection"""
    AUTO = "auto"                  # exact up to AUTO_EXACT_NODE_LIMIT nodes, Christofides beyond
    EXACT = "exact"
    CHRISTOFIDES = "christofides"


@dataclass(frozen=True, eq=False)
class RouteProblem:
    """Distances over q+1 nodes; the route starts at node `start`"""
    dist: np.ndarray
    start: int = 0

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise ParameterError(f"route distances must be a nonempty square matrix, got {d.shape}")
        if not 0 <= self.start < d.shape[0]:
            raise ParameterError(f"start {self.start} out of range for {d.shape[0]} nodes")
        object.__setattr__(self, "dist", d)

    @property
    def nodes(self) -> int:
        return self.dist.shape[0]


@dataclass(frozen=True)
class Route:
    """Visiting order (order[0] == start) and open-path length in meters"""
    order: tuple[int, ...]
    length: float

    def to_dict(self) -> dict:
        return {"order": list(self.order), "length": self.length}


def path_length(dist: np.ndarray, order: Sequence[int]) -> float:
    """Sum of consecutive-pair distances along order (no return edge)"""
    total = 0.0
    for a, b in zip(order, order[1:]):
        total += float(dist[a][b])
    return total


def _route(dist: np.ndarray, order: Sequence[int]) -> Route:
    order = tuple(int(v) for v in order)
    return Route(order=order, length=path_length(dist, order))


# =========================================
# EXACT (HELD-KARP)
# =========================================

def _held_karp_order(dist: np.ndarray, start: int, closed: bool) -> list[int]:
    """
    Minimum Hamiltonian path from start (closed: plus the edge back to start).

    g[mask, v] = cheapest completion when the nodes in mask are visited and we stand at v.
    Reconstruction takes the smallest-index successor that stays optimal, which yields the
    lexicographically smallest optimal order.
    """
    n = dist.shape[0]
    full = (1 << n) - 1
    start_bit = 1 << start
    g = np.full((1 << n, n), np.inf)
    g[full, :] = dist[:, start] if closed else 0.0

    for mask in range(full - 1, 0, -1):
        if not mask & start_bit:
            continue
        best = np.full(n, np.inf)
        for u in range(n):
            bit = 1 << u
            if mask & bit:
                continue
            np.minimum(best, dist[:, u] + g[mask | bit, u], out=best)
        g[mask] = best

    order = [start]
    mask, v = start_bit, start
    while mask != full:
        target = g[mask, v]
        tol = 1e-9 * max(1.0, abs(target))
        for u in range(n):
            bit = 1 << u
            if mask & bit:
                continue
            if dist[v, u] + g[mask | bit, u] <= target + tol:
                order.append(u)
                mask |= bit
                v = u
                break
    return order


def _check_exact_size(problem: RouteProblem) -> None:
    if problem.nodes > EXACT_NODE_LIMIT:
        raise SizeLimitError(
            f"exact route solver admits at most {EXACT_NODE_LIMIT} nodes, got {problem.nodes}"
        )


def exact_open_path(problem: RouteProblem) -> Route:
    """
    Minimum-length Hamiltonian path from problem.start, not returning.

    Example:
        exact_open_path(RouteProblem(dist, start=0)).length
    """
    _check_exact_size(problem)
    if problem.nodes == 1:
        return Route(order=(problem.start,), length=0.0)
    return _route(problem.dist, _held_karp_order(problem.dist, problem.start, closed=False))


def exact_cycle(problem: RouteProblem) -> Route:
    """Minimum closed tour starting at problem.start; length excludes the return edge"""
    _check_exact_size(problem)
    if problem.nodes == 1:
        return Route(order=(problem.start,), length=0.0)
    return _route(problem.dist, _held_karp_order(problem.dist, problem.start, closed=True))


def brute_force_open_path(problem: RouteProblem) -> Route:
    """Full-permutation oracle for small instances"""
    if problem.nodes > BRUTE_FORCE_NODE_LIMIT:
        raise SizeLimitError(
            f"brute force admits at most {BRUTE_FORCE_NODE_LIMIT} nodes, got {problem.nodes}"
        )
    others = [v for v in range(problem.nodes) if v != problem.start]
    best: Route | None = None
    for perm in permutations(others):
        route = _route(problem.dist, (problem.start, *perm))
        if best is None or route.length < best.length:
            best = route
    return best or Route(order=(problem.start,), length=0.0)


# =========================================
# CHRISTOFIDES
# =========================================

def _min_weight_perfect_matching(graph: nx.Graph, vertices: list[int]) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching on the odd-degree vertices (complete subgraph)"""
    pairs = nx.min_weight_matching(graph.subgraph(vertices), weight="weight")
    return sorted(tuple(sorted(pair)) for pair in pairs)


def _christofides_order(dist: np.ndarray, start: int) -> list[int]:
    n = dist.shape[0]
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            graph.add_edge(i, j, weight=float(dist[i, j]))

    tree = nx.minimum_spanning_tree(graph, algorithm="prim")
    odd = sorted(v for v, degree in tree.degree() if degree % 2)
    matching = _min_weight_perfect_matching(graph, odd)

    multi = nx.MultiGraph(tree)
    multi.add_edges_from(matching)

    order = [start]
    seen = {start}
    for _, v in nx.eulerian_circuit(multi, source=start):
        if v not in seen:
            seen.add(v)
            order.append(v)
    return order


def christofides_open_path(problem: RouteProblem) -> Route:
    """
    Christofides tour converted to an open path.

    The shortcut cycle start -> ... -> z -> start loses its closing edge z -> start.
    """
    if problem.nodes < 2:
        raise ParameterError("Christofides needs at least 2 nodes")
    return _route(problem.dist, _christofides_order(problem.dist, problem.start))


# =========================================
# DISPATCH
# =========================================

def solve_route(problem: RouteProblem, solver: TspSolver = TspSolver.AUTO) -> Route:
    """Open-path route with the selected solver"""
    if solver is TspSolver.AUTO:
        solver = TspSolver.EXACT if problem.nodes <= AUTO_EXACT_NODE_LIMIT else TspSolver.CHRISTOFIDES
    if solver is TspSolver.EXACT or problem.nodes < 2:
        return exact_open_path(problem)
    return christofides_open_path(problem)


def cycle_length(problem: RouteProblem, solver: TspSolver = TspSolver.EXACT) -> float:
    """Closed-tour length (path + return edge) for the chosen solver"""
    if solver is TspSolver.AUTO:
        solver = TspSolver.EXACT if problem.nodes <= AUTO_EXACT_NODE_LIMIT else TspSolver.CHRISTOFIDES
    if solver is TspSolver.EXACT:
        route = exact_cycle(problem)
    else:
        route = christofides_open_path(problem)
    if len(route.order) < 2:
        return 0.0
    return route.length + float(problem.dist[route.order[-1], problem.start])
