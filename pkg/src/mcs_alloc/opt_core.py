"""
Optimization engines shared by the FPMT and MPFT solvers.

- min_cost_flow: successive shortest paths with node potentials (Dijkstra on reduced costs)
- simplex_solve: two-phase dense tableau, Bland's rule
- branch_and_bound: depth-first search over LP relaxations, most-fractional branching
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence
import heapq
import logging
import math

import numpy as np

from .errors import InfeasibleError, ParameterError

logger = logging.getLogger(__name__)

EPS = 1e-9
INTEGRALITY_TOL = 1e-6
MAX_PIVOTS = 200_000


# =========================================
# MINIMUM-COST FLOW
# =========================================

@dataclass(frozen=True)
class Arc:
    """Directed arc with integral capacity and per-unit cost"""
    tail: int
    head: int
    capacity: int
    cost: float = 0.0


@dataclass
class FlowNetwork:
    """Directed network G = (V, E, C, W) with a single source and sink"""
    nodes: int = 0
    arcs: list[Arc] = field(default_factory=list)
    source: int = 0
    sink: int = 0
    labels: list[str] = field(default_factory=list)

    def add_node(self, label: str = "") -> int:
        self.labels.append(label or f"v{self.nodes}")
        self.nodes += 1
        return self.nodes - 1

    def add_arc(self, tail: int, head: int, capacity: int, cost: float = 0.0) -> int:
        """Append an arc and return its index"""
        self.arcs.append(Arc(tail, head, int(capacity), float(cost)))
        return len(self.arcs) - 1

    def validate(self) -> None:
        for k, arc in enumerate(self.arcs):
            if not (0 <= arc.tail < self.nodes and 0 <= arc.head < self.nodes):
                raise ParameterError(f"arc {k} references a node outside 0..{self.nodes - 1}")
            if arc.capacity < 0:
                raise ParameterError(f"arc {k} has negative capacity {arc.capacity}")
            if not math.isfinite(arc.cost):
                raise ParameterError(f"arc {k} has non-finite cost {arc.cost}")
            if arc.head == self.source:
                raise ParameterError(f"arc {k} enters the source")
            if arc.tail == self.sink:
                raise ParameterError(f"arc {k} leaves the sink")

    def capacity_out(self, node: int) -> int:
        return sum(a.capacity for a in self.arcs if a.tail == node)

    def capacity_in(self, node: int) -> int:
        return sum(a.capacity for a in self.arcs if a.head == node)


@dataclass(frozen=True)
class Flow:
    """Integral flow: per-arc units, total value source -> sink, total cost"""
    arc_flows: tuple[int, ...]
    value: int
    cost: float

    def check(self, network: FlowNetwork, rtol: float = 1e-9) -> None:
        """Raise ValueError unless capacity, conservation and cost identity hold"""
        if len(self.arc_flows) != len(network.arcs):
            raise ValueError("flow does not match the network's arc count")
        balance = [0] * network.nodes
        cost = 0.0
        for k, (arc, f) in enumerate(zip(network.arcs, self.arc_flows)):
            if not 0 <= f <= arc.capacity:
                raise ValueError(f"arc {k} carries {f} outside [0, {arc.capacity}]")
            balance[arc.tail] -= f
            balance[arc.head] += f
            cost += f * arc.cost
        for v, b in enumerate(balance):
            if v not in (network.source, network.sink) and b != 0:
                raise ValueError(f"conservation violated at node {v} ({b:+d})")
        if balance[network.sink] != self.value:
            raise ValueError(f"sink receives {balance[network.sink]}, flow value is {self.value}")
        if not math.isclose(cost, self.cost, rel_tol=rtol, abs_tol=1e-9):
            raise ValueError(f"stored cost {self.cost} differs from arc total {cost}")


def _flow_cost(network: FlowNetwork, arc_flows: Sequence[int]) -> float:
    return float(sum(f * arc.cost for arc, f in zip(network.arcs, arc_flows)))


def make_flow(network: FlowNetwork, arc_flows: Sequence[int]) -> Flow:
    """Build a Flow record from per-arc units"""
    arc_flows = tuple(int(f) for f in arc_flows)
    value = sum(f for arc, f in zip(network.arcs, arc_flows) if arc.head == network.sink)
    return Flow(arc_flows=arc_flows, value=value, cost=_flow_cost(network, arc_flows))


def min_cost_flow(network: FlowNetwork, target: int | None = None, exact: bool = False) -> Flow:
    """
    Minimum-cost integral flow of value `target` (maximum flow when None).

    Successive shortest paths; potentials keep reduced costs nonnegative so every search is
    Dijkstra. When the maximum value falls short of target the maximum is returned, unless
    `exact` is set, in which case InfeasibleError is raised.

    Example:
        net = FlowNetwork(); s = net.add_node(); t = net.add_node(); net.sink = t
        net.add_arc(s, t, capacity=3, cost=2)
        min_cost_flow(net).cost  # 6.0
    """
    network.validate()
    if any(arc.cost < 0 for arc in network.arcs):
        raise ParameterError("min_cost_flow requires nonnegative arc costs")
    goal = math.inf if target is None else int(target)
    if goal < 0:
        raise ParameterError(f"target flow must be nonnegative, got {target}")

    n = network.nodes
    # residual edge 2k is arc k forward, 2k+1 its reversal
    head: list[int] = []
    residual: list[int] = []
    cost: list[float] = []
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for arc in network.arcs:
        adjacency[arc.tail].append(len(head))
        head.append(arc.head)
        residual.append(arc.capacity)
        cost.append(arc.cost)
        adjacency[arc.head].append(len(head))
        head.append(arc.tail)
        residual.append(0)
        cost.append(-arc.cost)

    potential = [0.0] * n
    value = 0
    augmentations = 0
    source, sink = network.source, network.sink

    while value < goal:
        dist = [math.inf] * n
        parent = [-1] * n
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in adjacency[u]:
                if residual[e] <= 0:
                    continue
                v = head[e]
                reduced = max(0.0, cost[e] + potential[u] - potential[v])
                nd = d + reduced
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd, v))
        if math.isinf(dist[sink]):
            break

        for v in range(n):
            if not math.isinf(dist[v]):
                potential[v] += dist[v]

        push = goal - value
        v = sink
        while v != source:
            e = parent[v]
            push = min(push, residual[e])
            v = head[e ^ 1]
        v = sink
        while v != source:
            e = parent[v]
            residual[e] -= push
            residual[e ^ 1] += push
            v = head[e ^ 1]
        value += push
        augmentations += 1

    if exact and target is not None and value < target:
        raise InfeasibleError(f"maximum flow value {value} is below the requested {target}")

    logger.debug("min_cost_flow: value %d after %d augmentations", value, augmentations)
    arc_flows = [residual[2 * k + 1] for k in range(len(network.arcs))]
    return make_flow(network, arc_flows)


# =========================================
# LINEAR PROGRAMMING
# =========================================

class Relation(Enum):
    """Constraint relation"""
    LE = "<="
    EQ = "=="
    GE = ">="


class LpStatus(Enum):
    """Outcome of an LP or MILP solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """
    minimize c.x  subject to  A x (relations) b,  lower <= x <= upper

    Lower bounds must be finite; upper bounds may be +inf.
    """
    c: np.ndarray
    A: np.ndarray
    relations: tuple[Relation, ...]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        n = c.shape[0]
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0] or A.shape[0] != len(self.relations):
            raise ParameterError("constraint rows, relations and rhs differ in length")
        if lower.shape[0] != n or upper.shape[0] != n:
            raise ParameterError("bounds must have one entry per variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ParameterError("LP coefficients must be finite")
        if not np.all(np.isfinite(lower)):
            raise ParameterError("lower bounds must be finite")
        if np.any(lower > upper):
            raise ParameterError("every variable needs lower <= upper")
        for name, value in (("c", c), ("A", A), ("b", b), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "relations", tuple(self.relations))

    @classmethod
    def from_rows(
        cls,
        c: Sequence[float],
        rows: Iterable[tuple[Sequence[float], Relation, float]],
        bounds: Sequence[tuple[float, float]] | None = None,
    ) -> "LinearProgram":
        """Build from (coefficients, relation, rhs) rows; default bounds [0, inf)"""
        c = np.asarray(c, dtype=float)
        rows = list(rows)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), c.shape[0])
        relations = tuple(r[1] for r in rows)
        b = np.array([r[2] for r in rows], dtype=float)
        if bounds is None:
            bounds = [(0.0, math.inf)] * c.shape[0]
        lower = np.array([lo for lo, _ in bounds], dtype=float)
        upper = np.array([hi for _, hi in bounds], dtype=float)
        return cls(c, A, relations, b, lower, upper)

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LinearProgram":
        return LinearProgram(self.c, self.A, self.relations, self.b, lower, upper)

    def with_bound(self, index: int, lo: float, hi: float) -> "LinearProgram":
        lower, upper = self.lower.copy(), self.upper.copy()
        lower[index], upper[index] = lo, hi
        return self.with_bounds(lower, upper)

    def is_feasible(self, x: np.ndarray, tol: float = 1e-7) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        lhs = self.A @ x
        for value, rel, rhs in zip(lhs, self.relations, self.b):
            scale = tol * max(1.0, abs(rhs))
            if rel is Relation.LE and value > rhs + scale:
                return False
            if rel is Relation.GE and value < rhs - scale:
                return False
            if rel is Relation.EQ and abs(value - rhs) > scale:
                return False
        return True


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Continuous LP result"""
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None


def _pivot(T: np.ndarray, basis: list[int], r: int, col: int) -> None:
    T[r] /= T[r, col]
    factors = T[:, col].copy()
    factors[r] = 0.0
    T -= np.outer(factors, T[r])
    basis[r] = col


def _run_bland(T: np.ndarray, basis: list[int], columns: int) -> LpStatus:
    """Iterate primal simplex on tableau T (objective in the last row) with Bland's rule"""
    for _ in range(MAX_PIVOTS):
        reduced = T[-1, :columns]
        entering = np.flatnonzero(reduced < -EPS)
        if entering.size == 0:
            return LpStatus.OPTIMAL
        col = int(entering[0])

        column = T[:-1, col]
        rows = np.flatnonzero(column > EPS)
        if rows.size == 0:
            return LpStatus.UNBOUNDED
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + EPS * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, basis, r, col)
    raise RuntimeError(f"simplex exceeded {MAX_PIVOTS} pivots")


def simplex_solve(lp: LinearProgram) -> LpSolution:
    """
    Solve the LP by the two-phase dense tableau method.

    Example:
        lp = LinearProgram.from_rows([1.0], [([1.0], Relation.GE, 3.0)])
        simplex_solve(lp).x  # array([3.])
    """
    n = lp.num_vars
    lower = lp.lower
    span = lp.upper - lower

    # shift x = lower + y, y >= 0; finite upper bounds become rows
    rows: list[np.ndarray] = []
    rels: list[Relation] = []
    rhs: list[float] = []
    shift = lp.A @ lower if lp.A.size else np.zeros(0)
    for i in range(lp.A.shape[0]):
        rows.append(lp.A[i])
        rels.append(lp.relations[i])
        rhs.append(float(lp.b[i] - shift[i]))
    for j in np.flatnonzero(np.isfinite(span)):
        unit = np.zeros(n)
        unit[j] = 1.0
        rows.append(unit)
        rels.append(Relation.LE)
        rhs.append(float(span[j]))

    m = len(rows)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = -rows[i]
            rhs[i] = -rhs[i]
            if rels[i] is Relation.LE:
                rels[i] = Relation.GE
            elif rels[i] is Relation.GE:
                rels[i] = Relation.LE

    n_slack = sum(1 for r in rels if r is not Relation.EQ)
    n_art = sum(1 for r in rels if r is not Relation.LE)
    art_start = n + n_slack
    width = art_start + n_art
    T = np.zeros((m + 1, width + 1))
    basis = [0] * m
    s = n
    a = art_start
    for i in range(m):
        T[i, :n] = rows[i]
        T[i, -1] = rhs[i]
        if rels[i] is Relation.LE:
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if rels[i] is Relation.GE:
                T[i, s] = -1.0
                s += 1
            T[i, a] = 1.0
            basis[i] = a
            a += 1

    # phase 1: minimize the sum of artificials
    if n_art:
        T[-1, art_start:width] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                T[-1] -= T[i]
        _run_bland(T, basis, width)
        infeasibility = -T[-1, -1]
        scale = max(1.0, max((abs(v) for v in rhs), default=1.0))
        if infeasibility > 1e-7 * scale:
            return LpSolution(LpStatus.INFEASIBLE)

        keep = []
        for i in range(m):
            if basis[i] >= art_start:
                candidates = np.flatnonzero(np.abs(T[i, :art_start]) > EPS)
                if candidates.size:
                    _pivot(T, basis, i, int(candidates[0]))
                    keep.append(i)
                # otherwise the row is redundant
            else:
                keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[i] for i in keep]
        T = np.hstack([T[:, :art_start], T[:, -1:]])
        width = art_start

    # phase 2
    cost = np.zeros(width)
    cost[:n] = lp.c
    T[-1] = 0.0
    T[-1, :width] = cost
    for i, col in enumerate(basis):
        if cost[col] != 0.0:
            T[-1] -= cost[col] * T[i]
    status = _run_bland(T, basis, width)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED)

    y = np.zeros(width)
    for i, col in enumerate(basis):
        y[col] = T[i, -1]
    x = lower + y[:n]
    return LpSolution(LpStatus.OPTIMAL, x=x, objective=float(lp.c @ x))


# =========================================
# BRANCH AND BOUND
# =========================================

@dataclass(frozen=True, eq=False)
class MilpSolution:
    """Integer program result; integer variables are exact integers when optimal"""
    status: LpStatus
    values: np.ndarray | None = None
    objective: float | None = None
    nodes: int = 0
    branches: int = 0


def _most_fractional(x: np.ndarray, integer_vars: Sequence[int]) -> int | None:
    best_index, best_gap = None, INTEGRALITY_TOL
    for j in integer_vars:
        frac = x[j] - math.floor(x[j])
        gap = min(frac, 1.0 - frac)
        if gap > best_gap:
            best_index, best_gap = j, gap
    return best_index


def branch_and_bound(lp: LinearProgram, integer_vars: Iterable[int] | None = None) -> MilpSolution:
    """
    Optimal integer solution by depth-first branch and bound.

    Branches on the most fractional variable (lowest index on ties), explores the floor
    child first, and prunes nodes whose relaxation bound cannot beat the incumbent.

    Example:
        lp = LinearProgram.from_rows([1.0], [([1.0], Relation.GE, 2.5)])
        branch_and_bound(lp, [0]).values  # array([3])
    """
    integer_vars = sorted(range(lp.num_vars) if integer_vars is None else set(integer_vars))
    all_integer = len(integer_vars) == lp.num_vars

    best_values: np.ndarray | None = None
    best_objective = math.inf
    nodes = branches = 0
    stack = [(lp.lower.copy(), lp.upper.copy())]

    while stack:
        lower, upper = stack.pop()
        nodes += 1
        relaxed = simplex_solve(lp.with_bounds(lower, upper))
        if relaxed.status is LpStatus.INFEASIBLE:
            continue
        if relaxed.status is LpStatus.UNBOUNDED:
            raise ParameterError("integer program has an unbounded relaxation")
        if best_values is not None:
            if relaxed.objective >= best_objective - EPS * max(1.0, abs(best_objective)):
                continue

        j = _most_fractional(relaxed.x, integer_vars)
        if j is None:
            values = relaxed.x.copy()
            values[integer_vars] = np.round(values[integer_vars])
            best_values = values
            best_objective = float(lp.c @ values)
            continue

        branches += 1
        v = relaxed.x[j]
        ceil_lower = lower.copy()
        ceil_lower[j] = math.ceil(v)
        floor_upper = upper.copy()
        floor_upper[j] = math.floor(v)
        if ceil_lower[j] <= upper[j]:
            stack.append((ceil_lower, upper.copy()))
        if floor_upper[j] >= lower[j]:
            stack.append((lower.copy(), floor_upper))

    logger.debug("branch_and_bound: %d nodes, %d branches", nodes, branches)
    if best_values is None:
        return MilpSolution(LpStatus.INFEASIBLE, nodes=nodes, branches=branches)
    if all_integer:
        best_values = best_values.astype(np.int64)
    return MilpSolution(
        LpStatus.OPTIMAL,
        values=best_values,
        objective=best_objective,
        nodes=nodes,
        branches=branches,
    )
