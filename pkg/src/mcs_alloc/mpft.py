"""
MPFT: more participants, few tasks.

Participants register working areas instead of precise locations; the platform decides how
many participants x_ij of area i perform task j. Two objectives, both minimized:
- total incentive  sum_i C_i * sum_j x_ij
- total distance   sum_ij D_ij * x_ij
subject to area capacity (sum_j x_ij <= |A_i|), exact task demand (sum_i x_ij == p_j) and
integral x.

Solvers:
- W-ILP  normalized weighted sum; a transportation problem, solved by min-cost flow
- C-ILP  minimum distance under an incentive budget; branch and bound
- W-Grd / C-Grd  greedy baselines
- pareto_sweep over weight or budget grids, exact_enum_oracle as desk-scale ground truth
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence
import logging
import math

import numpy as np

from .errors import InfeasibleBudgetError, InfeasibleError, ParameterError, SizeLimitError
from .geo import Location, common_mode, distance
from .opt_core import (
    FlowNetwork,
    LinearProgram,
    LpStatus,
    Relation,
    branch_and_bound,
    min_cost_flow,
)
from .utils import parallel_map

logger = logging.getLogger(__name__)

ORACLE_MAX_AREAS = 4
ORACLE_MAX_TASKS = 4
ORACLE_MAX_DEMAND = 3
# relative slack on objective-bound rows
ROW_TOL = 1e-9


# =========================================
# INSTANCE
# =========================================

@dataclass(frozen=True)
class WorkingArea:
    """Registered area A_i: reference point, population |A_i|, per-participant incentive C_i"""
    id: str
    location: Location
    population: int
    incentive: float


@dataclass(frozen=True)
class MpftTask:
    """Task requiring exactly `demand` performers"""
    id: str
    location: Location
    demand: int


@dataclass(frozen=True)
class MpftInstance:
    """Areas, tasks and the m x n area-to-task distance matrix D (meters)"""
    areas: tuple[WorkingArea, ...]
    tasks: tuple[MpftTask, ...]
    dist: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "areas", tuple(self.areas))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "dist", tuple(tuple(float(v) for v in row) for row in self.dist))
        if not self.areas or not self.tasks:
            raise ParameterError("an MPFT instance needs at least one area and one task")
        ids = [a.id for a in self.areas] + [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ParameterError("area and task ids must be unique")
        for a in self.areas:
            if a.population < 1:
                raise ParameterError(f"area {a.id} needs population >= 1, got {a.population}")
            if not (math.isfinite(a.incentive) and a.incentive > 0):
                raise ParameterError(f"area {a.id} needs a positive incentive, got {a.incentive}")
        for t in self.tasks:
            if t.demand < 1:
                raise ParameterError(f"task {t.id} needs demand >= 1, got {t.demand}")
        if len(self.dist) != self.m or any(len(row) != self.n for row in self.dist):
            raise ParameterError(f"distance matrix must be {self.m} x {self.n}")
        for row in self.dist:
            for v in row:
                if not (math.isfinite(v) and v >= 0):
                    raise ParameterError(f"distances must be finite and nonnegative, got {v}")
        common_mode([a.location for a in self.areas] + [t.location for t in self.tasks])

    @classmethod
    def from_locations(
        cls, areas: Sequence[WorkingArea], tasks: Sequence[MpftTask]
    ) -> "MpftInstance":
        """D_ij measured from each area's reference location to each task"""
        dist = tuple(tuple(distance(a.location, t.location) for t in tasks) for a in areas)
        return cls(tuple(areas), tuple(tasks), dist)

    @property
    def m(self) -> int:
        return len(self.areas)

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def supply(self) -> int:
        return sum(a.population for a in self.areas)

    @property
    def demand(self) -> int:
        return sum(t.demand for t in self.tasks)

    @property
    def feasible(self) -> bool:
        return self.supply >= self.demand

    @cached_property
    def costs(self) -> np.ndarray:
        return np.array([a.incentive for a in self.areas], dtype=float)

    @cached_property
    def distances(self) -> np.ndarray:
        return np.array(self.dist, dtype=float).reshape(self.m, self.n)

    @cached_property
    def populations(self) -> np.ndarray:
        return np.array([a.population for a in self.areas], dtype=np.int64)

    @cached_property
    def demands(self) -> np.ndarray:
        return np.array([t.demand for t in self.tasks], dtype=np.int64)


def _require_feasible(instance: MpftInstance) -> None:
    if not instance.feasible:
        raise InfeasibleError(
            f"total area population {instance.supply} is below total task demand {instance.demand}"
        )


# =========================================
# ALLOCATIONS
# =========================================

def _objectives(instance: MpftInstance, x: Sequence[Sequence[int]]) -> tuple[float, float]:
    """Incentive and distance of x, summed in row-major order"""
    incentive = 0.0
    total = 0.0
    for i, row in enumerate(x):
        incentive += instance.areas[i].incentive * sum(row)
        for j, units in enumerate(row):
            total += instance.dist[i][j] * units
    return incentive, total


@dataclass(frozen=True)
class AllocationMatrix:
    """x_ij participants of area i on task j, with both objective values"""
    x: tuple[tuple[int, ...], ...]
    incentive: float
    distance: float

    @classmethod
    def from_x(cls, instance: MpftInstance, x) -> "AllocationMatrix":
        rows = tuple(tuple(int(v) for v in row) for row in np.asarray(x).reshape(instance.m, instance.n))
        incentive, total = _objectives(instance, rows)
        return cls(rows, incentive, total)

    def area_totals(self) -> list[int]:
        return [sum(row) for row in self.x]

    def task_totals(self) -> list[int]:
        return [sum(col) for col in zip(*self.x)]

    def check(self, instance: MpftInstance) -> None:
        """Raise ValueError unless demand, populations and integrality hold with matching totals"""
        if len(self.x) != instance.m or any(len(row) != instance.n for row in self.x):
            raise ValueError("allocation shape does not match the instance")
        if any(v < 0 for row in self.x for v in row):
            raise ValueError("allocation has negative entries")
        for a, used in zip(instance.areas, self.area_totals()):
            if used > a.population:
                raise ValueError(f"area {a.id} sends {used} participants, population {a.population}")
        for t, got in zip(instance.tasks, self.task_totals()):
            if got != t.demand:
                raise ValueError(f"task {t.id} receives {got} participants, demand {t.demand}")
        if (self.incentive, self.distance) != _objectives(instance, self.x):
            raise ValueError("stored objectives disagree with x")

    def to_dict(self) -> dict:
        return {
            "x": [list(row) for row in self.x],
            "incentive": self.incentive,
            "distance": self.distance,
        }


@dataclass(frozen=True)
class ObjectiveBounds:
    """Payoff table: each objective's optimum and its value at the other's optimum"""
    c_min: float
    c_max: float
    d_min: float
    d_max: float
    min_incentive_allocation: AllocationMatrix
    min_distance_allocation: AllocationMatrix

    @property
    def incentive_span(self) -> float:
        return self.c_max - self.c_min

    @property
    def distance_span(self) -> float:
        return self.d_max - self.d_min

    def to_dict(self) -> dict:
        return {"c_min": self.c_min, "c_max": self.c_max, "d_min": self.d_min, "d_max": self.d_max}


def scalarized(allocation: AllocationMatrix, bounds: ObjectiveBounds, k1: float, k2: float) -> float:
    """
    k1 * (incentive - c_min) / (c_max - c_min) + k2 * (distance - d_min) / (d_max - d_min).

    A term whose span is zero is 0 (that objective is constant over the feasible set).
    """
    value = 0.0
    if bounds.incentive_span > 0:
        value += k1 * (allocation.incentive - bounds.c_min) / bounds.incentive_span
    if bounds.distance_span > 0:
        value += k2 * (allocation.distance - bounds.d_min) / bounds.distance_span
    return value


# =========================================
# EXACT BUILDING BLOCKS
# =========================================

def _transport(instance: MpftInstance, unit_cost: np.ndarray) -> AllocationMatrix:
    """Min-cost transportation: source -> area (|A_i|) -> task (cost per unit) -> sink (p_j)"""
    _require_feasible(instance)
    net = FlowNetwork()
    net.source = net.add_node("source")
    area_nodes = [net.add_node(a.id) for a in instance.areas]
    task_nodes = [net.add_node(t.id) for t in instance.tasks]
    net.sink = net.add_node("sink")
    for a, node in zip(instance.areas, area_nodes):
        net.add_arc(net.source, node, a.population, 0.0)
    pair_arcs = {}
    for i, a_node in enumerate(area_nodes):
        for j, t_node in enumerate(task_nodes):
            pair_arcs[(i, j)] = net.add_arc(a_node, t_node, instance.tasks[j].demand, unit_cost[i, j])
    for t, node in zip(instance.tasks, task_nodes):
        net.add_arc(node, net.sink, t.demand, 0.0)
    net.validate()

    flow = min_cost_flow(net, target=instance.demand, exact=True)
    x = np.zeros((instance.m, instance.n), dtype=np.int64)
    for (i, j), arc in pair_arcs.items():
        x[i, j] = flow.arc_flows[arc]
    return AllocationMatrix.from_x(instance, x)


def _incentive_cost(instance: MpftInstance) -> np.ndarray:
    return np.repeat(instance.costs[:, None], instance.n, axis=1)


def _integer_program(
    instance: MpftInstance,
    objective: np.ndarray,
    side: tuple[np.ndarray, float] | None = None,
) -> AllocationMatrix | None:
    """
    min objective.x over the demand, population and nonnegativity rows, optionally with one
    extra row side[0].x <= side[1].

    Variables are x_ij flattened row-major. Returns None when infeasible.
    """
    m, n = instance.m, instance.n
    rows = []
    for i, a in enumerate(instance.areas):
        coef = np.zeros(m * n)
        coef[i * n:(i + 1) * n] = 1.0
        rows.append((coef, Relation.LE, float(a.population)))
    for j, t in enumerate(instance.tasks):
        coef = np.zeros(m * n)
        coef[j::n] = 1.0
        rows.append((coef, Relation.EQ, float(t.demand)))
    if side is not None:
        coef, rhs = side
        rows.append((coef.reshape(-1), Relation.LE, rhs + ROW_TOL * max(1.0, abs(rhs))))

    lp = LinearProgram.from_rows(objective.reshape(-1), rows)
    result = branch_and_bound(lp)
    logger.debug("integer program: %s after %d nodes", result.status.value, result.nodes)
    if result.status is not LpStatus.OPTIMAL:
        return None
    return AllocationMatrix.from_x(instance, result.values.reshape(m, n))


# =========================================
# BOUNDS
# =========================================

def compute_bounds(instance: MpftInstance) -> ObjectiveBounds:
    """
    Payoff-table bounds.

    c_min / d_min are transportation optima. d_max is the least distance among minimum-incentive
    allocations and c_max the least incentive among minimum-distance allocations.

    Example:
        compute_bounds(instance).to_dict()  # {"c_min": ..., "c_max": ..., ...}
    """
    _require_feasible(instance)
    incentive_cost = _incentive_cost(instance)
    cheapest = _transport(instance, incentive_cost)
    nearest = _transport(instance, instance.distances)

    by_incentive = _integer_program(
        instance, instance.distances, (incentive_cost, cheapest.incentive)
    ) or cheapest
    by_distance = _integer_program(
        instance, incentive_cost, (instance.distances, nearest.distance)
    ) or nearest

    bounds = ObjectiveBounds(
        c_min=by_incentive.incentive,
        c_max=by_distance.incentive,
        d_min=by_distance.distance,
        d_max=by_incentive.distance,
        min_incentive_allocation=by_incentive,
        min_distance_allocation=by_distance,
    )
    logger.info(
        "bounds: incentive [%g, %g], distance [%g, %g]",
        bounds.c_min, bounds.c_max, bounds.d_min, bounds.d_max,
    )
    return bounds


# =========================================
# EXACT SOLVERS
# =========================================

def _check_weights(k1: float, k2: float) -> None:
    if not (math.isfinite(k1) and math.isfinite(k2)) or k1 < 0 or k2 < 0 or k1 + k2 <= 0:
        raise ParameterError(f"weights need k1, k2 >= 0 and k1 + k2 > 0, got ({k1}, {k2})")


def _unit_weights(
    instance: MpftInstance, bounds: ObjectiveBounds, k1: float, k2: float
) -> np.ndarray:
    coef = np.zeros((instance.m, instance.n))
    if bounds.incentive_span > 0:
        coef += k1 * _incentive_cost(instance) / bounds.incentive_span
    if bounds.distance_span > 0:
        coef += k2 * instance.distances / bounds.distance_span
    return coef


def solve_w_ilp(
    instance: MpftInstance, k1: float, k2: float, bounds: ObjectiveBounds | None = None
) -> AllocationMatrix:
    """
    Exact minimizer of the normalized weighted sum.

    The scalarized objective is linear per unit, so the problem stays a transportation
    problem and min-cost flow solves it integrally. Pure-corner weights return the payoff
    table's attaining allocations. A zero span on either objective forces the other span to
    zero as well, so the minimum-incentive allocation then attains both minima.
    """
    _check_weights(k1, k2)
    _require_feasible(instance)
    bounds = bounds or compute_bounds(instance)
    if k2 == 0:
        return bounds.min_incentive_allocation
    if k1 == 0:
        return bounds.min_distance_allocation

    if bounds.incentive_span > 0 and bounds.distance_span > 0:
        return _transport(instance, _unit_weights(instance, bounds, k1, k2))

    logger.info("w-ilp: degenerate bounds, returning the minimum-incentive allocation")
    return bounds.min_incentive_allocation


def solve_c_ilp(
    instance: MpftInstance, budget: float, bounds: ObjectiveBounds | None = None
) -> AllocationMatrix:
    """Least total distance with total incentive <= budget"""
    _require_feasible(instance)
    bounds = bounds or compute_bounds(instance)
    if budget < bounds.c_min - ROW_TOL * max(1.0, abs(bounds.c_min)):
        raise InfeasibleBudgetError(budget, bounds.c_min)
    if budget >= bounds.c_max:
        return bounds.min_distance_allocation

    best = _integer_program(instance, instance.distances, (_incentive_cost(instance), budget))
    if best is None:
        raise InfeasibleBudgetError(budget, bounds.c_min)
    return best


# =========================================
# GREEDY BASELINES
# =========================================

def _greedy_fill(instance: MpftInstance, coef: np.ndarray) -> np.ndarray:
    """
    Unit greedy on a static per-unit coefficient.

    Each step takes the cheapest (area, task) pair with residual capacity and unmet demand,
    lowest area then task on ties. With static coefficients this fills pairs in sorted order.
    """
    _require_feasible(instance)
    residual = instance.populations.copy()
    unmet = instance.demands.copy()
    x = np.zeros((instance.m, instance.n), dtype=np.int64)
    pairs = sorted(product(range(instance.m), range(instance.n)), key=lambda ij: (coef[ij], ij))
    for i, j in pairs:
        units = min(residual[i], unmet[j])
        if units > 0:
            x[i, j] += units
            residual[i] -= units
            unmet[j] -= units
    if unmet.any():
        raise InfeasibleError("greedy fill left task demand unmet")
    return x


def solve_w_grd(
    instance: MpftInstance, k1: float, k2: float, bounds: ObjectiveBounds | None = None
) -> AllocationMatrix:
    """Greedy on the scalarized per-unit coefficient"""
    _check_weights(k1, k2)
    bounds = bounds or compute_bounds(instance)
    return AllocationMatrix.from_x(instance, _greedy_fill(instance, _unit_weights(instance, bounds, k1, k2)))


def _best_move(instance: MpftInstance, x: np.ndarray) -> tuple[int, int, int] | None:
    """(from area, task, to area) with the largest incentive saving per added meter"""
    residual = instance.populations - x.sum(axis=1)
    best_key, best = None, None
    for i, j in zip(*np.nonzero(x)):
        for to in range(instance.m):
            saving = instance.costs[i] - instance.costs[to]
            if saving <= 0 or residual[to] <= 0:
                continue
            added = instance.distances[to, j] - instance.distances[i, j]
            ratio = saving / added if added > 0 else math.inf
            key = (-ratio, int(i), int(j), to)
            if best_key is None or key < best_key:
                best_key, best = key, (int(i), int(j), to)
    return best


def solve_c_grd(
    instance: MpftInstance, budget: float, bounds: ObjectiveBounds | None = None
) -> AllocationMatrix:
    """
    Minimum-distance greedy, then unit moves to cheaper areas until the budget holds.

    Each move takes the unit whose reassignment saves the most incentive per meter of added
    distance.
    """
    _require_feasible(instance)
    c_min = bounds.c_min if bounds else _transport(instance, _incentive_cost(instance)).incentive
    tol = ROW_TOL * max(1.0, abs(budget))
    if budget < c_min - ROW_TOL * max(1.0, abs(c_min)):
        raise InfeasibleBudgetError(budget, c_min)

    x = _greedy_fill(instance, instance.distances)
    moves = 0
    while AllocationMatrix.from_x(instance, x).incentive > budget + tol:
        move = _best_move(instance, x)
        if move is None:
            logger.info("c-grd: no cheaper move left, falling back to the minimum-incentive allocation")
            fallback = (bounds.min_incentive_allocation if bounds
                        else _transport(instance, _incentive_cost(instance)))
            if fallback.incentive > budget + tol:
                raise InfeasibleBudgetError(budget, c_min)
            return fallback
        i, j, to = move
        x[i, j] -= 1
        x[to, j] += 1
        moves += 1
    logger.debug("c-grd: %d unit moves", moves)
    return AllocationMatrix.from_x(instance, x)


# =========================================
# PARETO SWEEPS
# =========================================

class SweepMode(Enum):
    """Pareto sweep parameterization"""
    WEIGHTS = "weights"
    BUDGETS = "budgets"


@dataclass(frozen=True)
class ParetoPoint:
    """One solved grid point"""
    incentive: float
    distance: float
    parameter: tuple[float, float] | float
    allocation: AllocationMatrix

    def to_dict(self) -> dict:
        parameter = list(self.parameter) if isinstance(self.parameter, tuple) else self.parameter
        return {
            "incentive": self.incentive,
            "distance": self.distance,
            "parameter": parameter,
            "allocation": self.allocation.to_dict(),
        }


def weight_grid(count: int = 9) -> list[tuple[float, float]]:
    """(k1, k2) pairs with k1 = i / (count - 1) and k1 + k2 = 1"""
    if count < 2:
        raise ParameterError(f"a weight grid needs at least 2 points, got {count}")
    return [(i / (count - 1), 1.0 - i / (count - 1)) for i in range(count)]


def budget_grid(bounds: ObjectiveBounds, count: int = 6) -> list[float]:
    """Budgets evenly spaced from c_max down to c_min"""
    if count < 2:
        raise ParameterError(f"a budget grid needs at least 2 points, got {count}")
    grid = [float(v) for v in np.linspace(bounds.c_max, bounds.c_min, count)]
    grid[-1] = bounds.c_min
    return grid


def _solve_point(job: tuple) -> ParetoPoint:
    instance, mode, parameter, bounds = job
    if mode is SweepMode.WEIGHTS:
        allocation = solve_w_ilp(instance, parameter[0], parameter[1], bounds)
    else:
        allocation = solve_c_ilp(instance, parameter, bounds)
    return ParetoPoint(allocation.incentive, allocation.distance, parameter, allocation)


def pareto_filter(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Drop dominated and duplicate objective pairs; sort by incentive ascending"""
    ordered = sorted(points, key=lambda p: (p.incentive, p.distance))
    front: list[ParetoPoint] = []
    for p in ordered:
        if front and p.distance >= front[-1].distance - ROW_TOL * max(1.0, abs(front[-1].distance)):
            continue
        front.append(p)
    return front


def pareto_sweep(
    instance: MpftInstance,
    mode: SweepMode | str,
    grid: Sequence,
    bounds: ObjectiveBounds | None = None,
    workers: int | None = None,
) -> list[ParetoPoint]:
    """
    Run the exact solver for every grid point and return the non-dominated front.

    Example:
        pareto_sweep(instance, SweepMode.WEIGHTS, weight_grid(9))
    """
    mode = SweepMode(mode)
    if not grid:
        raise ParameterError("sweep grid is empty")
    bounds = bounds or compute_bounds(instance)
    params: list = []
    for entry in grid:
        if mode is SweepMode.WEIGHTS:
            k1, k2 = (float(v) for v in entry)
            _check_weights(k1, k2)
            if not math.isclose(k1 + k2, 1.0, rel_tol=1e-9):
                raise ParameterError(f"sweep weights must sum to 1, got ({k1}, {k2})")
            params.append((k1, k2))
        else:
            budget = float(entry)
            if budget < bounds.c_min - ROW_TOL * max(1.0, abs(bounds.c_min)):
                raise InfeasibleBudgetError(budget, bounds.c_min)
            params.append(budget)

    points = parallel_map(_solve_point, [(instance, mode, p, bounds) for p in params], workers)
    front = pareto_filter(points)
    logger.info("%s sweep: %d grid points, %d on the front", mode.value, len(points), len(front))
    return front


# =========================================
# ENUMERATION ORACLE
# =========================================

def _compositions(total: int, parts: int, caps: np.ndarray) -> np.ndarray:
    """All nonnegative integer vectors of length `parts` summing to total, entrywise <= caps"""
    grid = np.array(list(product(range(total + 1), repeat=parts)), dtype=np.int64).reshape(-1, parts)
    keep = (grid.sum(axis=1) == total) & np.all(grid <= caps, axis=1)
    return grid[keep]


@dataclass(frozen=True, eq=False)
class EnumerationResult:
    """Every feasible allocation: matrices (N, m, n) with their objective arrays"""
    instance: MpftInstance
    matrices: np.ndarray
    incentives: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, index: int) -> AllocationMatrix:
        return AllocationMatrix.from_x(self.instance, self.matrices[index])

    def __iter__(self) -> Iterator[AllocationMatrix]:
        for index in range(len(self)):
            yield self[index]

    def objectives(self) -> list[tuple[float, float]]:
        return list(zip(self.incentives.tolist(), self.distances.tolist()))

    def min_incentive(self) -> float:
        return float(self.incentives.min())

    def min_distance(self) -> float:
        return float(self.distances.min())

    def min_scalarized(self, bounds: ObjectiveBounds, k1: float, k2: float) -> float:
        values = np.zeros(len(self))
        if bounds.incentive_span > 0:
            values += k1 * (self.incentives - bounds.c_min) / bounds.incentive_span
        if bounds.distance_span > 0:
            values += k2 * (self.distances - bounds.d_min) / bounds.distance_span
        return float(values.min())

    def non_dominated(self) -> list[tuple[float, float]]:
        """Objective pairs no other feasible allocation dominates"""
        order = np.lexsort((self.distances, self.incentives))
        front, best = [], math.inf
        for k in order:
            d = float(self.distances[k])
            if d < best:
                front.append((float(self.incentives[k]), d))
                best = d
        return front


def exact_enum_oracle(instance: MpftInstance, budget: float | None = None) -> EnumerationResult:
    """
    Every integer x meeting every demand within the area populations (and the budget row when given).

    Builds per-task compositions of p_j over the areas, then their Cartesian product with a
    running area-capacity filter.
    """
    if instance.m > ORACLE_MAX_AREAS or instance.n > ORACLE_MAX_TASKS:
        raise SizeLimitError(
            f"oracle admits at most {ORACLE_MAX_AREAS} areas and {ORACLE_MAX_TASKS} tasks, "
            f"got {instance.m} x {instance.n}"
        )
    if int(instance.demands.max()) > ORACLE_MAX_DEMAND:
        raise SizeLimitError(f"oracle admits task demands up to {ORACLE_MAX_DEMAND}")

    m = instance.m
    caps = instance.populations
    stacked = np.zeros((1, m, 0), dtype=np.int64)
    for t in instance.tasks:
        columns = _compositions(t.demand, m, caps)
        count = stacked.shape[0]
        left = np.repeat(stacked, len(columns), axis=0)
        right = np.tile(columns, (count, 1))[:, :, None]
        stacked = np.concatenate([left, right], axis=2)
        stacked = stacked[np.all(stacked.sum(axis=2) <= caps, axis=1)]

    incentives = stacked.sum(axis=2) @ instance.costs
    distances = (stacked * instance.distances[None, :, :]).sum(axis=(1, 2))
    if budget is not None:
        keep = incentives <= budget + ROW_TOL * max(1.0, abs(budget))
        stacked, incentives, distances = stacked[keep], incentives[keep], distances[keep]
    logger.debug("oracle: %d feasible allocations", stacked.shape[0])
    return EnumerationResult(instance, stacked, incentives.astype(float), distances.astype(float))
