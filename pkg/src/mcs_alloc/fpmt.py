"""
FPMT: few participants, more tasks.

Every participant performs q tasks (one route from its own location), every task accepts at
most p_j performers. Objectives: maximize accomplished tasks, minimize total travel distance.

Pipeline:
1. enumerate candidate task sets per participant (all C(n,q) sets, or the q-subsets of the
   participant's k nearest tasks) and cost each as an open-path route
2. build the flow network source -> participant -> task set -> task -> sink
3. augment q-unit blocks in order of route cost (MT-MCMF / MTP-MCMF)

MT-GrdPT (nearest-task greedy) is the baseline; exact_oracle is the desk-scale verifier.
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Iterator, Sequence
import logging
import math

import numpy as np

from .errors import (
    EnumerationBudgetError,
    NoCandidatesError,
    ParameterError,
    SizeLimitError,
)
from .geo import DistanceMatrix, Location, build_distance_matrix, common_mode
from .opt_core import Flow, FlowNetwork, make_flow
from .tsp import AUTO_EXACT_NODE_LIMIT, EXACT_NODE_LIMIT, RouteProblem, TspSolver, solve_route
from .utils import parallel_map

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_BUDGET = 10**6
DEFAULT_SPEED_M_PER_MIN = 70.0
ORACLE_MAX_PARTICIPANTS = 5
ORACLE_MAX_CANDIDATES = 30
# subsets are keyed by int64 bitmasks
SUBSET_DP_MAX_GROUND = 62


# =========================================
# INSTANCE
# =========================================

@dataclass(frozen=True)
class Participant:
    """A participant with a precise location"""
    id: str
    location: Location


@dataclass(frozen=True)
class Task:
    """A sensing task accepting at most `capacity` performers"""
    id: str
    location: Location
    capacity: int = 1


@dataclass(frozen=True)
class FpmtInstance:
    """Participants U, tasks T with capacities p_j, quota q per participant"""
    participants: tuple[Participant, ...]
    tasks: tuple[Task, ...]
    quota: int

    def __post_init__(self):
        object.__setattr__(self, "participants", tuple(self.participants))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        ids = [p.id for p in self.participants] + [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ParameterError("participant and task ids must be unique")
        if self.quota < 1:
            raise ParameterError(f"quota q must be positive, got {self.quota}")
        for t in self.tasks:
            if t.capacity < 1:
                raise ParameterError(f"task {t.id} needs capacity >= 1, got {t.capacity}")
        if self.quota > len(self.tasks):
            raise ParameterError(f"quota q={self.quota} exceeds the task count {len(self.tasks)}")
        locations = [p.location for p in self.participants] + [t.location for t in self.tasks]
        if locations:
            common_mode(locations)

    @property
    def m(self) -> int:
        return len(self.participants)

    @property
    def n(self) -> int:
        return len(self.tasks)

    @cached_property
    def distances(self) -> DistanceMatrix:
        """Participants occupy indices 0..m-1, task j sits at index m + j"""
        points = [p.location for p in self.participants] + [t.location for t in self.tasks]
        return build_distance_matrix(points)

    def task_node(self, j: int) -> int:
        return self.m + j


@dataclass
class SolverSettings:
    """Enumeration and route-costing settings"""
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET
    tsp_solver: TspSolver = TspSolver.AUTO
    workers: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "SolverSettings":
        return cls(
            enumeration_budget=int(data.get("enumeration_budget", DEFAULT_ENUMERATION_BUDGET)),
            tsp_solver=TspSolver(data.get("tsp_solver", "auto")),
            workers=data.get("workers"),
        )


# =========================================
# TASK-SET FAMILIES
# =========================================

@dataclass(frozen=True)
class CandidateSet:
    """A sorted q-subset of task indices, its visiting order and open-path route cost (meters)"""
    tasks: tuple[int, ...]
    cost: float
    order: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class CandidateTable:
    """
    Candidate sets of one participant; rows of `tasks` are in lexicographic order.

    orders[r] is the visiting order of tasks[r] from the participant's location.
    """
    participant: int
    tasks: np.ndarray
    costs: np.ndarray
    orders: np.ndarray

    def __len__(self) -> int:
        return int(self.tasks.shape[0])

    def __getitem__(self, row: int) -> CandidateSet:
        return CandidateSet(
            tuple(int(t) for t in self.tasks[row]),
            float(self.costs[row]),
            tuple(int(t) for t in self.orders[row]),
        )

    def __iter__(self) -> Iterator[CandidateSet]:
        for row in range(len(self)):
            yield self[row]

    def only(self, rows: Sequence[int]) -> "CandidateTable":
        rows = np.asarray(rows, dtype=np.int64)
        return CandidateTable(self.participant, self.tasks[rows], self.costs[rows], self.orders[rows])


@dataclass(frozen=True, eq=False)
class TaskSetFamily:
    """Candidate tables per participant (index-aligned with instance.participants)"""
    candidates: tuple[CandidateTable, ...]
    quota: int
    k: int | None = None
    tsp_solver: TspSolver = TspSolver.AUTO

    @property
    def total_routes(self) -> int:
        return sum(len(c) for c in self.candidates)

    def distinct_sets(self) -> list[tuple[int, ...]]:
        rows = [table.tasks for table in self.candidates if len(table)]
        if not rows:
            return []
        unique = np.unique(np.concatenate(rows), axis=0)
        return [tuple(int(t) for t in row) for row in unique]

    def restricted(self, chosen: dict[int, int]) -> "TaskSetFamily":
        """Family keeping only the chosen row of each participant"""
        tables = tuple(
            table.only([chosen[i]] if i in chosen else []) for i, table in enumerate(self.candidates)
        )
        return TaskSetFamily(tables, self.quota, self.k, self.tsp_solver)


@dataclass(frozen=True, eq=False)
class _SuffixLevel:
    """
    Cheapest Hamiltonian paths inside every s-subset of a ground set.

    combos holds the subsets as sorted rows in lexicographic order; g[r, p] is the cheapest path
    that starts at combos[r, p] and visits the rest of combos[r]. rest[r, p] is the row of
    combos[r] minus position p one level down and step[r, p] the position of the next vertex in it.
    """
    combos: np.ndarray
    g: np.ndarray
    rest: np.ndarray
    step: np.ndarray


def _first_within_tolerance(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row minima and the first column within the route solver's tie tolerance of them"""
    best = values.min(axis=1)
    tol = 1e-9 * np.maximum(1.0, np.abs(best))
    return best, np.argmax(values <= (best + tol)[:, None], axis=1)


def _suffix_paths(dd: np.ndarray, depth: int) -> list[_SuffixLevel]:
    """Levels 1..depth of the subset DP; successors tie-break like the exact route solver"""
    size = dd.shape[0]
    one = np.int64(1)
    single = np.zeros((size, 1), dtype=np.int64)
    levels = [_SuffixLevel(np.arange(size, dtype=np.int64)[:, None], np.zeros((size, 1)), single, single)]
    for s in range(2, depth + 1):
        prev = levels[-1]
        prev_masks = (one << prev.combos).sum(axis=1)
        order = np.argsort(prev_masks)
        sorted_masks = prev_masks[order]
        nxt = np.array(list(combinations(range(size), s)), dtype=np.int64).reshape(-1, s)
        masks = (one << nxt).sum(axis=1)
        g = np.empty(nxt.shape)
        rest = np.empty(nxt.shape, dtype=np.int64)
        step = np.empty(nxt.shape, dtype=np.int64)
        for p in range(s):
            v = nxt[:, p]
            sub = np.delete(nxt, p, axis=1)
            rows = order[np.searchsorted(sorted_masks, masks - (one << v))]
            g[:, p], step[:, p] = _first_within_tolerance(dd[v[:, None], sub] + prev.g[rows])
            rest[:, p] = rows
        levels.append(_SuffixLevel(nxt, g, rest, step))
    return levels


def _walk(levels: list[_SuffixLevel], first: np.ndarray) -> np.ndarray:
    """Ground positions in visiting order for every top-level row, entered at column `first`"""
    top = levels[-1]
    row = np.arange(top.combos.shape[0])
    pos = first
    steps = [top.combos[row, pos]]
    for level, below in zip(levels[:0:-1], levels[-2::-1]):
        row, pos = level.rest[row, pos], level.step[row, pos]
        steps.append(below.combos[row, pos])
    return np.stack(steps, axis=1)


def _path_costs(head: np.ndarray, dd: np.ndarray, walk: np.ndarray) -> np.ndarray:
    """Open-path lengths summed from the participant outward, in tsp.path_length order"""
    costs = head[walk[:, 0]]
    for a, b in zip(walk.T, walk.T[1:]):
        costs = costs + dd[a, b]
    return costs


def _route_costs(job: tuple) -> list[tuple[float, tuple[int, ...]]]:
    """(cost, visiting order) of one participant, set by set; top-level so process pools can pickle it"""
    entries, participant, m, task_sets, solver = job
    out = []
    for tasks in task_sets:
        nodes = [participant] + [m + j for j in tasks]
        route = solve_route(RouteProblem(entries[np.ix_(nodes, nodes)], start=0), solver)
        out.append((route.length, tuple(tasks[pos - 1] for pos in route.order[1:])))
    return out


def _use_subset_dp(settings: SolverSettings, q: int, ground: int) -> bool:
    if settings.tsp_solver is TspSolver.CHRISTOFIDES:
        return False
    if settings.tsp_solver is TspSolver.EXACT:
        if q + 1 > EXACT_NODE_LIMIT:
            raise SizeLimitError(f"exact route costing admits q <= {EXACT_NODE_LIMIT - 1}, got {q}")
    elif q + 1 > AUTO_EXACT_NODE_LIMIT:
        return False
    return ground <= SUBSET_DP_MAX_GROUND


def _tables_for_ground(
    instance: FpmtInstance, participants: list[int], ground: np.ndarray, settings: SolverSettings
) -> list[CandidateTable]:
    """Candidate tables over the q-subsets of `ground` (sorted task indices)"""
    q = instance.quota
    entries = instance.distances.entries
    nodes = instance.m + ground
    if _use_subset_dp(settings, q, len(ground)):
        dd = entries[np.ix_(nodes, nodes)]
        levels = _suffix_paths(dd, q)
        top = levels[-1]
        tasks = ground[top.combos]
        tables = []
        for i in participants:
            head = entries[i, nodes]
            _, first = _first_within_tolerance(head[top.combos] + top.g)
            walk = _walk(levels, first)
            tables.append(CandidateTable(i, tasks, _path_costs(head, dd, walk), ground[walk]))
        return tables

    sets = [tuple(int(t) for t in c) for c in combinations(ground, q)]
    jobs = [(entries, i, instance.m, sets, settings.tsp_solver) for i in participants]
    results = parallel_map(_route_costs, jobs, settings.workers)
    tasks = np.array(sets, dtype=np.int64).reshape(-1, q)
    return [
        CandidateTable(
            i,
            tasks,
            np.array([cost for cost, _ in rows], dtype=float),
            np.array([order for _, order in rows], dtype=np.int64).reshape(-1, q),
        )
        for i, rows in zip(participants, results)
    ]


def _check_budget(routes: int, settings: SolverSettings) -> None:
    if routes > settings.enumeration_budget:
        raise EnumerationBudgetError(routes, settings.enumeration_budget)


def enumerate_full(instance: FpmtInstance, settings: SolverSettings | None = None) -> TaskSetFamily:
    """
    Every q-subset of tasks for every participant.

    Example:
        len(enumerate_full(instance).candidates[0])  # C(n, q)
    """
    settings = settings or SolverSettings()
    _check_budget(comb(instance.n, instance.quota) * instance.m, settings)
    ground = np.arange(instance.n, dtype=np.int64)
    tables = _tables_for_ground(instance, list(range(instance.m)), ground, settings)
    family = TaskSetFamily(tuple(tables), instance.quota, None, settings.tsp_solver)
    logger.info("enumerated %d routes for %d participants (q=%d)",
                family.total_routes, instance.m, instance.quota)
    return family


def nearest_tasks(instance: FpmtInstance, participant: int, k: int) -> list[int]:
    """Indices of the k tasks nearest to a participant (ties by task index), ascending"""
    d = instance.distances.entries[participant]
    ranked = sorted(range(instance.n), key=lambda j: (d[instance.task_node(j)], j))
    return sorted(ranked[:k])


def enumerate_pruned(
    instance: FpmtInstance, k: int, settings: SolverSettings | None = None
) -> TaskSetFamily:
    """q-subsets of each participant's k nearest tasks"""
    settings = settings or SolverSettings()
    q = instance.quota
    if not q <= k <= instance.n:
        raise ParameterError(f"k must satisfy q <= k <= n ({q} <= k <= {instance.n}), got {k}")
    _check_budget(comb(k, q) * instance.m, settings)

    # participants with the same k nearest tasks share one table
    groups: dict[tuple[int, ...], list[int]] = {}
    for i in range(instance.m):
        groups.setdefault(tuple(nearest_tasks(instance, i, k)), []).append(i)
    tables: dict[int, CandidateTable] = {}
    for ground, members in groups.items():
        for table in _tables_for_ground(instance, members, np.array(ground, dtype=np.int64), settings):
            tables[table.participant] = table

    family = TaskSetFamily(
        tuple(tables[i] for i in range(instance.m)), q, k, settings.tsp_solver
    )
    logger.info("enumerated %d routes for %d participants (q=%d, k=%d)",
                family.total_routes, instance.m, q, k)
    return family


def route_order(
    instance: FpmtInstance, participant: int, tasks: Sequence[int], solver: TspSolver = TspSolver.AUTO
) -> tuple[int, ...]:
    """Visiting order of a task set from the participant's location"""
    nodes = [participant] + [instance.task_node(j) for j in tasks]
    route = solve_route(RouteProblem(instance.distances.submatrix(nodes), start=0), solver)
    return tuple(int(tasks[pos - 1]) for pos in route.order[1:])


# =========================================
# FLOW NETWORK
# =========================================

@dataclass
class FpmtNetwork(FlowNetwork):
    """Flow network with index maps back to participants, task sets and tasks"""
    source_arcs: list[int] = field(default_factory=list)
    set_nodes: dict[tuple[int, ...], int] = field(default_factory=dict)
    set_arcs: dict[tuple[int, tuple[int, ...]], int] = field(default_factory=dict)
    member_arcs: dict[tuple[int, ...], list[int]] = field(default_factory=dict)
    sink_arcs: list[int] = field(default_factory=list)


def build_network(instance: FpmtInstance, family: TaskSetFamily) -> FpmtNetwork:
    """
    Layered network: source -> participants -> task sets -> tasks -> sink.

    source -> participant: capacity q, cost 0
    participant -> task set: capacity q, per-unit cost route_cost / q
    task set -> member task: capacity 1, cost 0
    task -> sink: capacity p_j, cost 0

    One task-set node per distinct candidate set, shared by every participant holding it.
    """
    if len(family.candidates) != instance.m or family.quota != instance.quota:
        raise ParameterError("task-set family does not belong to this instance")
    q = instance.quota
    net = FpmtNetwork()
    net.source = net.add_node("source")
    participant_nodes = [net.add_node(p.id) for p in instance.participants]
    for tasks in family.distinct_sets():
        net.set_nodes[tasks] = net.add_node("{" + ",".join(instance.tasks[j].id for j in tasks) + "}")
    task_nodes = [net.add_node(t.id) for t in instance.tasks]
    net.sink = net.add_node("sink")

    for node in participant_nodes:
        net.source_arcs.append(net.add_arc(net.source, node, q, 0.0))
    for i, table in enumerate(family.candidates):
        for cand in table:
            net.set_arcs[(i, cand.tasks)] = net.add_arc(
                participant_nodes[i], net.set_nodes[cand.tasks], q, cand.cost / q
            )
    for tasks, node in net.set_nodes.items():
        net.member_arcs[tasks] = [net.add_arc(node, task_nodes[j], 1, 0.0) for j in tasks]
    for j, node in enumerate(task_nodes):
        net.sink_arcs.append(net.add_arc(node, net.sink, instance.tasks[j].capacity, 0.0))
    net.validate()
    return net


def _block_flow(network: FpmtNetwork, blocks: dict[int, CandidateSet], q: int) -> Flow:
    """Flow pushing q units through each (participant, set) block"""
    flows = [0] * len(network.arcs)
    for i, cand in blocks.items():
        flows[network.source_arcs[i]] += q
        flows[network.set_arcs[(i, cand.tasks)]] += q
        for arc in network.member_arcs[cand.tasks]:
            flows[arc] += 1
        for j in cand.tasks:
            flows[network.sink_arcs[j]] += 1
    flow = make_flow(network, flows)
    flow.check(network)
    return flow


# =========================================
# ASSIGNMENTS
# =========================================

@dataclass(frozen=True)
class ParticipantRoute:
    """Ordered route TU_i of one participant and its distance D(TU_i)"""
    participant: str
    tasks: tuple[str, ...]
    task_indices: tuple[int, ...]
    distance: float
    complete: bool

    def to_dict(self) -> dict:
        return {
            "participant": self.participant,
            "tasks": list(self.tasks),
            "distance": self.distance,
            "complete": self.complete,
        }


@dataclass(frozen=True)
class FpmtAssignment:
    """Routes per participant, performers UT_j per task and the two objective totals"""
    algorithm: str
    quota: int
    routes: tuple[ParticipantRoute, ...]
    performers: tuple[tuple[str, ...], ...]
    accomplished: int
    total_distance: float
    flow: Flow | None = None

    @property
    def assigned(self) -> list[ParticipantRoute]:
        return [r for r in self.routes if r.task_indices]

    def check(self, instance: FpmtInstance, unique_sets: bool = True) -> None:
        """Raise ValueError unless quotas, task capacities and the stored totals hold"""
        counts = [0] * instance.n
        seen_sets = set()
        for r in self.routes:
            if len(set(r.task_indices)) != len(r.task_indices):
                raise ValueError(f"{r.participant} visits a task twice")
            if r.complete and len(r.task_indices) != instance.quota:
                raise ValueError(f"{r.participant} holds {len(r.task_indices)} tasks, q={instance.quota}")
            if unique_sets and r.task_indices:
                key = tuple(sorted(r.task_indices))
                if key in seen_sets:
                    raise ValueError(f"task set {key} assigned twice")
                seen_sets.add(key)
            for j in r.task_indices:
                counts[j] += 1
        for j, t in enumerate(instance.tasks):
            if counts[j] > t.capacity:
                raise ValueError(f"task {t.id} has {counts[j]} performers, capacity {t.capacity}")
            if len(self.performers[j]) != counts[j]:
                raise ValueError(f"performer list of {t.id} disagrees with routes")
        if self.accomplished != sum(counts):
            raise ValueError("accomplished count disagrees with routes")
        total = 0.0
        for r in self.routes:
            total += r.distance
        if total != self.total_distance:
            raise ValueError("total distance disagrees with routes")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "quota": self.quota,
            "accomplished": self.accomplished,
            "total_distance": self.total_distance,
            "routes": [r.to_dict() for r in self.routes],
            "performers": [list(p) for p in self.performers],
        }


def _assemble(
    instance: FpmtInstance,
    algorithm: str,
    orders: dict[int, tuple[tuple[int, ...], float, bool]],
    flow: Flow | None = None,
) -> FpmtAssignment:
    routes = []
    performers: list[list[str]] = [[] for _ in range(instance.n)]
    accomplished = 0
    total = 0.0
    for i, participant in enumerate(instance.participants):
        order, dist, complete = orders.get(i, ((), 0.0, False))
        routes.append(ParticipantRoute(
            participant=participant.id,
            tasks=tuple(instance.tasks[j].id for j in order),
            task_indices=tuple(order),
            distance=dist,
            complete=complete,
        ))
        for j in order:
            performers[j].append(participant.id)
        accomplished += len(order)
        total += dist
    return FpmtAssignment(
        algorithm=algorithm,
        quota=instance.quota,
        routes=tuple(routes),
        performers=tuple(tuple(p) for p in performers),
        accomplished=accomplished,
        total_distance=total,
        flow=flow,
    )


def _blocks_to_assignment(
    instance: FpmtInstance, family: TaskSetFamily, chosen: dict[int, int], algorithm: str
) -> FpmtAssignment:
    """
    Assignment from chosen (participant -> table row) blocks.

    The flow is recorded on the network restricted to the chosen sets; every other arc of the
    full network carries zero, so value and cost are the same.
    """
    blocks = {i: family.candidates[i][row] for i, row in chosen.items()}
    network = build_network(instance, family.restricted(chosen))
    flow = _block_flow(network, blocks, instance.quota)
    orders = {i: (c.order, c.cost, True) for i, c in blocks.items()}
    return _assemble(instance, algorithm, orders, flow)


# =========================================
# SOLVERS
# =========================================

def solve_mt_mcmf(
    instance: FpmtInstance, family: TaskSetFamily, algorithm: str = "mt-mcmf"
) -> FpmtAssignment:
    """
    Block augmentation in order of route cost.

    A block is (unassigned participant, unused candidate set whose member tasks all have
    residual capacity). The cheapest feasible block is pushed (q units through the
    participant and set node, one unit to each member task) until none remains.
    Ties: participant order, then the lexicographically smallest set.
    """
    if len(family.candidates) != instance.m or family.quota != instance.quota:
        raise ParameterError("task-set family does not belong to this instance")
    if family.total_routes == 0:
        raise NoCandidatesError("task-set family holds no candidate sets")

    tables = family.candidates
    costs = np.concatenate([t.costs for t in tables])
    owners = np.concatenate([np.full(len(t), i, dtype=np.int64) for i, t in enumerate(tables)])
    rows = np.concatenate([np.arange(len(t), dtype=np.int64) for t in tables])
    # costs are static, so one sorted pass with lazy feasibility checks is the priority queue
    ranking = np.lexsort((rows, owners, costs))

    residual = [t.capacity for t in instance.tasks]
    used_sets: set[tuple[int, ...]] = set()
    chosen: dict[int, int] = {}
    for pos in ranking:
        i = int(owners[pos])
        if i in chosen:
            continue
        row = int(rows[pos])
        tasks = tuple(int(t) for t in tables[i].tasks[row])
        # residual capacities only shrink, so a blocked set stays blocked
        if tasks in used_sets or any(residual[j] < 1 for j in tasks):
            continue
        chosen[i] = row
        used_sets.add(tasks)
        for j in tasks:
            residual[j] -= 1
        logger.debug("block: participant %s <- %s (%.1f m)",
                     instance.participants[i].id, tasks, float(costs[pos]))
        if len(chosen) == instance.m:
            break

    unassigned = instance.m - len(chosen)
    if unassigned:
        logger.info("%s: %d participant(s) left without a feasible task set", algorithm, unassigned)
    return _blocks_to_assignment(instance, family, chosen, algorithm)


def solve_mtp_mcmf(
    instance: FpmtInstance, k: int, settings: SolverSettings | None = None
) -> FpmtAssignment:
    """MT-MCMF over the pruned family of each participant's k nearest tasks"""
    return solve_mt_mcmf(instance, enumerate_pruned(instance, k, settings), algorithm="mtp-mcmf")


def solve_mt_grdpt(instance: FpmtInstance) -> FpmtAssignment:
    """
    Nearest-task greedy baseline.

    Participants in order; each moves q times to the nearest task with residual capacity
    that it has not visited yet, starting from its own location.
    """
    d = instance.distances.entries
    residual = [t.capacity for t in instance.tasks]
    orders = {}
    for i in range(instance.m):
        here = i
        order: list[int] = []
        dist = 0.0
        for _ in range(instance.quota):
            options = [j for j in range(instance.n) if residual[j] > 0 and j not in order]
            if not options:
                break
            j = min(options, key=lambda t: (d[here, instance.task_node(t)], t))
            dist += float(d[here, instance.task_node(j)])
            residual[j] -= 1
            order.append(j)
            here = instance.task_node(j)
        complete = len(order) == instance.quota
        if not complete:
            logger.info("mt-grdpt: participant %s filled %d of %d tasks",
                        instance.participants[i].id, len(order), instance.quota)
        orders[i] = (tuple(order), dist, complete)
    return _assemble(instance, "mt-grdpt", orders)


def exact_oracle(instance: FpmtInstance, family: TaskSetFamily) -> FpmtAssignment:
    """
    Exhaustive search over participant -> candidate-set assignments.

    Lexicographic objective: most accomplished tasks, then least total distance.
    Each set is used at most once and task capacities hold.
    """
    if instance.m > ORACLE_MAX_PARTICIPANTS:
        raise SizeLimitError(f"oracle admits at most {ORACLE_MAX_PARTICIPANTS} participants, got {instance.m}")
    largest = max((len(c) for c in family.candidates), default=0)
    if largest > ORACLE_MAX_CANDIDATES:
        raise SizeLimitError(f"oracle admits at most {ORACLE_MAX_CANDIDATES} candidates per participant, got {largest}")

    m, q = instance.m, instance.quota
    options = [list(enumerate(table)) for table in family.candidates]
    min_cost = [min((c.cost for _, c in opts), default=0.0) for opts in options]
    rest_cost = [sum(min_cost[i:]) for i in range(m + 1)]
    residual = [t.capacity for t in instance.tasks]
    used: set[tuple[int, ...]] = set()
    chosen: dict[int, int] = {}
    best = {"acc": -1, "dist": math.inf, "chosen": {}}

    def search(i: int, acc: int, dist: float) -> None:
        optimistic = acc + q * (m - i)
        if optimistic < best["acc"]:
            return
        if optimistic == best["acc"] and dist + rest_cost[i] >= best["dist"] - 1e-9:
            return
        if i == m:
            if acc > best["acc"] or dist < best["dist"] - 1e-9:
                best.update(acc=acc, dist=dist, chosen=dict(chosen))
            return
        for row, cand in options[i]:
            if cand.tasks in used or any(residual[j] < 1 for j in cand.tasks):
                continue
            used.add(cand.tasks)
            for j in cand.tasks:
                residual[j] -= 1
            chosen[i] = row
            search(i + 1, acc + q, dist + cand.cost)
            del chosen[i]
            for j in cand.tasks:
                residual[j] += 1
            used.discard(cand.tasks)
        search(i + 1, acc, dist)

    search(0, 0, 0.0)
    return _blocks_to_assignment(instance, family, best["chosen"], "oracle")


# =========================================
# METRICS
# =========================================

@dataclass(frozen=True)
class FpmtMetrics:
    """Distance, completion-time and task-coverage figures of one assignment"""
    total_distance: float
    accomplished: int
    completion_times: dict[str, float]
    mean_completion_time: float
    performer_counts: tuple[int, ...]
    performer_variance: float

    def to_dict(self) -> dict:
        return {
            "total_distance": self.total_distance,
            "accomplished": self.accomplished,
            "completion_times": dict(self.completion_times),
            "mean_completion_time": self.mean_completion_time,
            "performer_counts": list(self.performer_counts),
            "performer_variance": self.performer_variance,
        }


def assignment_metrics(a: FpmtAssignment, speed: float = DEFAULT_SPEED_M_PER_MIN) -> FpmtMetrics:
    """
    Completion time D(TU_i) / speed per participant (minutes) and the population variance of
    per-task performer counts.

    Example:
        1400 m at 70 m/min -> 20.0 minutes
    """
    if speed <= 0:
        raise ParameterError(f"speed must be positive, got {speed}")
    times = {r.participant: r.distance / speed for r in a.routes if r.task_indices}
    mean_time = float(np.mean(list(times.values()))) if times else 0.0
    counts = tuple(len(p) for p in a.performers)
    variance = float(np.var(counts)) if counts else 0.0
    return FpmtMetrics(
        total_distance=a.total_distance,
        accomplished=a.accomplished,
        completion_times=times,
        mean_completion_time=mean_time,
        performer_counts=counts,
        performer_variance=variance,
    )


@dataclass(frozen=True)
class KSearchResult:
    """Smallest pruning width matching the unpruned solution, with the MTP-MCMF assignment at it"""
    k: int
    distance: float
    reference_distance: float
    assignment: FpmtAssignment


def find_appropriate_k(
    instance: FpmtInstance, tolerance: float = 0.01, settings: SolverSettings | None = None
) -> KSearchResult:
    """
    Smallest k in [q, n] at which MTP-MCMF reaches MT-MCMF's accomplished count and comes
    within `tolerance` (relative) of its total distance.
    """
    settings = settings or SolverSettings()
    reference = solve_mt_mcmf(instance, enumerate_full(instance, settings))
    limit = reference.total_distance * (1.0 + tolerance) + 1e-9
    for k in range(instance.quota, instance.n + 1):
        candidate = solve_mtp_mcmf(instance, k, settings)
        if candidate.accomplished >= reference.accomplished and candidate.total_distance <= limit:
            return KSearchResult(k, candidate.total_distance, reference.total_distance, candidate)
    # k = n reproduces the reference, so the loop always returns
    return KSearchResult(instance.n, reference.total_distance, reference.total_distance, reference)
