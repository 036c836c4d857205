"""
Solver runs, run reports and parameter sweeps.

run_solver wraps every solver behind one name-based entry point and returns a RunReport.
run_sweep expands a SweepSpec into grid points (value x seed), solves them (optionally on a
process pool) and yields CSV-ready rows in grid order; aggregate_rows adds per-point mean and
standard deviation rows through DuckDB.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator
import csv
import io
import json
import logging
import os

import duckdb
import yaml

from .errors import (
    AllocationError,
    ConfigError,
    InfeasibleError,
    ModeMismatchError,
    ParameterError,
    SweepError,
)
from .fpmt import (
    FpmtAssignment,
    FpmtInstance,
    SolverSettings,
    assignment_metrics,
    enumerate_full,
    enumerate_pruned,
    exact_oracle,
    find_appropriate_k,
    solve_mt_grdpt,
    solve_mt_mcmf,
    solve_mtp_mcmf,
)
from .mpft import (
    AllocationMatrix,
    MpftInstance,
    ObjectiveBounds,
    budget_grid,
    compute_bounds,
    exact_enum_oracle,
    scalarized,
    solve_c_grd,
    solve_c_ilp,
    solve_w_grd,
    solve_w_ilp,
    weight_grid,
)
from .scenario import (
    ProblemMode,
    ScenarioConfig,
    TaskDistribution,
    generate_instance,
    instance_digest,
    instance_mode,
)
from .utils import batched, parallel_map, timed, worker_count

logger = logging.getLogger(__name__)

TEMPLATES_DIR = os.path.join(os.path.dirname(__file__), "templates")

SOLVERS: dict[str, ProblemMode] = {
    "mt-mcmf": ProblemMode.FPMT,
    "mtp-mcmf": ProblemMode.FPMT,
    "mt-grdpt": ProblemMode.FPMT,
    "appropriate-k": ProblemMode.FPMT,
    "w-ilp": ProblemMode.MPFT,
    "c-ilp": ProblemMode.MPFT,
    "w-grd": ProblemMode.MPFT,
    "c-grd": ProblemMode.MPFT,
    "oracle": None,
}

REPORT_HEADER = [
    "solver", "instance_digest", "k", "k1", "k2", "budget",
    "accomplished", "total_distance", "mean_completion_time", "performer_variance", "appropriate_k",
    "incentive", "distance", "scalarized", "runtime_ms",
]

SWEEP_HEADER = ["sweep", "axis", "value", "seed", "stat"] + [
    c for c in REPORT_HEADER if c != "instance_digest"
] + ["q", "instance_digest"]

METRIC_COLUMNS = [
    "accomplished", "total_distance", "mean_completion_time", "performer_variance", "appropriate_k",
    "incentive", "distance", "scalarized", "runtime_ms",
]


# =========================================
# SINGLE RUNS
# =========================================

@dataclass(frozen=True)
class SolverParams:
    """Per-run solver parameters (unused ones are ignored by the chosen solver)"""
    k: int | None = None
    k1: float = 0.5
    k2: float = 0.5
    budget: float | None = None
    speed: float = 70.0
    tolerance: float = 0.01

    @classmethod
    def from_dict(cls, data: dict | None) -> "SolverParams":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown solver parameters: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunReport:
    """Outcome of one solver run"""
    solver: str
    instance_digest: str
    parameters: dict
    objectives: dict
    details: dict = field(default_factory=dict)
    runtime_ms: float = 0.0

    def to_dict(self, include_runtime: bool = True) -> dict:
        data = {
            "solver": self.solver,
            "instance_digest": self.instance_digest,
            "parameters": self.parameters,
            "objectives": self.objectives,
            "details": self.details,
        }
        if include_runtime:
            data["runtime_ms"] = self.runtime_ms
        return data

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2)

    def row(self) -> dict:
        """Flat record keyed by REPORT_HEADER"""
        values = {**self.parameters, **self.objectives}
        row = {c: values.get(c) for c in REPORT_HEADER}
        row["solver"] = self.solver
        row["instance_digest"] = self.instance_digest
        row["runtime_ms"] = self.runtime_ms
        return row


def _fpmt_report(a: FpmtAssignment, params: SolverParams) -> tuple[dict, dict]:
    metrics = assignment_metrics(a, params.speed)
    objectives = {
        "accomplished": a.accomplished,
        "total_distance": a.total_distance,
        "mean_completion_time": metrics.mean_completion_time,
        "performer_variance": metrics.performer_variance,
    }
    details = {"assignment": a.to_dict(), "metrics": metrics.to_dict()}
    return objectives, details


def _run_fpmt(name: str, instance: FpmtInstance, params: SolverParams, settings: SolverSettings):
    parameters: dict[str, Any] = {"q": instance.quota}
    found = None
    if name == "mt-grdpt":
        a = solve_mt_grdpt(instance)
    elif name == "mt-mcmf":
        a = solve_mt_mcmf(instance, enumerate_full(instance, settings))
    elif name == "mtp-mcmf":
        if params.k is None:
            raise ParameterError("mtp-mcmf needs the pruning width k")
        parameters["k"] = params.k
        a = solve_mtp_mcmf(instance, params.k, settings)
    elif name == "appropriate-k":
        found = find_appropriate_k(instance, params.tolerance, settings)
        parameters["tolerance"] = params.tolerance
        a = found.assignment
    else:
        if params.k is not None:
            parameters["k"] = params.k
            family = enumerate_pruned(instance, params.k, settings)
        else:
            family = enumerate_full(instance, settings)
        a = exact_oracle(instance, family)
    a.check(instance, unique_sets=name != "mt-grdpt")
    objectives, details = _fpmt_report(a, params)
    if found is not None:
        objectives["appropriate_k"] = found.k
        details["reference_distance"] = found.reference_distance
    return parameters, objectives, details


def _mpft_objectives(x: AllocationMatrix, bounds: ObjectiveBounds, k1: float, k2: float) -> dict:
    return {
        "incentive": x.incentive,
        "distance": x.distance,
        "scalarized": scalarized(x, bounds, k1, k2),
    }


def _run_mpft(
    name: str, instance: MpftInstance, params: SolverParams, bounds: ObjectiveBounds | None
):
    bounds = bounds or compute_bounds(instance)
    details: dict[str, Any] = {"bounds": bounds.to_dict()}
    if name in ("w-ilp", "w-grd"):
        parameters = {"k1": params.k1, "k2": params.k2}
        solve = solve_w_ilp if name == "w-ilp" else solve_w_grd
        x = solve(instance, params.k1, params.k2, bounds)
        k1, k2 = params.k1, params.k2
    elif name in ("c-ilp", "c-grd"):
        if params.budget is None:
            raise ParameterError(f"{name} needs an incentive budget")
        parameters = {"budget": params.budget}
        solve = solve_c_ilp if name == "c-ilp" else solve_c_grd
        x = solve(instance, params.budget, bounds)
        k1, k2 = params.k1, params.k2
    else:
        parameters = {"budget": params.budget} if params.budget is not None else {}
        result = exact_enum_oracle(instance, params.budget)
        if len(result) == 0:
            raise InfeasibleError("no feasible allocation within the budget")
        cheapest = result[min(range(len(result)), key=lambda r: (result.incentives[r], result.distances[r]))]
        nearest = result[min(range(len(result)), key=lambda r: (result.distances[r], result.incentives[r]))]
        details.update({
            "feasible_allocations": len(result),
            "min_incentive_allocation": cheapest.to_dict(),
            "min_distance_allocation": nearest.to_dict(),
            "non_dominated": [list(p) for p in result.non_dominated()],
        })
        objectives = {"incentive": cheapest.incentive, "distance": nearest.distance}
        return parameters, objectives, details

    x.check(instance)
    details["allocation"] = x.to_dict()
    return parameters, _mpft_objectives(x, bounds, k1, k2), details


def run_solver(
    instance: FpmtInstance | MpftInstance,
    solver: str,
    params: SolverParams | None = None,
    settings: SolverSettings | None = None,
    bounds: ObjectiveBounds | None = None,
    digest: str | None = None,
) -> RunReport:
    """
    Run one named solver and wrap the result in a RunReport.

    Example:
        run_solver(instance, "mtp-mcmf", SolverParams(k=12)).objectives["total_distance"]
    """
    if solver not in SOLVERS:
        raise ParameterError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    params = params or SolverParams()
    mode = instance_mode(instance)
    expected = SOLVERS[solver]
    if expected is not None and expected is not mode:
        raise ModeMismatchError(
            f"solver {solver} works on {expected.value} instances, got a {mode.value} instance"
        )

    with timed() as watch:
        if mode is ProblemMode.FPMT:
            parameters, objectives, details = _run_fpmt(solver, instance, params, settings or SolverSettings())
        else:
            parameters, objectives, details = _run_mpft(solver, instance, params, bounds)
    logger.info("%s finished in %.1f ms", solver, watch.elapsed_ms)
    return RunReport(
        solver=solver,
        instance_digest=digest or instance_digest(instance),
        parameters=parameters,
        objectives=objectives,
        details=details,
        runtime_ms=watch.elapsed_ms,
    )


# =========================================
# SWEEPS
# =========================================

class SweepAxis(Enum):
    """Swept parameter"""
    TASKS = "tasks"
    PARTICIPANTS = "participants"
    Q = "q"
    K = "k"
    WEIGHTS = "weights"
    BUDGETS = "budgets"
    DISTRIBUTION = "distribution"

    @property
    def structural(self) -> bool:
        """Axes that change the generated instance"""
        return self in (SweepAxis.TASKS, SweepAxis.PARTICIPANTS, SweepAxis.Q, SweepAxis.DISTRIBUTION)


def parse_seeds(text: str | list | None) -> list[int]:
    """'a..b' (inclusive), a single integer, or an explicit list"""
    if text is None:
        return [0]
    if isinstance(text, list):
        return [int(s) for s in text]
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
            if hi < lo:
                raise ConfigError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise ConfigError(f"seeds must look like 'a..b', got {text!r}")


@dataclass
class SweepSpec:
    """One experiment: an axis, its values, seeds, solvers and the base scenario"""
    name: str
    axis: SweepAxis
    values: list = field(default_factory=list)
    solvers: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    params: SolverParams = field(default_factory=SolverParams)
    description: str = ""
    enumeration_budget: int | None = None

    def __post_init__(self):
        for s in self.solvers:
            if s not in SOLVERS:
                raise ConfigError(f"sweep {self.name}: unknown solver {s!r}")
        if not self.solvers:
            raise ConfigError(f"sweep {self.name}: no solvers given")
        if self.axis is SweepAxis.BUDGETS and isinstance(self.values, int):
            return
        if self.axis is SweepAxis.WEIGHTS and isinstance(self.values, int):
            self.values = [list(w) for w in weight_grid(self.values)]
        if not self.values:
            raise ConfigError(f"sweep {self.name}: no values given")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        try:
            return cls(
                name=data.get("name", "sweep"),
                axis=SweepAxis(data["axis"]),
                values=data.get("values", []),
                solvers=list(data.get("solvers", [])),
                seeds=parse_seeds(data.get("seeds")),
                scenario=ScenarioConfig.from_dict(data.get("scenario")),
                params=SolverParams.from_dict(data.get("params")),
                description=data.get("description", ""),
                enumeration_budget=data.get("enumeration_budget"),
            )
        except KeyError as e:
            raise ConfigError(f"sweep spec misses field {e}")
        except (TypeError, ValueError) as e:
            if isinstance(e, AllocationError):
                raise
            raise ConfigError(f"invalid sweep spec: {e}")

    @classmethod
    def from_yaml(cls, yaml_str: str) -> "SweepSpec":
        """Load sweep from YAML string"""
        try:
            data = yaml.safe_load(yaml_str)
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid sweep YAML: {e}")
        if not isinstance(data, dict):
            raise ConfigError("sweep spec must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def from_file(cls, path: str | Path) -> "SweepSpec":
        with open(path, "r") as f:
            return cls.from_yaml(f.read())


def list_presets() -> list[str]:
    if not os.path.isdir(TEMPLATES_DIR):
        return []
    return sorted(f[:-5] for f in os.listdir(TEMPLATES_DIR) if f.endswith(".yaml"))


def load_preset(name: str) -> SweepSpec:
    path = os.path.join(TEMPLATES_DIR, f"{name}.yaml")
    if not os.path.exists(path):
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return SweepSpec.from_file(path)


@dataclass(frozen=True)
class _GridPoint:
    sweep: str
    axis: SweepAxis
    value: Any
    seed: int
    solvers: tuple[str, ...]
    scenario: ScenarioConfig | None
    params: SolverParams
    instance: FpmtInstance | MpftInstance | None
    settings: SolverSettings


def _point_scenario(point: _GridPoint) -> ScenarioConfig:
    base = replace(point.scenario, seed=point.seed)
    if point.axis is SweepAxis.TASKS:
        return replace(base, n=int(point.value))
    if point.axis is SweepAxis.PARTICIPANTS:
        return replace(base, m=int(point.value))
    if point.axis is SweepAxis.Q:
        return replace(base, q=int(point.value))
    if point.axis is SweepAxis.DISTRIBUTION:
        return replace(base, distribution=TaskDistribution(point.value))
    return base


def _point_runs(point: _GridPoint, instance, bounds) -> list[tuple[Any, SolverParams]]:
    """(row value, params) pairs solved on this grid point's instance"""
    if point.axis is SweepAxis.K:
        return [(point.value, replace(point.params, k=int(point.value)))]
    if point.axis is SweepAxis.WEIGHTS:
        k1, k2 = (float(v) for v in point.value)
        return [(k1, replace(point.params, k1=k1, k2=k2))]
    if point.axis is SweepAxis.BUDGETS:
        budgets = budget_grid(bounds, point.value) if isinstance(point.value, int) else [float(point.value)]
        return [(b, replace(point.params, budget=b)) for b in budgets]
    return [(point.value, point.params)]


def _solve_point(point: _GridPoint) -> list[dict]:
    """Rows for one grid point; top-level so process pools can pickle it"""
    instance = point.instance
    if instance is None:
        instance, _ = generate_instance(_point_scenario(point))
    digest = instance_digest(instance)
    bounds = compute_bounds(instance) if isinstance(instance, MpftInstance) else None
    rows = []
    for value, params in _point_runs(point, instance, bounds):
        for solver in point.solvers:
            report = run_solver(instance, solver, params, point.settings, bounds, digest)
            row = report.row()
            row.update(sweep=point.sweep, axis=point.axis.value, value=value,
                       seed=point.seed, stat="run")
            row["q"] = instance.quota if isinstance(instance, FpmtInstance) else None
            rows.append(row)
    return rows


def _guarded(point: _GridPoint) -> list[dict] | SweepError:
    try:
        return _solve_point(point)
    except AllocationError as e:
        return SweepError(f"{point.axis.value}={point.value} seed={point.seed}: {e}", e.exit_code)


def _grid(spec: SweepSpec, instance, settings: SolverSettings) -> list[_GridPoint]:
    if spec.axis.structural and instance is not None:
        raise ParameterError(f"axis {spec.axis.value} changes the instance; supply a scenario, not an instance file")
    mode = instance_mode(instance) if instance is not None else spec.scenario.mode
    needs = {SweepAxis.K: ProblemMode.FPMT, SweepAxis.Q: ProblemMode.FPMT,
             SweepAxis.WEIGHTS: ProblemMode.MPFT, SweepAxis.BUDGETS: ProblemMode.MPFT}.get(spec.axis)
    if needs is not None and needs is not mode:
        raise ModeMismatchError(f"axis {spec.axis.value} needs a {needs.value} instance, got {mode.value}")
    values = [spec.values] if spec.axis is SweepAxis.BUDGETS and isinstance(spec.values, int) else spec.values
    seeds = [spec.scenario.seed] if instance is not None else spec.seeds
    return [
        _GridPoint(
            sweep=spec.name, axis=spec.axis, value=value, seed=seed,
            solvers=tuple(spec.solvers), scenario=spec.scenario, params=spec.params,
            instance=instance, settings=settings,
        )
        for value in values
        for seed in seeds
    ]


def run_sweep(
    spec: SweepSpec,
    instance: FpmtInstance | MpftInstance | None = None,
    settings: SolverSettings | None = None,
    workers: int | None = None,
) -> Iterator[dict]:
    """
    Yield one row per (grid value, seed, solver) in grid order.

    Grid points run in batches on `workers` processes; rows of completed points are yielded
    before a failing point raises SweepError.
    """
    # grid points are the parallel unit; route costing inside a point stays serial
    settings = replace(settings or SolverSettings(), workers=1)
    if spec.enumeration_budget is not None:
        settings = replace(settings, enumeration_budget=int(spec.enumeration_budget))
    grid = _grid(spec, instance, settings)
    workers = worker_count(workers)
    logger.info("sweep %s: %d grid points on %d worker(s)", spec.name, len(grid), workers)
    for batch in batched(grid, max(1, workers * 2)):
        for result in parallel_map(_guarded, batch, workers):
            if isinstance(result, SweepError):
                raise result
            yield from result


_NUMERIC = set(METRIC_COLUMNS) | {"k", "k1", "k2", "budget", "q"}


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """
    Mean and sample standard deviation of every metric per (sweep, axis, value, solver,
    parameters), computed in DuckDB. Groups keep the order of their first row.
    """
    if not rows:
        return []
    keys = ["sweep", "axis", "value", "solver", "k", "k1", "k2", "budget"]
    con = duckdb.connect(":memory:")
    try:
        con.execute(
            "CREATE TABLE runs (ord INTEGER, sweep VARCHAR, axis VARCHAR, value VARCHAR, "
            "solver VARCHAR, k VARCHAR, k1 VARCHAR, k2 VARCHAR, budget VARCHAR, "
            + ", ".join(f"{c} DOUBLE" for c in METRIC_COLUMNS) + ")"
        )
        con.executemany(
            f"INSERT INTO runs VALUES ({', '.join(['?'] * (1 + len(keys) + len(METRIC_COLUMNS)))})",
            [
                [n] + [None if r.get(k) is None else str(r[k]) for k in keys]
                + [None if r.get(c) is None else float(r[c]) for c in METRIC_COLUMNS]
                for n, r in enumerate(rows)
            ],
        )
        selects = ", ".join(
            f"avg({c}) AS mean_{c}, stddev_samp({c}) AS sd_{c}" for c in METRIC_COLUMNS
        )
        group = ", ".join(keys)
        result = con.execute(
            f"SELECT {group}, {selects} FROM runs GROUP BY {group} ORDER BY min(ord)"
        ).fetchall()
    finally:
        con.close()

    out = []
    for record in result:
        key_values = dict(zip(keys, record[:len(keys)]))
        stats = record[len(keys):]
        for stat, offset in (("mean", 0), ("stddev", 1)):
            row = {c: None for c in SWEEP_HEADER}
            row.update(key_values)
            row["stat"] = stat
            for n, c in enumerate(METRIC_COLUMNS):
                row[c] = stats[2 * n + offset]
            out.append(row)
    return out


# =========================================
# OUTPUT
# =========================================

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: Iterable[dict], header: list[str], stream, write_header: bool = True) -> int:
    """Write rows under a fixed header; flushes after every row and returns the row count"""
    writer = csv.writer(stream, lineterminator="\n")
    if write_header:
        writer.writerow(header)
    count = 0
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in header])
        stream.flush()
        count += 1
    return count


def report_csv(report: RunReport, include_header: bool = True) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if include_header:
        writer.writerow(REPORT_HEADER)
    row = report.row()
    writer.writerow([_cell(row.get(c)) for c in REPORT_HEADER])
    return buffer.getvalue()
