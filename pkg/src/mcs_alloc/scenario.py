"""
Seeded scenario generation and instance files.

Generation reproduces the experiment setups: participants spread over a user area, tasks
placed by distribution (compact / scattered / hybrid), and for MPFT a grid of working areas
with random populations and inversely proportional incentives.

Instance files are YAML documents (format_version 1) holding the entities, the config echo
and, for MPFT, the explicit distance matrix.
"""

from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any
import hashlib
import logging
import math

import duckdb
import numpy as np
import yaml

from .errors import ConfigError, InstanceParseError, ParameterError, VersionError
from .fpmt import DEFAULT_ENUMERATION_BUDGET, FpmtInstance, Participant, Task
from .geo import CoordMode, Location
from .mpft import MpftInstance, MpftTask, WorkingArea

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
RNG_NAME = "PCG64"
POPULATION_RETRIES = 100


class ProblemMode(Enum):
    """Allocation regime"""
    FPMT = "fpmt"
    MPFT = "mpft"


class TaskDistribution(Enum):
    """Task placement relative to the user area"""
    COMPACT = "compact"        # centered sub-box
    SCATTERED = "scattered"    # enlarged box around the user area
    HYBRID = "hybrid"          # the user area itself


# =========================================
# CONFIGURATION
# =========================================

@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; geographic boxes use x = longitude, y = latitude"""
    mode: CoordMode = CoordMode.GEOGRAPHIC
    x_min: float = -4.03
    y_min: float = 5.30
    x_max: float = -4.00
    y_max: float = 5.33

    def __post_init__(self):
        values = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in values):
            raise ConfigError(f"bounding box corners must be finite, got {values}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(f"bounding box needs min < max on both axes, got {values}")
        if self.mode is CoordMode.GEOGRAPHIC:
            if not (-90 <= self.y_min and self.y_max <= 90 and -180 <= self.x_min and self.x_max <= 180):
                raise ConfigError(f"geographic box out of range: {values}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2

    def scaled(self, factor: float) -> "BoundingBox":
        """Same center, linear extent multiplied by factor"""
        cx, cy = self.center
        hw = (self.x_max - self.x_min) * factor / 2
        hh = (self.y_max - self.y_min) * factor / 2
        return BoundingBox(self.mode, cx - hw, cy - hh, cx + hw, cy + hh)

    def contains(self, loc: Location) -> bool:
        return self.x_min <= loc.x <= self.x_max and self.y_min <= loc.y <= self.y_max

    def sample(self, rng: np.random.Generator, count: int) -> list[Location]:
        xs = rng.uniform(self.x_min, self.x_max, size=count)
        ys = rng.uniform(self.y_min, self.y_max, size=count)
        return [Location(self.mode, float(x), float(y)) for x, y in zip(xs, ys)]

    def split(self, count: int) -> list["BoundingBox"]:
        """Partition into `count` equal rectangles, row-major from the lower-left corner"""
        rows = max(r for r in range(1, int(math.isqrt(count)) + 1) if count % r == 0)
        cols = count // rows
        w = (self.x_max - self.x_min) / cols
        h = (self.y_max - self.y_min) / rows
        return [
            BoundingBox(
                self.mode,
                self.x_min + c * w, self.y_min + r * h,
                self.x_min + (c + 1) * w, self.y_min + (r + 1) * h,
            )
            for r in range(rows)
            for c in range(cols)
        ]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "x_min": self.x_min,
            "y_min": self.y_min,
            "x_max": self.x_max,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundingBox":
        try:
            return cls(
                mode=CoordMode(data.get("mode", "geographic")),
                x_min=float(data["x_min"]),
                y_min=float(data["y_min"]),
                x_max=float(data["x_max"]),
                y_max=float(data["y_max"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid user_area: {e}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Generation parameters; None means the mode's default (q: drawn per run from [2, 7])"""
    seed: int = 0
    mode: ProblemMode = ProblemMode.FPMT
    m: int | None = None
    n: int | None = None
    q: int | None = None
    p: int | None = None
    distribution: TaskDistribution = TaskDistribution.HYBRID
    user_area: BoundingBox = field(default_factory=BoundingBox)
    speed: float = 70.0
    area_count: int = 6
    area_pop_range: tuple[int, int] = (10, 100)
    incentive_range: tuple[float, float] = (1.0, 10.0)
    compact_fraction: float = 0.25
    scattered_scale: float = 2.0

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        for name in ("m", "n", "q", "p"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.q is not None and self.n is not None and self.q > self.n:
            raise ConfigError(f"q={self.q} exceeds n={self.n}")
        if self.speed <= 0:
            raise ConfigError(f"speed must be positive, got {self.speed}")
        if self.area_count < 1:
            raise ConfigError(f"area_count must be positive, got {self.area_count}")
        lo, hi = self.area_pop_range
        if not 1 <= lo <= hi:
            raise ConfigError(f"area_pop_range needs 1 <= lo <= hi, got {self.area_pop_range}")
        c_lo, c_hi = self.incentive_range
        if not 0 < c_lo <= c_hi:
            raise ConfigError(f"incentive_range needs 0 < lo <= hi, got {self.incentive_range}")
        if not 0 < self.compact_fraction <= 1:
            raise ConfigError(f"compact_fraction must lie in (0, 1], got {self.compact_fraction}")
        if self.scattered_scale < 1:
            raise ConfigError(f"scattered_scale must be >= 1, got {self.scattered_scale}")

    @property
    def participants(self) -> int:
        return self.m if self.m is not None else 10

    @property
    def tasks(self) -> int:
        return self.n if self.n is not None else 20

    @property
    def capacity(self) -> int:
        if self.p is not None:
            return self.p
        return 6 if self.mode is ProblemMode.FPMT else 5

    def task_box(self) -> BoundingBox:
        if self.distribution is TaskDistribution.COMPACT:
            return self.user_area.scaled(self.compact_fraction)
        if self.distribution is TaskDistribution.SCATTERED:
            return self.user_area.scaled(self.scattered_scale)
        return self.user_area

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["distribution"] = self.distribution.value
        data["user_area"] = self.user_area.to_dict()
        data["area_pop_range"] = list(self.area_pop_range)
        data["incentive_range"] = list(self.incentive_range)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        try:
            if "mode" in data:
                data["mode"] = ProblemMode(data["mode"])
            if "distribution" in data:
                data["distribution"] = TaskDistribution(data["distribution"])
        except ValueError as e:
            raise ConfigError(str(e))
        if "user_area" in data:
            data["user_area"] = BoundingBox.from_dict(data["user_area"])
        if "area_pop_range" in data:
            data["area_pop_range"] = tuple(int(v) for v in data["area_pop_range"])
        if "incentive_range" in data:
            data["incentive_range"] = tuple(float(v) for v in data["incentive_range"])
        return cls(**data)

    @classmethod
    def from_yaml(cls, yaml_str: str) -> "ScenarioConfig":
        """Load config from YAML string"""
        try:
            return cls.from_dict(yaml.safe_load(yaml_str))
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid scenario YAML: {e}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        with open(path, "r") as f:
            return cls.from_yaml(f.read())

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# =========================================
# TOWERS
# =========================================

@dataclass(frozen=True)
class Tower:
    """Cell tower position from a user-supplied CSV"""
    id: str
    location: Location


def load_towers_csv(path: str | Path) -> list[Tower]:
    """
    Read `id,lat,lon` rows (decimal degrees) through DuckDB, in file order.

    Example:
        towers = load_towers_csv("towers.csv")
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"tower file not found: {path}")
    escaped = str(path).replace("'", "''")
    con = duckdb.connect(":memory:")
    try:
        rows = con.execute(
            f"""
            SELECT CAST(id AS VARCHAR), CAST(lat AS DOUBLE), CAST(lon AS DOUBLE)
            FROM read_csv('{escaped}', header = true, all_varchar = true)
            """
        ).fetchall()
    except duckdb.Error as e:
        raise ConfigError(f"cannot read tower CSV {path} (expected header id,lat,lon): {e}")
    finally:
        con.close()
    try:
        towers = [Tower(tid, Location.geographic(lat, lon)) for tid, lat, lon in rows]
    except (ParameterError, TypeError) as e:
        raise ConfigError(f"invalid tower coordinates in {path}: {e}")
    logger.info("loaded %d towers from %s", len(towers), path)
    return towers


def _towers_in(towers: list[Tower], box: BoundingBox) -> list[Tower]:
    if box.mode is not CoordMode.GEOGRAPHIC:
        raise ConfigError("tower-backed generation needs a geographic user area")
    return [t for t in towers if box.contains(t.location)]


def _pick_towers(
    rng: np.random.Generator, towers: list[Tower], box: BoundingBox, count: int,
    distinct: bool, role: str,
) -> list[Location]:
    pool = _towers_in(towers, box)
    if not pool or (distinct and len(pool) < count):
        raise ConfigError(f"{len(pool)} tower(s) inside the {role} box, need {count}")
    picks = rng.choice(len(pool), size=count, replace=not distinct)
    return [pool[int(k)].location for k in picks]


# =========================================
# GENERATION
# =========================================

def _draw_quota(rng: np.random.Generator, config: ScenarioConfig) -> int:
    if config.q is not None:
        if config.q > config.tasks:
            raise ConfigError(f"q={config.q} exceeds n={config.tasks}")
        return config.q
    hi = min(7, config.tasks)
    return int(rng.integers(min(2, hi), hi + 1))


def resolve_config(config: ScenarioConfig, rng: np.random.Generator) -> ScenarioConfig:
    """Config with every default made explicit (echoed into instance files)"""
    changes: dict[str, Any] = {"m": config.participants, "n": config.tasks, "p": config.capacity}
    if config.mode is ProblemMode.FPMT:
        changes["q"] = _draw_quota(rng, config)
    else:
        changes["m"] = config.area_count
    return replace(config, **changes)


def generate_fpmt(
    config: ScenarioConfig, towers: list[Tower] | None = None
) -> tuple[FpmtInstance, ScenarioConfig]:
    """
    FPMT instance and its resolved config; deterministic per seed.

    Participants are uniform over the user area, tasks uniform over the distribution's box.
    With towers, both sit on towers drawn from those boxes (tasks on distinct towers).
    """
    if config.mode is not ProblemMode.FPMT:
        raise ConfigError(f"generate_fpmt needs mode fpmt, got {config.mode.value}")
    rng = make_rng(config.seed)
    resolved = resolve_config(config, rng)
    m, n, q, p = resolved.m, resolved.n, resolved.q, resolved.p

    if towers is None:
        where_u = config.user_area.sample(rng, m)
        where_t = config.task_box().sample(rng, n)
    else:
        where_u = _pick_towers(rng, towers, config.user_area, m, distinct=False, role="user area")
        where_t = _pick_towers(rng, towers, config.task_box(), n, distinct=True, role="task")

    instance = FpmtInstance(
        participants=tuple(Participant(f"u{i}", loc) for i, loc in enumerate(where_u)),
        tasks=tuple(Task(f"t{j}", loc, p) for j, loc in enumerate(where_t)),
        quota=q,
    )
    logger.info("generated fpmt instance: seed=%d m=%d n=%d q=%d p=%d %s",
                config.seed, m, n, q, p, config.distribution.value)
    return instance, resolved


def _populations(rng: np.random.Generator, config: ScenarioConfig, demand: int) -> np.ndarray:
    lo, hi = config.area_pop_range
    for attempt in range(POPULATION_RETRIES):
        pops = rng.integers(lo, hi + 1, size=config.area_count)
        if int(pops.sum()) >= demand:
            if attempt:
                logger.info("population resampled %d time(s) to cover demand %d", attempt, demand)
            return pops
    raise ConfigError(
        f"area populations never covered total demand {demand} in {POPULATION_RETRIES} draws"
    )


def area_incentive(population: int, config: ScenarioConfig) -> float:
    """
    Inversely proportional incentive, scaled so the smallest population earns the top of
    incentive_range (100 / |A_i| with the default ranges).
    """
    return config.incentive_range[1] * config.area_pop_range[0] / population


def generate_mpft(
    config: ScenarioConfig, towers: list[Tower] | None = None
) -> tuple[MpftInstance, ScenarioConfig]:
    """
    MPFT instance and its resolved config; deterministic per seed.

    The user area is split into area_count equal rectangles whose centers are the reference
    points of D_ij.
    """
    if config.mode is not ProblemMode.MPFT:
        raise ConfigError(f"generate_mpft needs mode mpft, got {config.mode.value}")
    rng = make_rng(config.seed)
    resolved = resolve_config(config, rng)
    n, p = resolved.n, resolved.p

    pops = _populations(rng, config, n * p)
    areas = []
    for i, (box, pop) in enumerate(zip(config.user_area.split(config.area_count), pops)):
        cx, cy = box.center
        areas.append(WorkingArea(f"a{i}", Location(box.mode, cx, cy), int(pop), area_incentive(int(pop), config)))

    if towers is None:
        where_t = config.task_box().sample(rng, n)
    else:
        where_t = _pick_towers(rng, towers, config.task_box(), n, distinct=True, role="task")
    tasks = [MpftTask(f"t{j}", loc, p) for j, loc in enumerate(where_t)]

    instance = MpftInstance.from_locations(areas, tasks)
    logger.info("generated mpft instance: seed=%d areas=%d n=%d p=%d supply=%d",
                config.seed, len(areas), n, p, instance.supply)
    return instance, resolved


def generate_instance(config: ScenarioConfig, towers: list[Tower] | None = None):
    if config.mode is ProblemMode.FPMT:
        return generate_fpmt(config, towers)
    return generate_mpft(config, towers)


# =========================================
# INSTANCE FILES
# =========================================

def instance_mode(instance) -> ProblemMode:
    if isinstance(instance, FpmtInstance):
        return ProblemMode.FPMT
    if isinstance(instance, MpftInstance):
        return ProblemMode.MPFT
    raise ParameterError(f"not an instance: {type(instance).__name__}")


def _coord_mode(instance) -> CoordMode:
    if isinstance(instance, FpmtInstance):
        first = (instance.participants or instance.tasks)[0]
    else:
        first = instance.areas[0]
    return first.location.mode


def instance_to_dict(instance, config: ScenarioConfig | None = None) -> dict:
    mode = instance_mode(instance)
    data: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "mode": mode.value,
        "coordinates": _coord_mode(instance).value,
        "rng": RNG_NAME,
        "config": config.to_dict() if config else None,
    }
    if mode is ProblemMode.FPMT:
        data["quota"] = instance.quota
        data["participants"] = [{"id": u.id, **u.location.to_dict()} for u in instance.participants]
        data["tasks"] = [
            {"id": t.id, **t.location.to_dict(), "capacity": t.capacity} for t in instance.tasks
        ]
    else:
        data["areas"] = [
            {"id": a.id, **a.location.to_dict(), "population": a.population, "incentive": a.incentive}
            for a in instance.areas
        ]
        data["tasks"] = [
            {"id": t.id, **t.location.to_dict(), "demand": t.demand} for t in instance.tasks
        ]
        data["dist"] = [list(row) for row in instance.dist]
    return data


def dump_instance(instance, config: ScenarioConfig | None = None) -> str:
    return yaml.safe_dump(instance_to_dict(instance, config), sort_keys=False, default_flow_style=None)


def save_instance(instance, path: str | Path, config: ScenarioConfig | None = None) -> str:
    """Write the instance file; returns its digest"""
    Path(path).write_text(dump_instance(instance, config))
    return instance_digest(instance)


def instance_digest(instance) -> str:
    """SHA-256 over the canonical instance document (config echo excluded)"""
    return hashlib.sha256(dump_instance(instance).encode("utf-8")).hexdigest()


class _Document:
    """Parsed YAML plus node positions for error context"""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            self.root = yaml.compose(text)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f" line {mark.line + 1}" if mark else ""
            raise InstanceParseError(f"{source}:{where} invalid YAML: {getattr(e, 'problem', e)}")
        if not isinstance(self.data, dict):
            raise InstanceParseError(f"{source}: instance file must be a mapping")

    def line(self, section: str, index: int | None = None) -> int | None:
        if not isinstance(self.root, yaml.MappingNode):
            return None
        for key, value in self.root.value:
            if key.value != section:
                continue
            if index is not None and isinstance(value, yaml.SequenceNode) and index < len(value.value):
                return value.value[index].start_mark.line + 1
            return key.start_mark.line + 1
        return None

    def fail(self, message: str, section: str, index: int | None = None) -> InstanceParseError:
        line = self.line(section, index)
        where = f" line {line}" if line else ""
        return InstanceParseError(f"{self.source}:{where} {message}")

    def require(self, key: str) -> Any:
        if key not in self.data:
            raise InstanceParseError(f"{self.source}: missing required field '{key}'")
        return self.data[key]

    def entities(self, section: str, fields: tuple[str, ...]) -> list[dict]:
        items = self.require(section)
        if not isinstance(items, list):
            raise self.fail(f"'{section}' must be a list", section)
        for k, item in enumerate(items):
            if not isinstance(item, dict):
                raise self.fail(f"{section}[{k}] must be a mapping", section, k)
            for name in fields:
                if name not in item:
                    raise self.fail(f"{section}[{k}]: missing required field '{name}'", section, k)
        return items


def _location(doc: _Document, mode: CoordMode, item: dict, section: str, k: int) -> Location:
    try:
        return Location.from_dict(item, mode)
    except (ParameterError, TypeError, ValueError) as e:
        raise doc.fail(f"{section}[{k}]: {e}", section, k)


def parse_instance(text: str, source: str = "<string>"):
    """Parse an instance document; errors carry the offending field and line"""
    doc = _Document(text, source)
    version = doc.require("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"{source}: unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        mode = ProblemMode(doc.require("mode"))
        coords = CoordMode(doc.require("coordinates"))
    except ValueError as e:
        raise InstanceParseError(f"{source}: {e}")

    try:
        if mode is ProblemMode.FPMT:
            quota = doc.require("quota")
            participants = [
                Participant(str(u["id"]), _location(doc, coords, u, "participants", k))
                for k, u in enumerate(doc.entities("participants", ("id", "x", "y")))
            ]
            tasks = [
                Task(str(t["id"]), _location(doc, coords, t, "tasks", k), int(t["capacity"]))
                for k, t in enumerate(doc.entities("tasks", ("id", "x", "y", "capacity")))
            ]
            return FpmtInstance(tuple(participants), tuple(tasks), int(quota))

        areas = [
            WorkingArea(
                str(a["id"]), _location(doc, coords, a, "areas", k),
                int(a["population"]), float(a["incentive"]),
            )
            for k, a in enumerate(doc.entities("areas", ("id", "x", "y", "population", "incentive")))
        ]
        tasks = [
            MpftTask(str(t["id"]), _location(doc, coords, t, "tasks", k), int(t["demand"]))
            for k, t in enumerate(doc.entities("tasks", ("id", "x", "y", "demand")))
        ]
        dist = doc.require("dist")
        if not isinstance(dist, list) or not all(isinstance(row, list) for row in dist):
            raise doc.fail("'dist' must be a list of rows", "dist")
        return MpftInstance(tuple(areas), tuple(tasks), tuple(tuple(float(v) for v in row) for row in dist))
    except InstanceParseError:
        raise
    except (ParameterError, TypeError, ValueError) as e:
        raise InstanceParseError(f"{source}: {e}")


def load_instance(path: str | Path):
    """Read an instance file written by save_instance (or by hand)"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InstanceParseError(f"cannot read instance file {path}: {e}")
    return parse_instance(text, str(path))


# =========================================
# VALIDATION
# =========================================

def validate_instance(instance) -> list[str]:
    """Problems that make the instance unsolvable or exceed solver limits (empty when fine)"""
    problems: list[str] = []
    if isinstance(instance, FpmtInstance):
        if not instance.participants:
            problems.append("instance has no participants")
            return problems
        try:
            instance.distances.check()
        except ValueError as e:
            problems.append(str(e))
        routes = math.comb(instance.n, instance.quota) * instance.m
        if routes > DEFAULT_ENUMERATION_BUDGET:
            problems.append(
                f"full enumeration needs {routes} routes (budget {DEFAULT_ENUMERATION_BUDGET}); "
                f"only mtp-mcmf with a small k and mt-grdpt apply"
            )
        capacity = sum(t.capacity for t in instance.tasks)
        if capacity < instance.m * instance.quota:
            logger.info("task capacity %d is below m*q=%d; some participants stay unassigned",
                        capacity, instance.m * instance.quota)
    elif isinstance(instance, MpftInstance):
        if not instance.feasible:
            problems.append(
                f"total area population {instance.supply} is below total task demand {instance.demand}"
            )
    else:
        problems.append(f"not an instance: {type(instance).__name__}")
    return problems
