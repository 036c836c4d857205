"""
Distance primitives for participant, task and area locations.

Two coordinate modes:
- geographic: x = longitude, y = latitude (degrees); great-circle distance (haversine)
- planar: x = meters east, y = meters north; straight-line distance

All distances are meters as floats.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence
import math

import numpy as np

from .errors import ModeMismatchError, ParameterError

EARTH_RADIUS_M = 6_371_000.0


class CoordMode(Enum):
    """Coordinate system of a Location"""
    GEOGRAPHIC = "geographic"
    PLANAR = "planar"


@dataclass(frozen=True)
class Location:
    """A point in geographic (lon/lat degrees) or planar (meters) coordinates"""
    mode: CoordMode
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ParameterError(f"coordinates must be finite, got ({self.x}, {self.y})")
        if self.mode is CoordMode.GEOGRAPHIC:
            if not -90.0 <= self.y <= 90.0:
                raise ParameterError(f"latitude must lie in [-90, 90], got {self.y}")
            if not -180.0 <= self.x <= 180.0:
                raise ParameterError(f"longitude must lie in [-180, 180], got {self.x}")

    @classmethod
    def geographic(cls, lat: float, lon: float) -> "Location":
        return cls(CoordMode.GEOGRAPHIC, float(lon), float(lat))

    @classmethod
    def planar(cls, x: float, y: float) -> "Location":
        return cls(CoordMode.PLANAR, float(x), float(y))

    @property
    def lat(self) -> float:
        return self.y

    @property
    def lon(self) -> float:
        return self.x

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y}

    @classmethod
    def from_dict(cls, data: dict, mode: CoordMode) -> "Location":
        return cls(mode, float(data["x"]), float(data["y"]))


def _haversine(a: Location, b: Location) -> float:
    lat1, lon1, lat2, lon2 = map(math.radians, (a.y, a.x, b.y, b.x))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    # h can creep past 1 for near-antipodal points
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(min(1.0, h)))


def distance(a: Location, b: Location) -> float:
    """
    Distance in meters between two locations of the same mode.

    Example:
        distance(Location.planar(0, 0), Location.planar(3, 4))  # 5.0
    """
    if a.mode is not b.mode:
        raise ModeMismatchError(f"cannot measure {a.mode.value} against {b.mode.value} location")
    if a == b:
        return 0.0
    if a.mode is CoordMode.GEOGRAPHIC:
        return _haversine(a, b)
    return math.hypot(b.x - a.x, b.y - a.y)


def common_mode(points: Sequence[Location]) -> CoordMode:
    """Return the single mode shared by all points"""
    if not points:
        raise ParameterError("need at least one location")
    mode = points[0].mode
    for i, p in enumerate(points):
        if p.mode is not mode:
            raise ModeMismatchError(
                f"location {i} is {p.mode.value}, expected {mode.value}"
            )
    return mode


def centroid(points: Sequence[Location]) -> Location:
    """Arithmetic mean of the coordinates (adequate at city scale)"""
    mode = common_mode(points)
    x = sum(p.x for p in points) / len(points)
    y = sum(p.y for p in points) / len(points)
    return Location(mode, x, y)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric pairwise distances (meters) with zero diagonal"""
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, key):
        return self.entries[key]

    def submatrix(self, indices: Sequence[int]) -> np.ndarray:
        """Principal submatrix over the given node indices, in the given order"""
        idx = np.asarray(indices, dtype=int)
        return self.entries[np.ix_(idx, idx)]

    def check(self, rtol: float = 1e-9) -> None:
        """Raise ValueError if symmetry, zero diagonal or triangle inequality fails"""
        d = self.entries
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0.0):
            raise ValueError("distance matrix has a nonzero diagonal")
        if np.any(d < 0):
            raise ValueError("distance matrix has negative entries")
        # d[i, k] <= d[i, j] + d[j, k] for all j
        via = d[:, :, None] + d[None, :, :]
        shortest = via.min(axis=1)
        if np.any(d > shortest * (1 + rtol) + 1e-9):
            raise ValueError("distance matrix violates the triangle inequality")


def build_distance_matrix(points: Sequence[Location]) -> DistanceMatrix:
    """
    Pairwise distance matrix; entries[i][j] == distance(points[i], points[j]).

    Example:
        build_distance_matrix([Location.planar(0, 0), Location.planar(0, 70)])[0, 1]  # 70.0
    """
    common_mode(points)
    n = len(points)
    entries = np.zeros((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            entries[i, j] = entries[j, i] = distance(points[i], points[j])
    return DistanceMatrix(entries)
