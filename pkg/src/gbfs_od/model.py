"""Shared domain types and planar geometry helpers.

All coordinates enter as WGS84 degrees. Distances are computed on a local
equirectangular plane in meters, which at city scale stays within 0.1% of
great-circle distance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
M_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0

# projected coordinates are rounded to this many decimals (micrometers) before
# binning so points built exactly on a cell edge do not fall back a cell
_EDGE_DECIMALS = 6


class GbfsOdError(Exception):
    """Base class for all package errors."""


class DataError(GbfsOdError):
    """Input data is malformed or violates an invariant."""


class SchemaViolation(DataError):
    pass


class DuplicateVehicleId(DataError):
    def __init__(self, vehicle_id: str) -> None:
        super().__init__(f"duplicate vehicle id {vehicle_id!r} in one snapshot")
        self.vehicle_id = vehicle_id


class NonMonotonicStream(DataError):
    pass


class OutOfBounds(GbfsOdError):
    pass


class EndpointKind(str, enum.Enum):
    ORIGIN = "origin"
    DESTINATION = "destination"


class Algorithm(str, enum.Enum):
    STATIC = "static"
    RESETTING = "resetting"
    DYNAMIC = "dynamic"


def _check_latlon(lat: float, lon: float) -> None:
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise SchemaViolation(f"coordinate out of range: lat={lat}, lon={lon}")


@dataclass(frozen=True, slots=True)
class VehicleRecord:
    vehicle_id: str
    lat: float
    lon: float
    is_reserved: int
    is_disabled: int
    observed_at: int

    def __post_init__(self) -> None:
        if not self.vehicle_id:
            raise SchemaViolation("empty vehicle_id")
        _check_latlon(self.lat, self.lon)
        if self.observed_at <= 0:
            raise SchemaViolation(f"observed_at must be positive, got {self.observed_at}")


class Snapshot:
    """All available vehicles reported by one feed at one poll instant.

    Records are held column-wise; ``records`` materializes
    :class:`VehicleRecord` objects on demand. Instances are treated as
    immutable (the arrays are flagged read-only).
    """

    __slots__ = ("feed_id", "captured_at", "ttl", "vehicle_ids", "lat", "lon",
                 "is_reserved", "is_disabled")

    def __init__(
        self,
        feed_id: str,
        captured_at: int,
        ttl: int,
        vehicle_ids: Sequence[str],
        lat,
        lon,
        is_reserved=None,
        is_disabled=None,
    ) -> None:
        n = len(vehicle_ids)
        ids = tuple(vehicle_ids)
        lat_a = np.array(lat, dtype=np.float64).reshape(-1)
        lon_a = np.array(lon, dtype=np.float64).reshape(-1)
        res_a = np.zeros(n, np.int8) if is_reserved is None else np.array(is_reserved, np.int8).reshape(-1)
        dis_a = np.zeros(n, np.int8) if is_disabled is None else np.array(is_disabled, np.int8).reshape(-1)
        if not (len(lat_a) == len(lon_a) == len(res_a) == len(dis_a) == n):
            raise SchemaViolation("snapshot columns have different lengths")
        if captured_at <= 0:
            raise SchemaViolation(f"captured_at must be positive, got {captured_at}")
        if ttl < 0:
            raise SchemaViolation(f"ttl must be non-negative, got {ttl}")
        if n:
            if np.any(np.abs(lat_a) > 90.0) or np.any(np.abs(lon_a) > 180.0) \
                    or not (np.all(np.isfinite(lat_a)) and np.all(np.isfinite(lon_a))):
                raise SchemaViolation(f"coordinate out of range in feed {feed_id!r} at {captured_at}")
            if len(set(ids)) != n:
                seen: set[str] = set()
                dup = next(v for v in ids if v in seen or seen.add(v))
                raise DuplicateVehicleId(dup)
            if any(not v for v in ids):
                raise SchemaViolation("empty vehicle_id")
        for a in (lat_a, lon_a, res_a, dis_a):
            a.flags.writeable = False
        self.feed_id = feed_id
        self.captured_at = int(captured_at)
        self.ttl = int(ttl)
        self.vehicle_ids = ids
        self.lat = lat_a
        self.lon = lon_a
        self.is_reserved = res_a
        self.is_disabled = dis_a

    @classmethod
    def from_records(cls, feed_id: str, captured_at: int, ttl: int,
                     records: Sequence[VehicleRecord]) -> Snapshot:
        return cls(
            feed_id, captured_at, ttl,
            [r.vehicle_id for r in records],
            [r.lat for r in records],
            [r.lon for r in records],
            [r.is_reserved for r in records],
            [r.is_disabled for r in records],
        )

    def __len__(self) -> int:
        return len(self.vehicle_ids)

    @property
    def records(self) -> list[VehicleRecord]:
        return [
            VehicleRecord(v, float(la), float(lo), int(r), int(d), self.captured_at)
            for v, la, lo, r, d in zip(self.vehicle_ids, self.lat, self.lon,
                                       self.is_reserved, self.is_disabled)
        ]

    def with_ids(self, vehicle_ids: Sequence[str]) -> Snapshot:
        """Copy of this snapshot with the vehicle ids replaced, everything else shared."""
        return Snapshot(self.feed_id, self.captured_at, self.ttl, vehicle_ids,
                        self.lat, self.lon, self.is_reserved, self.is_disabled)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (
            self.feed_id == other.feed_id
            and self.captured_at == other.captured_at
            and self.ttl == other.ttl
            and self.vehicle_ids == other.vehicle_ids
            and np.array_equal(self.lat, other.lat)
            and np.array_equal(self.lon, other.lon)
            and np.array_equal(self.is_reserved, other.is_reserved)
            and np.array_equal(self.is_disabled, other.is_disabled)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (f"Snapshot(feed_id={self.feed_id!r}, captured_at={self.captured_at}, "
                f"ttl={self.ttl}, n={len(self)})")


@dataclass(frozen=True, slots=True)
class TripEndpoint:
    kind: EndpointKind
    lat: float
    lon: float
    at: int
    vendor: str
    source_algorithm: Algorithm


@dataclass(frozen=True, slots=True)
class TripOD:
    origin: TripEndpoint
    destination: TripEndpoint
    vehicle_id: str
    duration: float
    straight_line_distance: float
    average_speed: float

    @classmethod
    def between(cls, origin: TripEndpoint, destination: TripEndpoint, vehicle_id: str) -> TripOD:
        if destination.at <= origin.at:
            raise DataError("destination must come after origin")
        duration = float(destination.at - origin.at)
        dist = geo_distance((origin.lat, origin.lon), (destination.lat, destination.lon))
        return cls(origin, destination, vehicle_id, duration, dist, dist / duration)


# --------------------------------------------------------------------------
# geometry


@dataclass(frozen=True, slots=True)
class LocalProjection:
    """Equirectangular projection to meters around ``ref_lat``."""

    ref_lat: float
    lat0: float = 0.0
    lon0: float = 0.0

    @property
    def m_per_deg_lon(self) -> float:
        return M_PER_DEG * math.cos(math.radians(self.ref_lat))

    def forward(self, lat, lon):
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        return (lon - self.lon0) * self.m_per_deg_lon, (lat - self.lat0) * M_PER_DEG

    def inverse(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.lat0 + y / M_PER_DEG, self.lon0 + x / self.m_per_deg_lon

    @classmethod
    def for_bbox(cls, lat_min: float, lon_min: float, lat_max: float, lon_max: float) -> LocalProjection:
        return cls(ref_lat=0.5 * (lat_min + lat_max), lat0=lat_min, lon0=lon_min)


def geo_distance(a: tuple[float, float], b: tuple[float, float], ref_lat: float | None = None) -> float:
    """Planar distance in meters between two (lat, lon) points.

    The longitude scale uses ``ref_lat``; when omitted, the mean latitude of
    the two points is used, which keeps the function symmetric.
    """
    lat_a, lon_a = a
    lat_b, lon_b = b
    if ref_lat is None:
        ref_lat = 0.5 * (lat_a + lat_b)
    dx = (lon_b - lon_a) * M_PER_DEG * math.cos(math.radians(ref_lat))
    dy = (lat_b - lat_a) * M_PER_DEG
    return math.hypot(dx, dy)


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Regular square grid anchored at its southwest corner."""

    origin_corner: tuple[float, float]
    cell_size: float
    n_rows: int
    n_cols: int
    ref_lat: float

    def __post_init__(self) -> None:
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("grid needs at least one row and one column")

    @classmethod
    def covering(cls, bbox: tuple[float, float, float, float], cell_size: float) -> GridSpec:
        """Smallest grid of ``cell_size`` cells anchored at the bbox SW corner
        that contains every point of ``bbox`` (cells may overhang)."""
        lat_min, lon_min, lat_max, lon_max = bbox
        if lat_max < lat_min or lon_max < lon_min:
            raise ValueError(f"invalid bbox {bbox}")
        ref_lat = 0.5 * (lat_min + lat_max)
        proj = LocalProjection(ref_lat, lat_min, lon_min)
        x, y = proj.forward(lat_max, lon_max)
        x = round(float(x), _EDGE_DECIMALS)
        y = round(float(y), _EDGE_DECIMALS)
        return cls((lat_min, lon_min), float(cell_size),
                   int(math.floor(y / cell_size)) + 1, int(math.floor(x / cell_size)) + 1, ref_lat)

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def projection(self) -> LocalProjection:
        return LocalProjection(self.ref_lat, self.origin_corner[0], self.origin_corner[1])

    def project(self, lat, lon):
        """Grid-local planar coordinates (meters east, meters north of the corner)."""
        x, y = self.projection.forward(lat, lon)
        return np.round(x, _EDGE_DECIMALS), np.round(y, _EDGE_DECIMALS)

    def cell_bounds(self, index: int) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) in grid-local meters; the cell is [x0, x1) x [y0, y1)."""
        row, col = divmod(index, self.n_cols)
        s = self.cell_size
        return col * s, row * s, (col + 1) * s, (row + 1) * s

    def cell_polygon(self, index: int) -> list[list[float]]:
        """Closed lon/lat ring of the cell, counter-clockwise from the SW corner."""
        x0, y0, x1, y1 = self.cell_bounds(index)
        xs = np.array([x0, x1, x1, x0, x0])
        ys = np.array([y0, y0, y1, y1, y0])
        lat, lon = self.projection.inverse(xs, ys)
        return [[float(lo), float(la)] for la, lo in zip(lat, lon)]


def cell_index(p: tuple[float, float], grid: GridSpec) -> int:
    """Index of the half-open cell containing ``p``; raises OutOfBounds."""
    x, y = grid.project(p[0], p[1])
    col = math.floor(float(x) / grid.cell_size)
    row = math.floor(float(y) / grid.cell_size)
    if not (0 <= col < grid.n_cols and 0 <= row < grid.n_rows):
        raise OutOfBounds(f"point {p} outside grid")
    return row * grid.n_cols + col


def bbox_of(lats, lons) -> tuple[float, float, float, float]:
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if lats.size == 0:
        raise ValueError("cannot take the bounding box of zero points")
    return float(lats.min()), float(lons.min()), float(lats.max()), float(lons.max())


def iter_pairs(stream: Sequence[Snapshot]) -> Iterator[tuple[Snapshot, Snapshot]]:
    it = iter(stream)
    prev = next(it, None)
    for cur in it:
        yield prev, cur
        prev = cur


def check_monotonic(stream: Sequence[Snapshot]) -> None:
    last = None
    for snap in stream:
        if last is not None and snap.captured_at <= last:
            raise NonMonotonicStream(
                f"snapshot at {snap.captured_at} does not follow {last}")
        last = snap.captured_at
