"""Trip origin/destination inference for static, resetting and dynamic vehicle ids.

Static ids yield linked OD pairs. Resetting and dynamic ids only yield
unlinked endpoints, and those are never passed through :func:`filter_trips`
because a speed cannot be computed for an unlinked endpoint.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .model import (
    Algorithm,
    EndpointKind,
    LocalProjection,
    Snapshot,
    TripEndpoint,
    TripOD,
    bbox_of,
    check_monotonic,
)

__all__ = [
    "FilterConfig", "InferenceConfig", "IntervalMatch", "MPH", "endpoints_from_ods",
    "estimate_interval", "filter_trips", "infer_dynamic", "infer_resetting", "infer_static",
    "match_interval", "read_endpoints", "read_od_csv", "write_endpoints_csv", "write_od_csv",
]

log = logging.getLogger(__name__)

MPH = 0.44704  # m/s, exact


@dataclass(frozen=True)
class FilterConfig:
    max_duration: float = 7200.0
    max_speed: float = 15 * MPH
    min_speed: float = 2.2 * MPH

    def __post_init__(self) -> None:
        if not (self.max_speed > self.min_speed > 0):
            raise ValueError("need max_speed > min_speed > 0")
        if not self.max_duration > 0:
            raise ValueError("max_duration must be positive")


@dataclass(frozen=True)
class InferenceConfig:
    scrape_interval: float = 60.0
    gap_factor: float = 1.5
    buffer: float = 100.0
    drop_boundary_endpoints: bool = True
    include_disabled: bool = False
    filter: FilterConfig = field(default_factory=FilterConfig)

    def __post_init__(self) -> None:
        if not self.scrape_interval > 0:
            raise ValueError("scrape_interval must be positive")
        if self.gap_factor < 1:
            raise ValueError("gap_factor must be >= 1")
        if self.buffer < 0:
            raise ValueError("buffer must be >= 0")

    @property
    def gap_threshold(self) -> float:
        return self.gap_factor * self.scrape_interval


class _Records:
    """Column-wise view of every usable record in a stream."""

    def __init__(self, stream: Sequence[Snapshot], include_disabled: bool) -> None:
        check_monotonic(stream)
        self.snapshots = list(stream)
        codes: dict[str, int] = {}
        parts_code, parts_snap, parts_lat, parts_lon, parts_pos = [], [], [], [], []
        for s, snap in enumerate(self.snapshots):
            keep = np.ones(len(snap), bool) if include_disabled else snap.is_disabled == 0
            pos = np.nonzero(keep)[0]
            ids = snap.vehicle_ids
            parts_code.append(np.fromiter((codes.setdefault(ids[i], len(codes)) for i in pos),
                                          dtype=np.int64, count=len(pos)))
            parts_snap.append(np.full(len(pos), s, dtype=np.int64))
            parts_lat.append(snap.lat[pos])
            parts_lon.append(snap.lon[pos])
            parts_pos.append(pos)
        cat = lambda parts, dt: np.concatenate(parts) if parts else np.empty(0, dt)  # noqa: E731
        self.code = cat(parts_code, np.int64)
        self.snap = cat(parts_snap, np.int64)
        self.lat = cat(parts_lat, np.float64)
        self.lon = cat(parts_lon, np.float64)
        self.ids = list(codes)
        self.times = np.array([s.captured_at for s in self.snapshots], dtype=np.int64)
        self.t = self.times[self.snap] if len(self.snap) else np.empty(0, np.int64)
        self.bounds = np.searchsorted(self.snap, np.arange(len(self.snapshots) + 1))

    def __len__(self) -> int:
        return len(self.code)

    def endpoint(self, i: int, kind: EndpointKind, algorithm: Algorithm) -> TripEndpoint:
        snap = self.snapshots[self.snap[i]]
        return TripEndpoint(kind, float(self.lat[i]), float(self.lon[i]), snap.captured_at,
                            snap.feed_id, algorithm)


def _empty(stream) -> bool:
    if not stream:
        log.warning("empty snapshot stream; nothing to infer")
        return True
    return False


def infer_static(stream: Sequence[Snapshot], config: InferenceConfig) -> list[TripOD]:
    """OD pairs from a static-id stream.

    Per vehicle, any two consecutive sightings further apart than
    ``gap_factor * scrape_interval`` are one trip: the earlier sighting is the
    origin, the later one the destination.
    """
    if _empty(stream):
        return []
    rec = _Records(stream, config.include_disabled)
    order = np.lexsort((rec.t, rec.code))
    code, t = rec.code[order], rec.t[order]
    gap = (code[1:] == code[:-1]) & (np.diff(t) > config.gap_threshold)
    starts = order[:-1][gap]
    ends = order[1:][gap]
    trips = []
    for i, j in zip(starts.tolist(), ends.tolist()):
        o = rec.endpoint(i, EndpointKind.ORIGIN, Algorithm.STATIC)
        d = rec.endpoint(j, EndpointKind.DESTINATION, Algorithm.STATIC)
        trips.append(TripOD.between(o, d, rec.ids[rec.code[i]]))
    trips.sort(key=lambda tr: (tr.origin.at, tr.destination.at, tr.vehicle_id))
    return trips


def infer_resetting(stream: Sequence[Snapshot], config: InferenceConfig) -> list[TripEndpoint]:
    """Unlinked endpoints from a resetting-id stream: each id's first sighting is a
    destination and its last sighting an origin.

    With ``drop_boundary_endpoints`` the first sighting is ignored when it is in
    the stream's first snapshot and the last when it is in the final snapshot,
    since those only mark where observation began or ended.
    """
    if _empty(stream):
        return []
    rec = _Records(stream, config.include_disabled)
    if not len(rec):
        return []
    n_ids = len(rec.ids)
    idx = np.arange(len(rec))
    # records are in snapshot order, so the min/max record index per id is its first/last sighting
    first = np.full(n_ids, len(rec), dtype=np.int64)
    last = np.full(n_ids, -1, dtype=np.int64)
    np.minimum.at(first, rec.code, idx)
    np.maximum.at(last, rec.code, idx)
    n_snap = len(rec.snapshots)
    out = []
    for f in np.sort(first).tolist():
        if config.drop_boundary_endpoints and rec.snap[f] == 0:
            continue
        out.append((f, 1, rec.endpoint(f, EndpointKind.DESTINATION, Algorithm.RESETTING)))
    for l in np.sort(last).tolist():
        if config.drop_boundary_endpoints and rec.snap[l] == n_snap - 1:
            continue
        out.append((l, 0, rec.endpoint(l, EndpointKind.ORIGIN, Algorithm.RESETTING)))
    out.sort(key=lambda e: (e[0], e[1]))
    return [e for _, _, e in out]


@dataclass
class IntervalMatch:
    """Outcome of comparing two consecutive snapshots (record indices refer to
    the snapshots' own record order)."""

    shared: np.ndarray  # (k, 2) index pairs whose id is listed in both snapshots
    matched: np.ndarray  # (m, 2) greedy pairs treated as stationary vehicles
    distances: np.ndarray  # (m,) meters
    origins: np.ndarray  # indices into the earlier snapshot
    destinations: np.ndarray  # indices into the later snapshot


def _projection_for(stream: Sequence[Snapshot]) -> LocalProjection:
    lats = np.concatenate([s.lat for s in stream]) if stream else np.empty(0)
    lons = np.concatenate([s.lon for s in stream]) if stream else np.empty(0)
    if lats.size == 0:
        return LocalProjection(0.0)
    return LocalProjection.for_bbox(*bbox_of(lats, lons))


def match_interval(
    prev: Snapshot,
    nxt: Snapshot,
    buffer: float,
    projection: LocalProjection | None = None,
    include_disabled: bool = False,
) -> IntervalMatch:
    """Compare two consecutive snapshots of a dynamic-id feed.

    Records whose id appears in both are dropped as parked. The rest are paired
    greedily by ascending planar distance (ties to the lower index in ``prev``,
    then in ``nxt``) while the closest remaining pair is within ``buffer``
    meters. Leftovers in ``prev`` are origins, leftovers in ``nxt`` destinations.
    """
    if projection is None:
        projection = _projection_for([prev, nxt])
    ia = np.arange(len(prev)) if include_disabled else np.nonzero(prev.is_disabled == 0)[0]
    ib = np.arange(len(nxt)) if include_disabled else np.nonzero(nxt.is_disabled == 0)[0]
    ids_a = [prev.vehicle_ids[i] for i in ia]
    ids_b = [nxt.vehicle_ids[i] for i in ib]
    pos_b = {v: j for j, v in zip(ib.tolist(), ids_b)}
    in_b = np.array([v in pos_b for v in ids_a], dtype=bool)
    ids_a_set = set(ids_a)
    in_a = np.array([v in ids_a_set for v in ids_b], dtype=bool)
    shared = np.array([(i, pos_b[v]) for i, v in zip(ia.tolist(), ids_a) if v in pos_b],
                      dtype=np.int64).reshape(-1, 2)
    ra = ia[~in_b] if len(ia) else ia
    rb = ib[~in_a] if len(ib) else ib
    ax, ay = projection.forward(prev.lat[ra], prev.lon[ra])
    bx, by = projection.forward(nxt.lat[rb], nxt.lon[rb])
    match_a, match_b = _kernels.greedy_match(ax, ay, bx, by, buffer)
    hit = np.nonzero(match_a >= 0)[0]
    matched = np.stack([ra[hit], rb[match_a[hit]]], axis=1) if len(hit) else np.empty((0, 2), np.int64)
    dist = np.hypot(ax[hit] - bx[match_a[hit]], ay[hit] - by[match_a[hit]]) if len(hit) else np.empty(0)
    return IntervalMatch(shared, matched, dist, ra[match_a < 0], rb[match_b < 0])


def infer_dynamic(stream: Sequence[Snapshot], config: InferenceConfig) -> list[TripEndpoint]:
    """Unlinked endpoints from a dynamic-id stream, one consecutive snapshot pair at a time."""
    if _empty(stream):
        return []
    check_monotonic(stream)
    proj = _projection_for(stream)
    out: list[TripEndpoint] = []
    for prev, nxt in zip(stream[:-1], stream[1:]):
        m = match_interval(prev, nxt, config.buffer, proj, config.include_disabled)
        for i in m.origins.tolist():
            out.append(TripEndpoint(EndpointKind.ORIGIN, float(prev.lat[i]), float(prev.lon[i]),
                                    prev.captured_at, prev.feed_id, Algorithm.DYNAMIC))
        for j in m.destinations.tolist():
            out.append(TripEndpoint(EndpointKind.DESTINATION, float(nxt.lat[j]), float(nxt.lon[j]),
                                    nxt.captured_at, nxt.feed_id, Algorithm.DYNAMIC))
    return out


def filter_trips(trips: Sequence[TripOD], filter: FilterConfig) -> tuple[list[TripOD], list[tuple[TripOD, str]]]:
    """Split OD pairs into kept and rejected; each rejection carries the first
    failed rule out of ``duration``, ``max_speed``, ``min_speed``."""
    kept, rejected = [], []
    for trip in trips:
        if trip.duration > filter.max_duration:
            rejected.append((trip, "duration"))
        elif trip.average_speed > filter.max_speed:
            rejected.append((trip, "max_speed"))
        elif trip.average_speed < filter.min_speed:
            rejected.append((trip, "min_speed"))
        else:
            kept.append(trip)
    return kept, rejected


def estimate_interval(stream: Sequence[Snapshot]) -> float:
    """Median spacing of the stream's snapshots in seconds."""
    times = np.array([s.captured_at for s in stream], dtype=np.int64)
    if len(times) < 2:
        raise ValueError("need at least two snapshots to estimate the scrape interval")
    return float(np.median(np.diff(times)))


def endpoints_from_ods(trips: Sequence[TripOD]) -> list[TripEndpoint]:
    out = []
    for t in trips:
        out.append(t.origin)
        out.append(t.destination)
    return out


# --------------------------------------------------------------------------
# CSV files

ENDPOINT_COLUMNS = ("kind", "lat", "lon", "t", "vendor", "algorithm")
OD_COLUMNS = ("o_lat", "o_lon", "o_t", "d_lat", "d_lon", "d_t", "vehicle_id",
              "duration_s", "distance_m", "speed_ms")


def write_endpoints_csv(endpoints: Sequence[TripEndpoint], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENDPOINT_COLUMNS)
        for e in endpoints:
            w.writerow([e.kind.value, repr(e.lat), repr(e.lon), e.at, e.vendor, e.source_algorithm.value])


def write_od_csv(trips: Sequence[TripOD], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OD_COLUMNS)
        for t in trips:
            w.writerow([repr(t.origin.lat), repr(t.origin.lon), t.origin.at,
                        repr(t.destination.lat), repr(t.destination.lon), t.destination.at,
                        t.vehicle_id, repr(t.duration), repr(t.straight_line_distance),
                        repr(t.average_speed)])


def read_od_csv(path: str | os.PathLike, vendor: str | None = None) -> list[TripOD]:
    """OD pairs from an OD CSV; the file carries no vendor, so ``vendor``
    defaults to the file stem."""
    vendor = Path(path).stem if vendor is None else vendor
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            o = TripEndpoint(EndpointKind.ORIGIN, float(r["o_lat"]), float(r["o_lon"]), int(r["o_t"]),
                             vendor, Algorithm.STATIC)
            d = TripEndpoint(EndpointKind.DESTINATION, float(r["d_lat"]), float(r["d_lon"]),
                             int(r["d_t"]), vendor, Algorithm.STATIC)
            out.append(TripOD(o, d, r["vehicle_id"], float(r["duration_s"]),
                              float(r["distance_m"]), float(r["speed_ms"])))
    return out


def read_endpoints(path: str | os.PathLike) -> list[TripEndpoint]:
    """Endpoints from either an endpoints CSV or an OD CSV (detected by header)."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise ValueError(f"{path} is empty")
    if tuple(header) == OD_COLUMNS:
        return endpoints_from_ods(read_od_csv(path))
    if tuple(header) != ENDPOINT_COLUMNS:
        raise ValueError(f"{path}: unrecognised CSV header {header}")
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            TripEndpoint(EndpointKind(r["kind"]), float(r["lat"]), float(r["lon"]), int(r["t"]),
                         r["vendor"], Algorithm(r["algorithm"]))
            for r in csv.DictReader(fh)
        ]
