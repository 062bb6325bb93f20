"""Synthetic scooter fleet with known trips, rendered as a GBFS snapshot stream.

The generator works in two phases. An event loop produces, per vehicle, a
list of stays (a position held over an inclusive interval of integer
seconds) together with the ground-truth trip log. The renderer then samples
every stay at the snapshot instants, applies GPS noise and exposes vehicle
ids according to the chosen strategy. :func:`scripted_scenario` feeds
hand-written events through the same renderer.
"""

from __future__ import annotations

import configparser
import csv
import enum
import heapq
import math
import os
import uuid
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .model import GbfsOdError, LocalProjection, M_PER_DEG, Snapshot

__all__ = [
    "GroundTruthTrip", "Hotspot", "IdStrategy", "InvalidConfig", "Launch", "Move",
    "OverlappingTripsForVehicle", "Remove", "SimConfig", "SimResult", "TripKind",
    "load_sim_config", "scripted_scenario", "simulate", "write_ground_truth",
]

DEFAULT_START = 1582502400  # 2020-02-24T00:00:00Z


class InvalidConfig(GbfsOdError):
    pass


class OverlappingTripsForVehicle(GbfsOdError):
    pass


class TripKind(str, enum.Enum):
    RIDER = "rider"
    REBALANCING = "rebalancing"
    JUICING = "juicing"


class IdStrategy(str, enum.Enum):
    STATIC = "static"
    RESETTING = "resetting"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class Hotspot:
    lat: float
    lon: float
    weight: float
    radius: float  # meters, standard deviation of the Gaussian


@dataclass(frozen=True)
class SimConfig:
    bbox: tuple[float, float, float, float] = (38.85, -77.08, 38.95, -76.95)
    fleet_size: int = 300
    horizon: int = 7 * 86400
    snapshot_interval: int = 60
    start_time: int = DEFAULT_START
    trip_rate: float = 0.2  # rider trips per idle vehicle-hour, averaged over the day
    hourly_demand: tuple[float, ...] = ()  # 24 relative weights by UTC hour; empty = flat
    trip_duration_median: float = 600.0
    trip_duration_sigma: float = 0.6
    min_trip_duration: int = 120
    max_trip_duration: int = 7200
    trip_speed_min: float = 2.0
    trip_speed_max: float = 6.0
    gps_noise_sigma: float = 0.0
    rebalancing_rate: float = 0.0  # per hour, whole fleet
    rebalancing_duration: tuple[int, int] = (600, 2400)
    juicing_rate: float = 0.0  # per hour, whole fleet
    juicing_duration: tuple[int, int] = (4 * 3600, 12 * 3600)
    launch_rate: float = 0.0  # vehicles per day
    removal_rate: float = 0.0  # vehicles per day
    visible_while_relocating: bool = False
    min_visible_snapshots: int = 0
    id_strategy: IdStrategy = IdStrategy.STATIC
    reset_interval: int = 1800
    hotspots: tuple[Hotspot, ...] = ()
    uniform_weight: float = 1.0
    feed_id: str = "sim"
    rng_seed: int = 0

    def validate(self) -> None:
        lat_min, lon_min, lat_max, lon_max = self.bbox
        checks = [
            (lat_min < lat_max and lon_min < lon_max, "bbox must have positive extent"),
            (self.fleet_size >= 0, "fleet_size must be >= 0"),
            (self.snapshot_interval > 0, "snapshot_interval must be > 0"),
            (self.horizon >= self.snapshot_interval, "horizon must cover one snapshot interval"),
            (self.start_time > 0, "start_time must be positive"),
            (min(self.trip_rate, self.rebalancing_rate, self.juicing_rate,
                 self.launch_rate, self.removal_rate) >= 0, "rates must be >= 0"),
            (self.gps_noise_sigma >= 0, "gps_noise_sigma must be >= 0"),
            (0 < self.min_trip_duration <= self.trip_duration_median <= self.max_trip_duration,
             "need 0 < min_trip_duration <= median <= max_trip_duration"),
            (0 < self.trip_speed_min <= self.trip_speed_max, "need 0 < trip_speed_min <= trip_speed_max"),
            (self.trip_duration_sigma >= 0, "trip_duration_sigma must be >= 0"),
            (0 < self.rebalancing_duration[0] <= self.rebalancing_duration[1], "bad rebalancing_duration"),
            (0 < self.juicing_duration[0] <= self.juicing_duration[1], "bad juicing_duration"),
            (self.min_visible_snapshots >= 0, "min_visible_snapshots must be >= 0"),
            (not self.hourly_demand or (len(self.hourly_demand) == 24 and min(self.hourly_demand) >= 0
                                        and sum(self.hourly_demand) > 0),
             "hourly_demand needs 24 non-negative weights"),
            (self.id_strategy != IdStrategy.DYNAMIC or self.reset_interval > self.snapshot_interval,
             "reset_interval must exceed snapshot_interval"),
            (self.uniform_weight >= 0 and all(h.weight >= 0 and h.radius > 0 for h in self.hotspots),
             "mixture weights must be >= 0 and hotspot radii > 0"),
            (self.uniform_weight + sum(h.weight for h in self.hotspots) > 0, "mixture has zero weight"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfig(msg)

    @property
    def n_snapshots(self) -> int:
        return self.horizon // self.snapshot_interval

    @property
    def last_snapshot_time(self) -> int:
        return self.start_time + (self.n_snapshots - 1) * self.snapshot_interval


@dataclass(frozen=True)
class GroundTruthTrip:
    true_vehicle: int
    origin: tuple[float, float, int]
    destination: tuple[float, float, int]
    kind: TripKind


# scripted events ---------------------------------------------------------


@dataclass(frozen=True)
class Launch:
    """Vehicle appears at (lat, lon) at time t; at or before the stream start it
    is part of the initial fleet."""

    t: int
    vehicle: int
    lat: float
    lon: float


@dataclass(frozen=True)
class Move:
    """Vehicle leaves at ``t`` and arrives at (lat, lon) at ``t_end``."""

    t: int
    vehicle: int
    t_end: int
    lat: float
    lon: float
    kind: TripKind = TripKind.RIDER
    visible: bool = False  # stays listed at its origin until arrival


@dataclass(frozen=True)
class Remove:
    t: int
    vehicle: int


@dataclass
class SimResult:
    snapshots: list[Snapshot]
    trips: list[GroundTruthTrip]
    true_vehicles: list[np.ndarray]  # per snapshot, aligned with its records
    launches: list[Launch]
    removals: list[Remove]
    initial_fleet: int

    def trips_by_kind(self) -> dict[str, int]:
        out = {k.value: 0 for k in TripKind}
        for t in self.trips:
            out[t.kind.value] += 1
        return out


# --------------------------------------------------------------------------
# timeline building


@dataclass
class _Stays:
    vehicle: list[int] = field(default_factory=list)
    a: list[int] = field(default_factory=list)
    b: list[int] = field(default_factory=list)
    lat: list[float] = field(default_factory=list)
    lon: list[float] = field(default_factory=list)
    run: list[int] = field(default_factory=list)  # resetting-id run counter per vehicle

    def add(self, vehicle, a, b, lat, lon, run):
        if b >= a:
            self.vehicle.append(vehicle)
            self.a.append(a)
            self.b.append(b)
            self.lat.append(lat)
            self.lon.append(lon)
            self.run.append(run)


class _Timeline:
    """Tracks open stays per vehicle and closes them as events arrive."""

    def __init__(self, t_end: int) -> None:
        self.t_end = t_end
        self.stays = _Stays()
        self.open: dict[int, list] = {}  # vehicle -> [a, lat, lon, run]
        self.runs: dict[int, int] = {}
        self.trips: list[GroundTruthTrip] = []
        self.busy_until: dict[int, int] = {}

    def place(self, vehicle: int, t: int, lat: float, lon: float, new_run: bool = True) -> None:
        run = self.runs.get(vehicle, -1) + (1 if new_run else 0)
        self.runs[vehicle] = run
        self.open[vehicle] = [t, lat, lon, run]

    def close(self, vehicle: int, last_visible: int) -> None:
        a, lat, lon, run = self.open.pop(vehicle)
        self.stays.add(vehicle, a, min(last_visible, self.t_end), lat, lon, run)

    def move(self, ev: Move) -> None:
        if ev.vehicle not in self.open:
            if ev.t < self.busy_until.get(ev.vehicle, -math.inf):
                raise OverlappingTripsForVehicle(
                    f"vehicle {ev.vehicle} starts a trip at {ev.t} before its previous one ends")
            raise OverlappingTripsForVehicle(f"vehicle {ev.vehicle} is not idle at {ev.t}")
        if ev.t_end <= ev.t:
            raise OverlappingTripsForVehicle(f"trip of vehicle {ev.vehicle} ends before it starts")
        a, lat, lon, run = self.open[ev.vehicle]
        if ev.t < a:
            raise OverlappingTripsForVehicle(
                f"vehicle {ev.vehicle} starts a trip at {ev.t} before it arrived at {a}")
        self.trips.append(GroundTruthTrip(ev.vehicle, (lat, lon, ev.t), (ev.lat, ev.lon, ev.t_end), ev.kind))
        if ev.visible:
            self.close(ev.vehicle, ev.t_end - 1)
            self.place(ev.vehicle, ev.t_end, ev.lat, ev.lon, new_run=False)
        else:
            self.close(ev.vehicle, ev.t)
            self.place(ev.vehicle, ev.t_end, ev.lat, ev.lon, new_run=True)
        self.busy_until[ev.vehicle] = ev.t_end

    def finish(self) -> None:
        for v in sorted(self.open):
            self.close(v, self.t_end)


# --------------------------------------------------------------------------
# rendering


def _uuid_from(rng: np.random.Generator) -> str:
    return str(uuid.UUID(bytes=rng.bytes(16), version=4))


def _render(
    stays: _Stays,
    *,
    start_time: int,
    interval: int,
    n_snapshots: int,
    id_strategy: IdStrategy,
    reset_interval: int,
    gps_noise_sigma: float,
    noise_rng: np.random.Generator,
    id_rng: np.random.Generator,
    feed_id: str,
    ttl: int,
) -> tuple[list[Snapshot], list[np.ndarray]]:
    veh = np.asarray(stays.vehicle, dtype=np.int64)
    a = np.asarray(stays.a, dtype=np.int64)
    b = np.asarray(stays.b, dtype=np.int64)
    k0 = np.maximum(-((start_time - a) // interval), 0)  # ceil((a - t0) / dt)
    k1 = np.minimum((b - start_time) // interval, n_snapshots - 1)
    n = np.maximum(k1 - k0 + 1, 0)
    seg = np.repeat(np.arange(len(a)), n)
    offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    k = np.repeat(k0, n) + offs
    rv = veh[seg]
    order = np.lexsort((rv, k))
    k, rv, seg = k[order], rv[order], seg[order]

    lat = np.asarray(stays.lat, dtype=np.float64)[seg]
    lon = np.asarray(stays.lon, dtype=np.float64)[seg]
    if gps_noise_sigma > 0 and len(seg):
        noise = noise_rng.normal(0.0, gps_noise_sigma, size=(len(seg), 2))
        lat = lat + noise[:, 1] / M_PER_DEG
        lon = lon + noise[:, 0] / (M_PER_DEG * np.cos(np.radians(lat)))

    # exposed ids, drawn in render order so output is reproducible
    if id_strategy == IdStrategy.STATIC:
        keys = rv
    elif id_strategy == IdStrategy.RESETTING:
        keys = list(zip(rv.tolist(), np.asarray(stays.run, dtype=np.int64)[seg].tolist()))
    else:
        epoch = (start_time + k * interval) // reset_interval
        keys = list(zip(rv.tolist(), epoch.tolist()))
    id_of: dict = {}
    used: set[str] = set()
    exposed = []
    for key in (keys.tolist() if isinstance(keys, np.ndarray) else keys):
        vid = id_of.get(key)
        if vid is None:
            vid = _uuid_from(id_rng)
            while vid in used:
                vid = _uuid_from(id_rng)
            used.add(vid)
            id_of[key] = vid
        exposed.append(vid)

    bounds = np.searchsorted(k, np.arange(n_snapshots + 1))
    snapshots, true_vehicles = [], []
    for s in range(n_snapshots):
        lo, hi = bounds[s], bounds[s + 1]
        ids = exposed[lo:hi]
        # vendors publish in their own order; sort by exposed id so record order carries no identity
        perm = sorted(range(hi - lo), key=ids.__getitem__)
        idx = np.asarray(perm, dtype=np.int64) + lo
        snapshots.append(Snapshot(feed_id, start_time + s * interval, ttl,
                                  [exposed[i] for i in idx], lat[idx], lon[idx]))
        true_vehicles.append(rv[idx])
    return snapshots, true_vehicles


# --------------------------------------------------------------------------
# random generation


class _Sampler:
    """Endpoint locations from a uniform-plus-hotspots mixture, in bbox-local meters."""

    def __init__(self, config: SimConfig, rng: np.random.Generator) -> None:
        lat_min, lon_min, lat_max, lon_max = config.bbox
        self.proj = LocalProjection.for_bbox(lat_min, lon_min, lat_max, lon_max)
        w, h = self.proj.forward(lat_max, lon_max)
        self.width, self.height = float(w), float(h)
        self.rng = rng
        self.centers = [tuple(float(c) for c in self.proj.forward(hs.lat, hs.lon)) for hs in config.hotspots]
        self.radii = [hs.radius for hs in config.hotspots]
        weights = np.array([config.uniform_weight] + [hs.weight for hs in config.hotspots], dtype=float)
        self.weights = weights / weights.sum()

    def inside(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def point(self) -> tuple[float, float]:
        c = int(self.rng.choice(len(self.weights), p=self.weights))
        if c > 0:
            cx, cy = self.centers[c - 1]
            r = self.radii[c - 1]
            for _ in range(20):
                x, y = cx + self.rng.normal(0.0, r), cy + self.rng.normal(0.0, r)
                if self.inside(x, y):
                    return x, y
        return float(self.rng.uniform(0.0, self.width)), float(self.rng.uniform(0.0, self.height))

    def to_latlon(self, x: float, y: float) -> tuple[float, float]:
        lat, lon = self.proj.inverse(x, y)
        return float(lat), float(lon)

    def to_xy(self, lat: float, lon: float) -> tuple[float, float]:
        x, y = self.proj.forward(lat, lon)
        return float(x), float(y)


def _rider_trip(config: SimConfig, rng: np.random.Generator, sampler: _Sampler,
                x: float, y: float) -> tuple[int, float, float]:
    """Duration (s) and destination (bbox-local meters) of one rider trip from (x, y)."""
    mu = math.log(config.trip_duration_median)
    while True:
        dur = rng.lognormal(mu, config.trip_duration_sigma)
        if config.min_trip_duration <= dur <= config.max_trip_duration:
            break
    speed = rng.uniform(config.trip_speed_min, config.trip_speed_max)
    length = speed * dur
    best = None
    for _ in range(8):
        tx, ty = sampler.point()
        d = math.hypot(tx - x, ty - y)
        if d >= length:
            # the point at `length` along the segment towards the target stays in the convex bbox
            f = length / d
            return max(int(round(dur)), config.min_trip_duration), x + f * (tx - x), y + f * (ty - y)
        if best is None or d > best[0]:
            best = (d, tx, ty)
    d, tx, ty = best
    dur = min(max(int(round(d / speed)), config.min_trip_duration), config.max_trip_duration)
    return dur, tx, ty


def _exp_delay(rng: np.random.Generator, rate_per_s: float) -> int:
    return int(math.ceil(rng.exponential(1.0 / rate_per_s)))


def simulate(config: SimConfig) -> SimResult:
    """Run the random fleet model described by ``config``."""
    config.validate()
    ss = np.random.SeedSequence(config.rng_seed)
    dyn_ss, noise_ss, id_ss = ss.spawn(3)
    rng = np.random.default_rng(dyn_ss)
    sampler = _Sampler(config, rng)

    t0 = config.start_time
    dt = config.snapshot_interval
    t_end = config.last_snapshot_time
    events: list[tuple[int, int, str, int, int]] = []  # (t, seq, kind, vehicle, version)
    seq = 0

    def push(t, kind, vehicle=-1, version=0):
        nonlocal seq
        heapq.heappush(events, (t, seq, kind, vehicle, version))
        seq += 1

    timeline = _Timeline(t_end)
    pos: dict[int, tuple[float, float]] = {}  # vehicle -> bbox-local xy of its current stay
    idle: set[int] = set()
    version: dict[int, int] = {}
    launches: list[Launch] = []
    removals: list[Remove] = []
    moves: list[Move] = []

    def earliest_departure(arrival: int) -> int:
        if config.min_visible_snapshots <= 0:
            return arrival
        first = t0 + max(0, -((t0 - arrival) // dt)) * dt
        return first + (config.min_visible_snapshots - 1) * dt

    if config.hourly_demand:
        profile = np.asarray(config.hourly_demand, dtype=float)
        profile = profile / profile.mean()
    else:
        profile = np.ones(24)
    peak = float(profile.max())

    def next_departure(t: int) -> int:
        # thinning of a Poisson process whose rate follows the hourly profile
        while True:
            t += _exp_delay(rng, config.trip_rate * peak / 3600.0)
            if t > t_end or rng.uniform() * peak <= profile[(t // 3600) % 24]:
                return t

    def become_idle(v: int, t: int) -> None:
        idle.add(v)
        version[v] = version.get(v, 0) + 1
        if config.trip_rate > 0:
            dep = max(next_departure(t), earliest_departure(t))
            if dep <= t_end:
                push(dep, "depart", v, version[v])

    def relocate(v: int, t: int, t_arr: int, x: float, y: float, kind: TripKind, visible: bool) -> None:
        idle.discard(v)
        version[v] = version.get(v, 0) + 1
        lat, lon = sampler.to_latlon(x, y)
        ev = Move(t, v, t_arr, lat, lon, kind, visible)
        timeline.move(ev)
        moves.append(ev)
        pos[v] = (x, y)
        push(t_arr, "arrive", v, version[v])

    for v in range(config.fleet_size):
        x, y = sampler.point()
        pos[v] = (x, y)
        timeline.place(v, t0, *sampler.to_latlon(x, y))
        become_idle(v, t0)
    next_vehicle = config.fleet_size

    global_rates = {
        "rebalance": config.rebalancing_rate / 3600.0,
        "juice": config.juicing_rate / 3600.0,
        "launch": config.launch_rate / 86400.0,
        "remove": config.removal_rate / 86400.0,
    }
    for kind, rate in global_rates.items():
        if rate > 0:
            t = t0 + _exp_delay(rng, rate)
            if t <= t_end:
                push(t, kind)

    while events:
        t, _, kind, v, ver = heapq.heappop(events)
        if kind == "depart":
            if v not in idle or version[v] != ver:
                continue
            x, y = pos[v]
            dur, dx, dy = _rider_trip(config, rng, sampler, x, y)
            if t + dur > t_end:
                continue  # would not finish inside the window; vehicle stays parked
            relocate(v, t, t + dur, dx, dy, TripKind.RIDER, False)
        elif kind == "arrive":
            if version[v] == ver:
                become_idle(v, t)
        else:
            rate = global_rates[kind]
            nxt = t + _exp_delay(rng, rate)
            if nxt <= t_end:
                push(nxt, kind)
            if kind == "launch":
                x, y = sampler.point()
                v = next_vehicle
                next_vehicle += 1
                lat, lon = sampler.to_latlon(x, y)
                pos[v] = (x, y)
                timeline.place(v, t, lat, lon)
                launches.append(Launch(t, v, lat, lon))
                become_idle(v, t)
                continue
            if not idle:
                continue
            v = sorted(idle)[int(rng.integers(len(idle)))]
            if kind == "remove":
                idle.discard(v)
                version[v] += 1
                timeline.close(v, t - 1)
                removals.append(Remove(t, v))
                continue
            lo, hi = config.rebalancing_duration if kind == "rebalance" else config.juicing_duration
            dur = int(rng.integers(lo, hi + 1))
            if t + dur > t_end:
                continue
            x, y = sampler.point()
            relocate(v, t, t + dur, x, y,
                     TripKind.REBALANCING if kind == "rebalance" else TripKind.JUICING,
                     config.visible_while_relocating)

    timeline.finish()
    snapshots, true_vehicles = _render(
        timeline.stays,
        start_time=t0, interval=dt, n_snapshots=config.n_snapshots,
        id_strategy=IdStrategy(config.id_strategy), reset_interval=config.reset_interval,
        gps_noise_sigma=config.gps_noise_sigma,
        noise_rng=np.random.default_rng(noise_ss), id_rng=np.random.default_rng(id_ss),
        feed_id=config.feed_id, ttl=dt,
    )
    return SimResult(snapshots, timeline.trips, true_vehicles, launches, removals, config.fleet_size)


def scripted_scenario(
    events: Sequence[Launch | Move | Remove],
    *,
    start_time: int = DEFAULT_START,
    horizon: int,
    snapshot_interval: int,
    id_strategy: IdStrategy | str = IdStrategy.STATIC,
    reset_interval: int = 1800,
    seed: int = 0,
    feed_id: str = "scripted",
) -> SimResult:
    """Exact stream implied by an explicit, time-ordered event list.

    Vehicles must be introduced with a :class:`Launch`; launches at or before
    ``start_time`` form the initial fleet. ``seed`` only drives the exposed ids.
    """
    id_strategy = IdStrategy(id_strategy)
    if snapshot_interval <= 0 or horizon < snapshot_interval:
        raise InvalidConfig("need snapshot_interval > 0 and horizon >= snapshot_interval")
    if id_strategy == IdStrategy.DYNAMIC and reset_interval <= snapshot_interval:
        raise InvalidConfig("reset_interval must exceed snapshot_interval")
    n_snapshots = horizon // snapshot_interval
    t_end = start_time + (n_snapshots - 1) * snapshot_interval
    times = [e.t for e in events]
    if times != sorted(times):
        raise InvalidConfig("events must be time-ordered")

    timeline = _Timeline(t_end)
    launches, removals, initial = [], [], 0
    for ev in events:
        if isinstance(ev, Launch):
            if ev.vehicle in timeline.open or ev.vehicle in timeline.runs:
                raise InvalidConfig(f"vehicle {ev.vehicle} launched twice")
            timeline.place(ev.vehicle, max(ev.t, start_time), ev.lat, ev.lon)
            if ev.t <= start_time:
                initial += 1
            else:
                launches.append(ev)
        elif isinstance(ev, Move):
            timeline.move(ev)
        elif isinstance(ev, Remove):
            if ev.vehicle not in timeline.open or ev.t < timeline.open[ev.vehicle][0]:
                raise OverlappingTripsForVehicle(f"vehicle {ev.vehicle} removed while not parked")
            timeline.close(ev.vehicle, ev.t - 1)
            removals.append(ev)
        else:
            raise InvalidConfig(f"unknown event {ev!r}")
    timeline.finish()
    snapshots, true_vehicles = _render(
        timeline.stays,
        start_time=start_time, interval=snapshot_interval, n_snapshots=n_snapshots,
        id_strategy=id_strategy, reset_interval=reset_interval, gps_noise_sigma=0.0,
        noise_rng=np.random.default_rng(0), id_rng=np.random.default_rng(seed),
        feed_id=feed_id, ttl=snapshot_interval,
    )
    return SimResult(snapshots, timeline.trips, true_vehicles, launches, removals, initial)


# --------------------------------------------------------------------------
# files


GROUND_TRUTH_COLUMNS = ("kind", "o_lat", "o_lon", "o_t", "d_lat", "d_lon", "d_t")


def write_ground_truth(trips: Sequence[GroundTruthTrip], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GROUND_TRUTH_COLUMNS)
        for t in trips:
            w.writerow([t.kind.value, repr(t.origin[0]), repr(t.origin[1]), t.origin[2],
                        repr(t.destination[0]), repr(t.destination[1]), t.destination[2]])


def read_ground_truth(path: str | os.PathLike) -> list[GroundTruthTrip]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        GroundTruthTrip(-1, (float(r["o_lat"]), float(r["o_lon"]), int(r["o_t"])),
                        (float(r["d_lat"]), float(r["d_lon"]), int(r["d_t"])), TripKind(r["kind"]))
        for r in rows
    ]


def _parse_pair(text: str, cast=int) -> tuple:
    parts = [p.strip() for p in text.replace(",", " ").split()]
    if len(parts) != 2:
        raise InvalidConfig(f"expected two values, got {text!r}")
    return cast(parts[0]), cast(parts[1])


def load_sim_config(path: str | os.PathLike, **overrides) -> SimConfig:
    """Build a :class:`SimConfig` from the ``[simulation]`` section of an INI file.

    Keys match the field names; ``bbox`` is four comma-separated numbers,
    ``*_duration`` pairs are ``lo, hi``, and every ``[hotspot <name>]`` section
    carries ``lat``, ``lon``, ``weight`` and ``radius``.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    with open(path, encoding="utf-8") as fh:
        try:
            parser.read_file(fh)
        except configparser.Error as exc:
            raise InvalidConfig(f"{path}: {exc}") from None
    if "simulation" not in parser:
        raise InvalidConfig(f"{path}: missing [simulation] section")
    sec = parser["simulation"]
    defaults = SimConfig()
    kwargs: dict = {}
    try:
        for name, value in sec.items():
            if not hasattr(defaults, name) or name == "hotspots":
                raise InvalidConfig(f"unknown simulation key {name!r}")
            current = getattr(defaults, name)
            if name == "hourly_demand":
                kwargs[name] = tuple(float(p) for p in value.replace(",", " ").split())
            elif name == "bbox":
                vals = tuple(float(p) for p in value.replace(",", " ").split())
                if len(vals) != 4:
                    raise InvalidConfig("bbox needs lat_min, lon_min, lat_max, lon_max")
                kwargs[name] = vals
            elif name.endswith("_duration") and isinstance(current, tuple):
                kwargs[name] = _parse_pair(value)
            elif name == "id_strategy":
                kwargs[name] = IdStrategy(value.strip().lower())
            elif isinstance(current, bool):
                kwargs[name] = sec.getboolean(name)
            elif isinstance(current, int):
                kwargs[name] = int(value)
            elif isinstance(current, float):
                kwargs[name] = float(value)
            else:
                kwargs[name] = value.strip()
        hotspots = []
        for s in parser.sections():
            if s.startswith("hotspot"):
                h = parser[s]
                hotspots.append(Hotspot(h.getfloat("lat"), h.getfloat("lon"),
                                        h.getfloat("weight", 1.0), h.getfloat("radius", 500.0)))
    except (ValueError, TypeError) as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    if hotspots:
        kwargs["hotspots"] = tuple(hotspots)
    cfg = replace(defaults, **{**kwargs, **overrides})
    cfg.validate()
    return cfg
