"""GBFS ``free_bike_status`` parsing, TTL-aware polling and the NDJSON archive."""

from __future__ import annotations

import configparser
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator
from urllib.parse import urlparse

from .model import DataError, DuplicateVehicleId, GbfsOdError, SchemaViolation, Snapshot

__all__ = [
    "CorruptRecord", "DuplicateVehicleId", "FatalConfigError", "FeedConfig", "MalformedJson",
    "MissingField", "SchemaViolation", "SnapshotStore", "StorageIo", "load_feed_configs",
    "parse_free_bike_status", "poll_loop", "snapshot_to_wire",
]

log = logging.getLogger(__name__)

MIN_POLL_INTERVAL = 60


class MalformedJson(DataError):
    pass


class MissingField(DataError):
    def __init__(self, name: str) -> None:
        super().__init__(f"missing field {name!r}")
        self.name = name


class FatalConfigError(GbfsOdError):
    pass


class StorageIo(GbfsOdError, OSError):
    pass


class CorruptRecord(DataError):
    def __init__(self, path: Path, offset: int, reason: str = "") -> None:
        super().__init__(f"corrupt record in {path} at byte {offset}: {reason}")
        self.path = path
        self.offset = offset


@dataclass(frozen=True)
class FeedConfig:
    feed_id: str
    url: str
    declared_ttl: int = 0
    timeout: float = 10.0
    max_retries: int = 3
    headers: dict = field(default_factory=dict)

    @property
    def poll_interval(self) -> int:
        # TTL below one minute is polled every minute, otherwise exactly at TTL
        return max(MIN_POLL_INTERVAL, int(self.declared_ttl))


# --------------------------------------------------------------------------
# wire format


def _require(obj: dict, name: str, path: str = ""):
    try:
        return obj[name]
    except (KeyError, TypeError):
        raise MissingField(path + name) from None


def _as_flag(value, name: str) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float)) and value in (0, 1):
        return int(value)
    raise SchemaViolation(f"{name} must be 0/1 or boolean, got {value!r}")


def _as_id(value) -> str:
    if isinstance(value, bool):
        raise SchemaViolation(f"bike_id must be a string or integer, got {value!r}")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str) and value:
        return value
    raise SchemaViolation(f"bike_id must be a non-empty string or integer, got {value!r}")


def _as_coord(value, name: str) -> float:
    if isinstance(value, bool):
        raise SchemaViolation(f"{name} is not a number: {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise SchemaViolation(f"{name} is not a number: {value!r}") from None


def parse_free_bike_status(raw: bytes | str, feed_id: str) -> Snapshot:
    """Parse one ``free_bike_status`` payload into a :class:`Snapshot`.

    ``bike_id`` values may be JSON strings or integers; both become strings.
    Missing ``is_reserved``/``is_disabled`` default to 0.
    """
    try:
        if isinstance(raw, (bytes, bytearray)):
            raw = raw.decode("utf-8")
        doc = json.loads(raw)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(str(exc)) from None
    if not isinstance(doc, dict):
        raise MalformedJson("top-level value is not an object")

    last_updated = _require(doc, "last_updated")
    ttl = _require(doc, "ttl")
    bikes = _require(_require(doc, "data"), "bikes", "data.")
    if not isinstance(last_updated, (int, float)) or isinstance(last_updated, bool):
        raise SchemaViolation(f"last_updated must be a POSIX integer, got {last_updated!r}")
    if not isinstance(ttl, (int, float)) or isinstance(ttl, bool):
        raise SchemaViolation(f"ttl must be an integer, got {ttl!r}")
    if not isinstance(bikes, list):
        raise SchemaViolation("data.bikes must be a list")

    ids, lats, lons, res, dis = [], [], [], [], []
    for i, bike in enumerate(bikes):
        p = f"data.bikes[{i}]."
        if not isinstance(bike, dict):
            raise SchemaViolation(f"{p[:-1]} is not an object")
        ids.append(_as_id(_require(bike, "bike_id", p)))
        lats.append(_as_coord(_require(bike, "lat", p), "lat"))
        lons.append(_as_coord(_require(bike, "lon", p), "lon"))
        res.append(_as_flag(bike.get("is_reserved", 0), "is_reserved"))
        dis.append(_as_flag(bike.get("is_disabled", 0), "is_disabled"))

    return Snapshot(feed_id, int(last_updated), int(ttl), ids, lats, lons, res, dis)


def snapshot_to_wire(snapshot: Snapshot, received_at: int | None = None) -> dict:
    """Wire-format dict for ``snapshot``; a valid ``free_bike_status`` document
    extended with the archive's ``feed_id``/``captured_at``/``received_at`` keys."""
    bikes = [
        {"bike_id": v, "lat": float(la), "lon": float(lo),
         "is_reserved": int(r), "is_disabled": int(d)}
        for v, la, lo, r, d in zip(snapshot.vehicle_ids, snapshot.lat, snapshot.lon,
                                   snapshot.is_reserved, snapshot.is_disabled)
    ]
    return {
        "feed_id": snapshot.feed_id,
        "captured_at": snapshot.captured_at,
        "received_at": snapshot.captured_at if received_at is None else int(received_at),
        "last_updated": snapshot.captured_at,
        "ttl": snapshot.ttl,
        "data": {"bikes": bikes},
    }


def _dump_line(doc: dict) -> bytes:
    return (json.dumps(doc, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# archive


def _utc_day(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d")


class SnapshotStore:
    """Append-only archive: ``<root>/<feed_id>/<YYYY-MM-DD>.ndjson``, one snapshot per line.

    Each append is a single write of a complete line, so readers only ever
    see whole snapshots plus, after a crash, at most one partial trailing
    line which :meth:`scan` skips and the next append truncates.
    """

    def __init__(self, root: str | os.PathLike, fsync: bool = False) -> None:
        self.root = Path(root)
        self.fsync = fsync
        self._last: dict[str, int | None] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock(self, feed_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(feed_id, threading.Lock())

    def feeds(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(p.name for p in self.root.iterdir() if p.is_dir() and any(p.glob("*.ndjson")))

    def _day_files(self, feed_id: str) -> list[Path]:
        d = self.root / feed_id
        if not d.is_dir():
            return []
        return sorted(d.glob("*.ndjson"))

    def _last_captured(self, feed_id: str) -> int | None:
        if feed_id not in self._last:
            last = None
            for path in reversed(self._day_files(feed_id)):
                for snap in self._read_file(path):
                    last = snap.captured_at if last is None else max(last, snap.captured_at)
                if last is not None:
                    break
            self._last[feed_id] = last
        return self._last[feed_id]

    @staticmethod
    def _repair_tail(path: Path) -> None:
        if not path.exists() or path.stat().st_size == 0:
            return
        with open(path, "rb+") as fh:
            fh.seek(-1, os.SEEK_END)
            if fh.read(1) == b"\n":
                return
            data = path.read_bytes()
            keep = data.rfind(b"\n") + 1
            log.warning("truncating partial trailing record in %s at byte %d", path, keep)
            fh.truncate(keep)

    def append(self, snapshot: Snapshot, received_at: int | None = None) -> bool:
        """Append ``snapshot``; returns False when it was skipped as a duplicate
        (``captured_at`` not newer than the last stored one for its feed)."""
        feed_id = snapshot.feed_id
        if not feed_id or "/" in feed_id or feed_id.startswith("."):
            raise ValueError(f"feed_id {feed_id!r} is not usable as a directory name")
        with self._lock(feed_id):
            last = self._last_captured(feed_id)
            if last is not None and snapshot.captured_at <= last:
                if snapshot.captured_at < last:
                    log.warning("%s: snapshot at %d older than stored %d, skipped",
                                feed_id, snapshot.captured_at, last)
                return False
            path = self.root / feed_id / f"{_utc_day(snapshot.captured_at)}.ndjson"
            line = _dump_line(snapshot_to_wire(snapshot, received_at))
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                self._repair_tail(path)
                fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
                try:
                    os.write(fd, line)
                    if self.fsync:
                        os.fsync(fd)
                finally:
                    os.close(fd)
            except OSError as exc:
                raise StorageIo(str(exc)) from exc
            self._last[feed_id] = snapshot.captured_at
            return True

    def extend(self, snapshots) -> int:
        return sum(self.append(s) for s in snapshots)

    def _read_file(self, path: Path) -> Iterator[Snapshot]:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise StorageIo(str(exc)) from exc
        offset = 0
        while offset < len(data):
            end = data.find(b"\n", offset)
            if end < 0:
                log.warning("%s: skipping partial trailing record at byte %d", path, offset)
                return
            line = data[offset:end]
            if line.strip():
                try:
                    doc = json.loads(line)
                    snap = parse_free_bike_status(line, doc["feed_id"])
                except (DataError, KeyError, TypeError, json.JSONDecodeError) as exc:
                    if end + 1 >= len(data):
                        log.warning("%s: skipping corrupt trailing record at byte %d", path, offset)
                        return
                    raise CorruptRecord(path, offset, str(exc)) from None
                yield snap
            offset = end + 1

    def scan(self, feed_id: str, t_start: int | None = None, t_end: int | None = None) -> Iterator[Snapshot]:
        """Snapshots of ``feed_id`` with ``t_start <= captured_at <= t_end``,
        strictly increasing in ``captured_at``."""
        if t_start is not None and t_end is not None and t_start > t_end:
            raise ValueError(f"t_start {t_start} is after t_end {t_end}")
        day_lo = _utc_day(t_start) if t_start is not None and t_start > 0 else None
        day_hi = _utc_day(t_end) if t_end is not None and t_end > 0 else None
        last = None
        for path in self._day_files(feed_id):
            day = path.stem
            if (day_lo and day < day_lo) or (day_hi and day > day_hi):
                continue
            for snap in self._read_file(path):
                t = snap.captured_at
                if (t_start is not None and t < t_start) or (t_end is not None and t > t_end):
                    continue
                if last is not None and t <= last:
                    log.warning("%s: out-of-order snapshot %d after %d skipped", feed_id, t, last)
                    continue
                last = t
                yield snap

    def load(self, feed_id: str, t_start: int | None = None, t_end: int | None = None) -> list[Snapshot]:
        return list(self.scan(feed_id, t_start, t_end))


# --------------------------------------------------------------------------
# polling


def _default_fetch(config: FeedConfig) -> bytes:
    import requests

    resp = requests.get(config.url, timeout=config.timeout, headers=config.headers or None)
    resp.raise_for_status()
    return resp.content


def _validate_url(url: str) -> None:
    parts = urlparse(url)
    if parts.scheme not in ("http", "https", "file") or (parts.scheme != "file" and not parts.netloc):
        raise FatalConfigError(f"bad feed URL {url!r}")


def poll_loop(
    config: FeedConfig,
    store: SnapshotStore,
    stop_signal: threading.Event,
    fetch: Callable[[FeedConfig], bytes] | None = None,
    retry_delay: float = 2.0,
    clock: Callable[[], float] = time.time,
) -> dict:
    """Poll one feed every ``config.poll_interval`` seconds until ``stop_signal`` is set.

    Transient failures (network, HTTP, malformed payloads) are retried up to
    ``config.max_retries`` times, then logged and the poll is skipped.
    Returns counters: ``polls``, ``stored``, ``duplicates``, ``failed``.
    """
    _validate_url(config.url)
    if fetch is None:
        if urlparse(config.url).scheme == "file":
            def fetch(cfg):
                return Path(urlparse(cfg.url).path).read_bytes()
        else:
            fetch = _default_fetch
    stats = {"polls": 0, "stored": 0, "duplicates": 0, "failed": 0}
    interval = config.poll_interval
    while not stop_signal.is_set():
        started = time.monotonic()
        stats["polls"] += 1
        snap = None
        for attempt in range(config.max_retries + 1):
            try:
                snap = parse_free_bike_status(fetch(config), config.feed_id)
                break
            except FatalConfigError:
                raise
            except Exception as exc:  # transient by contract: never abort the loop
                log.warning("%s: poll attempt %d failed: %s", config.feed_id, attempt + 1, exc)
                if attempt < config.max_retries and stop_signal.wait(retry_delay):
                    break
        if snap is None:
            stats["failed"] += 1
            log.error("%s: poll skipped after %d attempts", config.feed_id, config.max_retries + 1)
        elif store.append(snap, received_at=int(clock())):
            stats["stored"] += 1
        else:
            stats["duplicates"] += 1
        stop_signal.wait(max(0.0, interval - (time.monotonic() - started)))
    return stats


def load_feed_configs(path: str | os.PathLike) -> list[FeedConfig]:
    """Read ``[feed <id>]`` sections (keys: url, ttl, timeout, max_retries,
    and ``header.<Name>`` for static request headers) from an INI file."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise FatalConfigError(f"{path}: {exc}") from None
    feeds = []
    for section in parser.sections():
        if not section.startswith("feed "):
            continue
        sec = parser[section]
        feed_id = section[len("feed "):].strip()
        if "url" not in sec:
            raise FatalConfigError(f"[{section}] has no url")
        try:
            cfg = FeedConfig(
                feed_id=feed_id,
                url=sec["url"],
                declared_ttl=sec.getint("ttl", 0),
                timeout=sec.getfloat("timeout", 10.0),
                max_retries=sec.getint("max_retries", 3),
                headers={k[len("header."):]: v for k, v in sec.items() if k.startswith("header.")},
            )
        except ValueError as exc:
            raise FatalConfigError(f"[{section}]: {exc}") from None
        _validate_url(cfg.url)
        feeds.append(cfg)
    if not feeds:
        raise FatalConfigError(f"{path}: no [feed <id>] sections")
    return feeds
