"""Re-issue vehicle ids of a static-id stream under the resetting or dynamic strategy.

Only ids change; coordinates, timestamps and record order are preserved.
Replacement ids are UUID-shaped strings from a seeded generator and are
never reused within one output stream.
"""

from __future__ import annotations

import uuid
from typing import Iterable, Iterator

import numpy as np

from .model import GbfsOdError, NonMonotonicStream, Snapshot

__all__ = ["InvalidInterval", "regen_dynamic", "regen_resetting"]


class InvalidInterval(GbfsOdError, ValueError):
    pass


class _IdSource:
    def __init__(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)
        self.used: set[str] = set()

    def fresh(self) -> str:
        while True:
            vid = str(uuid.UUID(bytes=self.rng.bytes(16), version=4))
            if vid not in self.used:
                self.used.add(vid)
                return vid


def _ordered(stream: Iterable[Snapshot]) -> Iterator[Snapshot]:
    last = None
    for snap in stream:
        if last is not None and snap.captured_at <= last:
            raise NonMonotonicStream(f"snapshot at {snap.captured_at} does not follow {last}")
        last = snap.captured_at
        yield snap


def regen_resetting(stream: Iterable[Snapshot], seed: int = 0) -> list[Snapshot]:
    """A vehicle keeps its new id while it is listed in consecutive snapshots
    and gets a fresh one whenever it reappears after missing at least one."""
    ids = _IdSource(seed)
    prev: dict[str, str] = {}
    out = []
    for snap in _ordered(stream):
        cur = {}
        for vid in snap.vehicle_ids:
            cur[vid] = prev.get(vid) or ids.fresh()
        out.append(snap.with_ids([cur[v] for v in snap.vehicle_ids]))
        prev = cur
    return out


def regen_dynamic(stream: Iterable[Snapshot], reset_interval: int, seed: int = 0) -> list[Snapshot]:
    """Every id is replaced whenever ``captured_at // reset_interval`` changes."""
    if reset_interval <= 0:
        raise InvalidInterval(f"reset_interval must be positive, got {reset_interval}")
    ids = _IdSource(seed)
    epoch = None
    mapping: dict[str, str] = {}
    out = []
    for snap in _ordered(stream):
        e = snap.captured_at // reset_interval
        if e != epoch:
            epoch = e
            mapping = {}
        new = []
        for vid in snap.vehicle_ids:
            m = mapping.get(vid)
            if m is None:
                m = mapping[vid] = ids.fresh()
            new.append(m)
        out.append(snap.with_ids(new))
    return out
