"""Tables behind temporal histograms and density maps of inferred endpoints."""

from __future__ import annotations

import csv
import os
from collections import Counter
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from .evaluation import aggregate, endpoints_bbox
from .model import EndpointKind, GridSpec, TripEndpoint

BUCKETS = {"hour": 168, "hour-of-day": 24}


def _bucket(ts: int, bucket: str) -> int:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    if bucket == "hour":
        return dt.weekday() * 24 + dt.hour  # Monday 00h is bucket 0
    return dt.hour


def temporal_counts(endpoints: Sequence[TripEndpoint], bucket: str = "hour") -> list[dict]:
    """Endpoint counts per (vendor, kind, UTC time bucket), zero buckets included.

    ``bucket="hour"`` is hour of week (0 = Monday 00:00 UTC), ``"hour-of-day"`` 0..23.
    """
    if bucket not in BUCKETS:
        raise ValueError(f"bucket must be one of {sorted(BUCKETS)}")
    counts = Counter((e.vendor, e.kind.value, _bucket(e.at, bucket)) for e in endpoints)
    groups = sorted({(v, k) for v, k, _ in counts})
    return [
        {"vendor": v, "kind": k, "bucket": b, "count": counts.get((v, k, b), 0)}
        for v, k in groups
        for b in range(BUCKETS[bucket])
    ]


def density_table(
    endpoints: Sequence[TripEndpoint],
    cell_size: float,
    bbox: tuple[float, float, float, float] | None = None,
    days: float | None = None,
) -> list[dict]:
    """Per-cell endpoint density in trips per day per km².

    ``days`` defaults to the time span covered by the endpoints (at least one day).
    """
    if not endpoints:
        return []
    if bbox is None:
        bbox = endpoints_bbox(endpoints)
    if days is None:
        times = [e.at for e in endpoints]
        days = max((max(times) - min(times)) / 86400.0, 1.0)
    if days <= 0:
        raise ValueError("days must be positive")
    grid = GridSpec.covering(bbox, cell_size)
    area_km2 = (cell_size / 1000.0) ** 2
    rows = []
    for kind in EndpointKind:
        gc = aggregate(endpoints, grid, kind)
        for idx in np.nonzero(gc.counts)[0].tolist():
            x0, y0, x1, y1 = grid.cell_bounds(idx)
            lat, lon = grid.projection.inverse(0.5 * (x0 + x1), 0.5 * (y0 + y1))
            row, col = divmod(idx, grid.n_cols)
            n = int(gc.counts[idx])
            rows.append({
                "kind": kind.value, "cell": idx, "row": row, "col": col,
                "center_lat": float(lat), "center_lon": float(lon),
                "count": n, "density_per_day_km2": n / days / area_km2,
            })
    return rows


def write_rows(rows: list[dict], path: str | os.PathLike, columns: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
