"""Grid aggregation of endpoints and benchmark-vs-candidate scoring (R², MAE, SAE)."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .model import EndpointKind, GbfsOdError, GridSpec, TripEndpoint, bbox_of

__all__ = [
    "EvaluationReport", "GridCounts", "GridMismatch", "aggregate", "endpoints_bbox",
    "error_surface", "parse_cell_sizes", "score", "sensitivity_sweep", "write_sweep_csv", "DEFAULT_CELL_SIZES",
]

log = logging.getLogger(__name__)

DEFAULT_CELL_SIZES = tuple(range(100, 1001, 100))


class GridMismatch(GbfsOdError):
    pass


@dataclass(frozen=True)
class GridCounts:
    grid: GridSpec
    kind: EndpointKind
    counts: np.ndarray  # int64, length grid.n_cells
    n_out_of_bounds: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvaluationReport:
    grid: GridSpec
    kind: EndpointKind
    r_squared: float  # nan when the benchmark surface is constant
    mae: float
    sae: float
    sae_over_total: float
    n_cells: int
    total_benchmark: int
    total_candidate: int
    ss_res: float
    ss_tot: float
    per_cell_abs_error: np.ndarray
    benchmark: np.ndarray
    candidate: np.ndarray

    @property
    def degenerate(self) -> bool:
        """True when SS_tot is zero and R² is undefined."""
        return self.ss_tot == 0

    def row(self) -> dict:
        return {
            "cell_size": self.grid.cell_size,
            "kind": self.kind.value,
            "r_squared": self.r_squared,
            "mae": self.mae,
            "sae": self.sae,
            "sae_over_total": self.sae_over_total,
            "n_cells": self.n_cells,
            "total_benchmark": self.total_benchmark,
            "total_candidate": self.total_candidate,
        }


def aggregate(endpoints: Iterable[TripEndpoint], grid: GridSpec, kind: EndpointKind) -> GridCounts:
    """Count endpoints of ``kind`` per cell; points outside the grid are tallied
    in ``n_out_of_bounds`` and logged."""
    kind = EndpointKind(kind)
    pts = [(e.lat, e.lon) for e in endpoints if e.kind == kind]
    if pts:
        lat, lon = np.array(pts, dtype=np.float64).T
    else:
        lat = lon = np.empty(0, np.float64)
    x, y = grid.project(lat, lon)
    counts, oob = _kernels.bin_points(x, y, grid.cell_size, grid.n_rows, grid.n_cols)
    if oob:
        log.warning("%d %s endpoints fall outside the grid", oob, kind.value)
    return GridCounts(grid, kind, counts, oob)


def score(benchmark: GridCounts, candidate: GridCounts) -> EvaluationReport:
    """Compare a candidate count surface against the benchmark over every cell,
    empty cells included."""
    if benchmark.grid != candidate.grid:
        raise GridMismatch("benchmark and candidate use different grids")
    if benchmark.kind != candidate.kind:
        raise GridMismatch("benchmark and candidate count different endpoint kinds")
    y = benchmark.counts.astype(np.float64)
    yhat = candidate.counts.astype(np.float64)
    n = len(y)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - yhat) ** 2))
    abs_err = np.abs(benchmark.counts - candidate.counts)
    sae = float(abs_err.sum())
    if ss_tot == 0:
        log.warning("benchmark surface is constant; R² is undefined")
        r2 = math.nan
    else:
        r2 = 1.0 - ss_res / ss_tot
    total = benchmark.total
    return EvaluationReport(
        grid=benchmark.grid,
        kind=benchmark.kind,
        r_squared=r2,
        mae=sae / n,
        sae=sae,
        sae_over_total=sae / total if total else math.nan,
        n_cells=n,
        total_benchmark=total,
        total_candidate=candidate.total,
        ss_res=ss_res,
        ss_tot=ss_tot,
        per_cell_abs_error=abs_err,
        benchmark=benchmark.counts,
        candidate=candidate.counts,
    )


def endpoints_bbox(*endpoint_sets: Iterable[TripEndpoint]) -> tuple[float, float, float, float]:
    lats, lons = [], []
    for eps in endpoint_sets:
        for e in eps:
            lats.append(e.lat)
            lons.append(e.lon)
    return bbox_of(lats, lons)


def sensitivity_sweep(
    benchmark_endpoints: Sequence[TripEndpoint],
    candidate_endpoints: Sequence[TripEndpoint],
    cell_sizes: Sequence[float] = DEFAULT_CELL_SIZES,
    bbox: tuple[float, float, float, float] | None = None,
    kinds: Sequence[EndpointKind] = (EndpointKind.ORIGIN, EndpointKind.DESTINATION),
) -> list[EvaluationReport]:
    """Score origins and destinations at every cell size.

    All grids share the southwest corner of ``bbox`` (default: the bounding box
    of both endpoint sets) and cover it completely; edge cells may overhang.
    """
    if not cell_sizes or any(not s > 0 for s in cell_sizes):
        raise ValueError("cell_sizes must be a non-empty list of positive sizes")
    if bbox is None:
        bbox = endpoints_bbox(benchmark_endpoints, candidate_endpoints)
    reports = []
    for size in cell_sizes:
        grid = GridSpec.covering(bbox, float(size))
        for kind in kinds:
            reports.append(score(aggregate(benchmark_endpoints, grid, kind),
                                 aggregate(candidate_endpoints, grid, kind)))
    return reports


def error_surface(report: EvaluationReport, drop_zero: bool = False) -> dict:
    """GeoJSON FeatureCollection with one polygon per cell and its absolute error."""
    features = []
    grid = report.grid
    for idx in range(grid.n_cells):
        err = int(report.per_cell_abs_error[idx])
        if drop_zero and err == 0:
            continue
        row, col = divmod(idx, grid.n_cols)
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [grid.cell_polygon(idx)]},
            "properties": {
                "cell": idx, "row": row, "col": col,
                "abs_error": err,
                "benchmark": int(report.benchmark[idx]),
                "candidate": int(report.candidate[idx]),
            },
        })
    return {
        "type": "FeatureCollection",
        "properties": {"kind": report.kind.value, "cell_size": grid.cell_size},
        "features": features,
    }


SWEEP_COLUMNS = ("cell_size", "kind", "r_squared", "mae", "sae", "sae_over_total",
                 "n_cells", "total_benchmark", "total_candidate")


def write_sweep_csv(reports: Sequence[EvaluationReport], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.row().items()})


def parse_cell_sizes(text: str) -> list[float]:
    """``"100..1000:100"`` (inclusive range with step) or ``"100,400,1000"``."""
    text = text.strip()
    if ".." in text:
        span, _, step = text.partition(":")
        lo, _, hi = span.partition("..")
        lo_f, hi_f = float(lo), float(hi)
        step_f = float(step) if step else lo_f
        if step_f <= 0 or hi_f < lo_f:
            raise ValueError(f"bad cell size range {text!r}")
        n = int(math.floor((hi_f - lo_f) / step_f + 1e-9)) + 1
        sizes = [lo_f + i * step_f for i in range(n)]
    else:
        sizes = [float(p) for p in text.split(",") if p.strip()]
    if not sizes or any(s <= 0 for s in sizes):
        raise ValueError(f"bad cell sizes {text!r}")
    return sizes
