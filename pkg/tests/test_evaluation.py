import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gbfs_od.evaluation import (
    DEFAULT_CELL_SIZES, GridCounts, GridMismatch, aggregate, error_surface, parse_cell_sizes, score,
    sensitivity_sweep, write_sweep_csv,
)
from gbfs_od.model import Algorithm, EndpointKind, GridSpec, TripEndpoint

O, D = EndpointKind.ORIGIN, EndpointKind.DESTINATION
GRID3 = GridSpec((38.9, -77.0), 100.0, 1, 3, 38.9)


def counts(values, kind=O, grid=GRID3):
    return GridCounts(grid, kind, np.asarray(values, dtype=np.int64))


def ep(lat, lon, kind=O, t=100):
    return TripEndpoint(kind, lat, lon, t, "v", Algorithm.STATIC)


def _offset(grid, east, north):
    lat, lon = grid.projection.inverse(east, north)
    return float(lat), float(lon)


def test_identical_surfaces():
    r = score(counts([1, 2, 3]), counts([1, 2, 3]))
    assert (r.r_squared, r.mae, r.sae) == (1.0, 0.0, 0.0)


def test_hand_example_one_off():
    r = score(counts([1, 2, 3]), counts([1, 2, 4]))
    assert (r.ss_res, r.ss_tot, r.r_squared, r.sae) == (1.0, 2.0, 0.5, 1.0)
    assert math.isclose(r.mae, 1 / 3, rel_tol=1e-12)
    assert math.isclose(r.sae_over_total, 1 / 6, rel_tol=1e-12)


def test_hand_example_flat_candidate():
    r = score(counts([1, 2, 3]), counts([2, 2, 2]))
    assert (r.ss_res, r.ss_tot, r.r_squared, r.sae) == (2.0, 2.0, 0.0, 2.0)
    assert math.isclose(r.mae, 2 / 3, rel_tol=1e-12)


def test_degenerate_benchmark():
    r = score(counts([2, 2, 2]), counts([1, 2, 3]))
    assert r.degenerate and math.isnan(r.r_squared)
    assert r.sae == 2.0 and math.isclose(r.mae, 2 / 3)


def test_mismatch():
    other = GridSpec((38.9, -77.0), 200.0, 1, 3, 38.9)
    with pytest.raises(GridMismatch):
        score(counts([1, 2, 3]), counts([1, 2, 3], grid=other))
    with pytest.raises(GridMismatch):
        score(counts([1, 2, 3]), counts([1, 2, 3], kind=D))


@given(st.lists(st.integers(0, 20), min_size=2, max_size=30), st.data())
def test_report_invariants(y, data):
    yhat = data.draw(st.lists(st.integers(0, 20), min_size=len(y), max_size=len(y)))
    grid = GridSpec((38.9, -77.0), 100.0, 1, len(y), 38.9)
    r = score(counts(y, grid=grid), counts(yhat, grid=grid))
    assert r.sae >= 0 and math.isclose(r.sae, r.mae * r.n_cells, rel_tol=1e-12, abs_tol=1e-12)
    assert r.degenerate or r.r_squared <= 1.0
    ya, yh = np.array(y, float), np.array(yhat, float)
    if not r.degenerate:
        expected = 1 - np.sum((ya - yh) ** 2) / np.sum((ya - ya.mean()) ** 2)
        assert math.isclose(r.r_squared, expected, rel_tol=1e-12, abs_tol=1e-12)


def test_aggregate_basic():
    g = GridSpec((38.9, -77.0), 100.0, 2, 2, 38.9)
    assert aggregate([], g, O).counts.tolist() == [0, 0, 0, 0]
    pts = [ep(*_offset(g, 10, 10)), ep(*_offset(g, 20, 30)), ep(*_offset(g, 50, 50)),
           ep(*_offset(g, 150, 150)), ep(*_offset(g, 10, 10), kind=D), ep(*_offset(g, 500, 10))]
    gc = aggregate(pts, g, O)
    assert gc.counts.tolist() == [3, 0, 0, 1] and gc.total == 4 and gc.n_out_of_bounds == 1


def test_aggregate_edge_goes_up():
    g = GridSpec((38.9, -77.0), 100.0, 2, 2, 38.9)
    assert aggregate([ep(*_offset(g, 100, 0))], g, O).counts.tolist() == [0, 1, 0, 0]
    assert aggregate([ep(*_offset(g, 0, 100))], g, O).counts.tolist() == [0, 0, 1, 0]


def _random_endpoints(rng, n):
    lat = 38.88 + rng.random(n) * 0.04
    lon = -77.05 + rng.random(n) * 0.06
    out = []
    for i in range(n):
        out.append(ep(lat[i], lon[i], O if i % 2 else D, 100 + i))
    return out


def test_sweep_shape_and_self_score():
    eps = _random_endpoints(np.random.default_rng(0), 400)
    rows = sensitivity_sweep(eps, eps)
    assert len(rows) == 20
    assert [r.grid.cell_size for r in rows[::2]] == [float(s) for s in DEFAULT_CELL_SIZES]
    assert all(r.r_squared == 1.0 and r.sae == 0 for r in rows)
    corners = {r.grid.origin_corner for r in rows}
    assert len(corners) == 1


def test_single_cell_cancels():
    rng = np.random.default_rng(1)
    a = _random_endpoints(rng, 100)
    b = _random_endpoints(rng, 100)
    r = sensitivity_sweep(a, b, [100_000])
    assert all(x.n_cells == 1 and x.sae == 0 for x in r)


def test_sweep_rejects_bad_sizes():
    with pytest.raises(ValueError):
        sensitivity_sweep([], [], [])
    with pytest.raises(ValueError):
        sensitivity_sweep([], [], [0])


def test_error_surface_geojson():
    r = score(counts([1, 2, 3]), counts([1, 2, 4]))
    fc = error_surface(r)
    assert fc["type"] == "FeatureCollection" and len(fc["features"]) == 3
    f = fc["features"][2]
    assert f["properties"] == {"cell": 2, "row": 0, "col": 2, "abs_error": 1,
                               "benchmark": 3, "candidate": 4}
    ring = f["geometry"]["coordinates"][0]
    assert ring[0] == ring[-1] and len(ring) == 5
    assert len(error_surface(r, drop_zero=True)["features"]) == 1
    json.dumps(fc)


def test_sweep_csv(tmp_path):
    eps = _random_endpoints(np.random.default_rng(0), 50)
    write_sweep_csv(sensitivity_sweep(eps, eps, [200, 400]), tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].startswith("cell_size,kind,r_squared") and len(lines) == 5


def test_parse_cell_sizes():
    assert parse_cell_sizes("100..1000:100") == [float(s) for s in range(100, 1001, 100)]
    assert parse_cell_sizes("100,400") == [100.0, 400.0]
    assert parse_cell_sizes("250..250") == [250.0]
    for bad in ["", "100..50:10", "0,100", "100..200:0"]:
        with pytest.raises(ValueError):
            parse_cell_sizes(bad)
