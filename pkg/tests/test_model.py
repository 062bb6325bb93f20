import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gbfs_od.model import (
    Algorithm, DuplicateVehicleId, EndpointKind, GridSpec, LocalProjection, NonMonotonicStream,
    OutOfBounds, SchemaViolation, Snapshot, TripEndpoint, TripOD, VehicleRecord, bbox_of,
    cell_index, check_monotonic, geo_distance, iter_pairs,
)

from conftest import haversine, snap

DC = (38.9, -77.0)


# distances -----------------------------------------------------------------

def test_distance_identity():
    assert geo_distance(DC, DC) == 0.0


def test_distance_north_1km_against_haversine():
    b = (38.909, -77.0)
    d = geo_distance(DC, b)
    assert abs(d - 1000.0) <= 1.0
    assert abs(d - haversine(DC, b)) < 1e-6


@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_distance_close_to_haversine_at_city_scale(a1, a2, b1, b2):
    a, b = (DC[0] + a1, DC[1] + a2), (DC[0] + b1, DC[1] + b2)
    d, h = geo_distance(a, b), haversine(a, b)
    assert abs(d - h) <= 1e-3 * h + 1e-6


def test_distance_symmetric_on_random_pairs():
    rng = np.random.default_rng(1)
    for lat1, lon1, lat2, lon2 in rng.uniform([38, -78, 38, -78], [40, -76, 40, -76], (1000, 4)):
        assert geo_distance((lat1, lon1), (lat2, lon2)) == geo_distance((lat2, lon2), (lat1, lon1))


@given(st.lists(st.tuples(st.floats(0, 0.45), st.floats(0, 0.58)), min_size=3, max_size=3))
def test_triangle_inequality_in_50km_box(pts):
    a, b, c = [(DC[0] + p, DC[1] + q) for p, q in pts]
    ab, bc, ac = geo_distance(a, b), geo_distance(b, c), geo_distance(a, c)
    assert ac <= (ab + bc) * (1 + 1e-6) + 1e-9


def test_distance_zero_iff_identical():
    assert geo_distance(DC, (38.9, -77.0 + 1e-9)) > 0


# projection ------------------------------------------------------------------

@given(st.floats(-5000, 5000), st.floats(-5000, 5000))
def test_projection_roundtrip(x, y):
    p = LocalProjection(38.9, 38.85, -77.1)
    lat, lon = p.inverse(x, y)
    x2, y2 = p.forward(lat, lon)
    assert abs(x2 - x) < 1e-6 and abs(y2 - y) < 1e-6


# grid ------------------------------------------------------------------------

def _grid(n_rows=10, n_cols=10, size=100.0):
    return GridSpec(DC, size, n_rows, n_cols, DC[0])


def _offset(grid, east, north):
    lat, lon = grid.projection.inverse(east, north)
    return float(lat), float(lon)


def test_cell_index_corner_is_zero():
    assert cell_index(DC, _grid()) == 0


def test_cell_index_150m_ne():
    g = _grid()
    assert cell_index(_offset(g, 150, 150), g) == 11


def test_cell_index_west_of_corner_out_of_bounds():
    g = _grid()
    with pytest.raises(OutOfBounds):
        cell_index(_offset(g, -1, 0), g)
    with pytest.raises(OutOfBounds):
        cell_index(_offset(g, 0, 1000), g)


def test_edge_goes_to_higher_cell():
    g = _grid()
    assert cell_index(_offset(g, 100, 50), g) == 1
    assert cell_index(_offset(g, 50, 100), g) == 10
    assert cell_index(_offset(g, 99.99, 50), g) == 0


@given(st.floats(0, 999.99), st.floats(0, 999.99))
def test_cell_contains_point(x, y):
    g = _grid()
    idx = cell_index(_offset(g, x, y), g)
    x0, y0, x1, y1 = g.cell_bounds(idx)
    assert x0 - 1e-5 <= x < x1 + 1e-5 and y0 - 1e-5 <= y < y1 + 1e-5


def test_covering_contains_bbox_corners():
    bbox = (38.87, -77.06, 38.93, -76.98)
    for size in (100, 333, 1000):
        g = GridSpec.covering(bbox, size)
        for p in [(bbox[0], bbox[1]), (bbox[2], bbox[3]), (bbox[0], bbox[3]), (bbox[2], bbox[1])]:
            assert 0 <= cell_index(p, g) < g.n_cells


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(DC, 0, 1, 1, 38.9)
    with pytest.raises(ValueError):
        GridSpec(DC, 100, 0, 1, 38.9)


def test_cell_polygon_closed_ring():
    ring = _grid().cell_polygon(11)
    assert len(ring) == 5 and ring[0] == ring[-1]
    assert ring[0][0] < ring[1][0]  # eastward first


# records and snapshots ---------------------------------------------------

def test_vehicle_record_validation():
    VehicleRecord("a", 38.9, -77.0, 0, 0, 10)
    for bad in [dict(lat=91), dict(lon=-181), dict(vehicle_id=""), dict(observed_at=0)]:
        kw = dict(vehicle_id="a", lat=38.9, lon=-77.0, is_reserved=0, is_disabled=0, observed_at=10)
        kw.update(bad)
        with pytest.raises(SchemaViolation):
            VehicleRecord(**kw)


def test_snapshot_rejects_duplicates_and_bad_values():
    with pytest.raises(DuplicateVehicleId) as exc:
        snap(10, [("a", 38.9, -77.0), ("a", 38.91, -77.0)])
    assert exc.value.vehicle_id == "a"
    with pytest.raises(SchemaViolation):
        snap(10, [("a", 95.0, -77.0)])
    with pytest.raises(SchemaViolation):
        snap(0, [])
    with pytest.raises(SchemaViolation):
        Snapshot("f", 10, -1, [], [], [])


def test_snapshot_records_and_equality():
    s = snap(10, [("a", 38.9, -77.0, 0, 1), ("b", 38.8, -77.1)])
    recs = s.records
    assert [r.vehicle_id for r in recs] == ["a", "b"]
    assert recs[0].is_disabled == 1 and recs[0].observed_at == 10
    assert Snapshot.from_records("f", 10, 60, recs) == s
    assert s != snap(10, [("a", 38.9, -77.0), ("b", 38.8, -77.1)])
    assert len(s) == 2
    with pytest.raises(ValueError):
        s.lat[0] = 0.0


def test_with_ids_keeps_positions():
    s = snap(10, [("a", 38.9, -77.0), ("b", 38.8, -77.1)])
    t = s.with_ids(["x", "y"])
    assert t.vehicle_ids == ("x", "y")
    np.testing.assert_array_equal(t.lat, s.lat)


def test_tripod_between():
    o = TripEndpoint(EndpointKind.ORIGIN, 38.9, -77.0, 100, "v", Algorithm.STATIC)
    d = TripEndpoint(EndpointKind.DESTINATION, 38.909, -77.0, 700, "v", Algorithm.STATIC)
    t = TripOD.between(o, d, "x")
    assert t.duration == 600
    assert math.isclose(t.average_speed, t.straight_line_distance / 600)


def test_monotonic_helpers():
    a, b = snap(10, []), snap(20, [])
    check_monotonic([a, b])
    assert list(iter_pairs([a, b])) == [(a, b)]
    with pytest.raises(NonMonotonicStream):
        check_monotonic([b, a])


def test_bbox_of():
    assert bbox_of([1, 3], [5, 2]) == (1, 2, 3, 5)
    with pytest.raises(ValueError):
        bbox_of([], [])
