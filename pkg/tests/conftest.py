import math
import os

import numpy as np
import pytest
from hypothesis import settings

from gbfs_od.model import Snapshot

settings.register_profile("default", deadline=None)
settings.load_profile("default")

EARTH_R = 6_371_000.0


def haversine(a, b):
    """Great-circle distance in meters; independent of the package geometry."""
    p1, p2 = math.radians(a[0]), math.radians(b[0])
    dp = p2 - p1
    dl = math.radians(b[1] - a[1])
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_R * math.asin(math.sqrt(h))


def greedy_oracle(a_pts, b_pts, max_dist):
    """Literal repeated-minimum extraction over a full distance matrix."""
    a_left = set(range(len(a_pts)))
    b_left = set(range(len(b_pts)))
    pairs = []
    while a_left and b_left:
        best = None
        for i in sorted(a_left):
            for j in sorted(b_left):
                d = math.hypot(a_pts[i][0] - b_pts[j][0], a_pts[i][1] - b_pts[j][1])
                if best is None or d < best[0]:
                    best = (d, i, j)
        if best[0] > max_dist:
            break
        pairs.append((best[1], best[2]))
        a_left.discard(best[1])
        b_left.discard(best[2])
    return pairs


def snap(t, rows, feed_id="f", ttl=60):
    """Snapshot from (id, lat, lon) or (id, lat, lon, reserved, disabled) tuples."""
    ids = [r[0] for r in rows]
    lat = [r[1] for r in rows]
    lon = [r[2] for r in rows]
    res = [r[3] if len(r) > 3 else 0 for r in rows]
    dis = [r[4] if len(r) > 4 else 0 for r in rows]
    return Snapshot(feed_id, t, ttl, ids, lat, lon, res, dis)


@pytest.fixture
def tmp_store(tmp_path):
    from gbfs_od.feed import SnapshotStore
    return SnapshotStore(tmp_path / "archive")


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    from gbfs_od import _kernels
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    return request.param


# one summary line per acceptance criterion ------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        num = int(report.nodeid.split("test_criterion_")[1].split("_")[0])
        props = dict(report.user_properties)
        status = "PASS" if report.outcome == "passed" else "FAIL"
        if num in _CRITERIA and _CRITERIA[num][0] == "FAIL":
            return
        _CRITERIA[num] = (status, props.get("title", ""), props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num} [{status}] {title}: {detail}")
