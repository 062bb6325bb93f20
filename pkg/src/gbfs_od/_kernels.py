"""Numeric hot loops with a numba path and a pure-numpy fallback.

Set ``GBFS_OD_BACKEND=numpy`` to force the fallback; by default the numba
path is used whenever numba imports. Both paths return identical results.
"""

from __future__ import annotations

import logging
import os

import numpy as np

log = logging.getLogger(__name__)

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

HAVE_NUMBA = numba is not None
BACKEND = os.environ.get("GBFS_OD_BACKEND", "numba" if HAVE_NUMBA else "numpy").lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"GBFS_OD_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
if BACKEND == "numba" and not HAVE_NUMBA:
    log.warning("GBFS_OD_BACKEND=numba but numba is not importable; using numpy")
    BACKEND = "numpy"

_ROW_CHUNK = 1024


# --------------------------------------------------------------------------
# greedy bipartite matching under a distance cap


def _accept_in_order(order, pi, pj, n_a, n_b):
    match_a = np.full(n_a, -1, dtype=np.int64)
    match_b = np.full(n_b, -1, dtype=np.int64)
    for k in order:
        i = pi[k]
        j = pj[k]
        if match_a[i] < 0 and match_b[j] < 0:
            match_a[i] = j
            match_b[j] = i
    return match_a, match_b


def greedy_match_numpy(ax, ay, bx, by, max_dist):
    """Greedy minimum-distance matching of points A to points B.

    Pairs are taken in ascending distance (ties: lower A index, then lower B
    index) until the smallest remaining distance exceeds ``max_dist``.
    Returns ``(match_a, match_b)``: partner index per point or -1.
    """
    ax = np.asarray(ax, np.float64)
    ay = np.asarray(ay, np.float64)
    bx = np.asarray(bx, np.float64)
    by = np.asarray(by, np.float64)
    n_a, n_b = len(ax), len(bx)
    if n_a == 0 or n_b == 0:
        return np.full(n_a, -1, np.int64), np.full(n_b, -1, np.int64)
    pis, pjs, pds = [], [], []
    for start in range(0, n_a, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n_a)
        d = np.hypot(ax[start:stop, None] - bx[None, :], ay[start:stop, None] - by[None, :])
        i, j = np.nonzero(d <= max_dist)
        pis.append(i + start)
        pjs.append(j)
        pds.append(d[i, j])
    pi = np.concatenate(pis)
    pj = np.concatenate(pjs)
    pd = np.concatenate(pds)
    # nonzero yields row-major (i, j) order, so a stable sort on d keeps the tie rule
    order = np.argsort(pd, kind="stable")
    return _accept_in_order(order, pi, pj, n_a, n_b)


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _greedy_match_nb(ax, ay, bx, by, max_dist):
        n_a = ax.shape[0]
        n_b = bx.shape[0]
        match_a = np.full(n_a, -1, dtype=np.int64)
        match_b = np.full(n_b, -1, dtype=np.int64)
        if n_a == 0 or n_b == 0:
            return match_a, match_b

        # bucket B by cells of side max_dist; only the 3x3 neighbourhood can match
        # slightly wider than max_dist so rounding can never push a valid pair two cells apart
        cell = max_dist * (1.0 + 1e-9) if max_dist > 0.0 else 1.0
        xmin = bx.min()
        ymin = by.min()
        bcx = np.empty(n_b, dtype=np.int64)
        bcy = np.empty(n_b, dtype=np.int64)
        for j in range(n_b):
            bcx[j] = np.int64(np.floor((bx[j] - xmin) / cell))
            bcy[j] = np.int64(np.floor((by[j] - ymin) / cell))
        ny = bcy.max() + 3
        xcap = bcx.max() + 2.0
        keys = bcx * ny + bcy
        border = np.argsort(keys, kind="mergesort")
        skeys = keys[border]

        cap = 64
        pi = np.empty(cap, dtype=np.int64)
        pj = np.empty(cap, dtype=np.int64)
        pd = np.empty(cap, dtype=np.float64)
        m = 0
        for i in range(n_a):
            fx = (ax[i] - xmin) / cell
            fy = (ay[i] - ymin) / cell
            if fx < -2.0 or fy < -2.0 or fx > xcap or fy > ny:
                continue
            cx = np.int64(np.floor(fx))
            cy = np.int64(np.floor(fy))
            for dx in range(-1, 2):
                for dy in range(-1, 2):
                    qx = cx + dx
                    qy = cy + dy
                    if qx < 0 or qy < 0 or qy >= ny:
                        continue
                    key = qx * ny + qy
                    lo = np.searchsorted(skeys, key)
                    hi = np.searchsorted(skeys, key, side="right")
                    for t in range(lo, hi):
                        j = border[t]
                        d = np.hypot(ax[i] - bx[j], ay[i] - by[j])
                        if d <= max_dist:
                            if m == cap:
                                cap *= 2
                                pi2 = np.empty(cap, dtype=np.int64)
                                pj2 = np.empty(cap, dtype=np.int64)
                                pd2 = np.empty(cap, dtype=np.float64)
                                pi2[:m] = pi[:m]
                                pj2[:m] = pj[:m]
                                pd2[:m] = pd[:m]
                                pi, pj, pd = pi2, pj2, pd2
                            pi[m] = i
                            pj[m] = j
                            pd[m] = d
                            m += 1
        pi = pi[:m]
        pj = pj[:m]
        pd = pd[:m]
        # order by (d, i, j): stable sorts from the least significant key up
        o1 = np.argsort(pj, kind="mergesort")
        o2 = o1[np.argsort(pi[o1], kind="mergesort")]
        order = o2[np.argsort(pd[o2], kind="mergesort")]
        for k in order:
            i = pi[k]
            j = pj[k]
            if match_a[i] < 0 and match_b[j] < 0:
                match_a[i] = j
                match_b[j] = i
        return match_a, match_b

    def greedy_match_numba(ax, ay, bx, by, max_dist):
        return _greedy_match_nb(
            np.ascontiguousarray(ax, np.float64), np.ascontiguousarray(ay, np.float64),
            np.ascontiguousarray(bx, np.float64), np.ascontiguousarray(by, np.float64),
            float(max_dist),
        )

else:  # pragma: no cover
    greedy_match_numba = None


# --------------------------------------------------------------------------
# grid binning


def bin_points_numpy(x, y, cell_size, n_rows, n_cols):
    """Per-cell counts of planar points; returns ``(counts, n_out_of_bounds)``."""
    x = np.asarray(x, np.float64)
    y = np.asarray(y, np.float64)
    col = np.floor(x / cell_size)
    row = np.floor(y / cell_size)
    ok = (col >= 0) & (col < n_cols) & (row >= 0) & (row < n_rows)
    idx = row[ok].astype(np.int64) * n_cols + col[ok].astype(np.int64)
    counts = np.bincount(idx, minlength=n_rows * n_cols).astype(np.int64)
    return counts, int(len(x) - ok.sum())


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _bin_points_nb(x, y, cell_size, n_rows, n_cols):
        counts = np.zeros(n_rows * n_cols, dtype=np.int64)
        oob = 0
        for k in range(x.shape[0]):
            col = np.floor(x[k] / cell_size)
            row = np.floor(y[k] / cell_size)
            if col < 0 or col >= n_cols or row < 0 or row >= n_rows:
                oob += 1
            else:
                counts[np.int64(row) * n_cols + np.int64(col)] += 1
        return counts, oob

    def bin_points_numba(x, y, cell_size, n_rows, n_cols):
        counts, oob = _bin_points_nb(
            np.ascontiguousarray(x, np.float64), np.ascontiguousarray(y, np.float64),
            float(cell_size), int(n_rows), int(n_cols),
        )
        return counts, int(oob)

else:  # pragma: no cover
    bin_points_numba = None


if BACKEND == "numba":
    greedy_match = greedy_match_numba
    bin_points = bin_points_numba
else:
    greedy_match = greedy_match_numpy
    bin_points = bin_points_numpy
