"""Time the numba and numpy backends of the greedy matcher and the binner.

    python benchmarks/bench_kernels.py [--sizes 200,1000,5000] [--repeat 5]

Results are checked for equality before timing, so a mismatch fails loudly.
"""

import argparse
import time

import numpy as np

from gbfs_od import _kernels as K


def _best(fn, args, repeat):
    fn(*args)  # warm-up, includes jit compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="200,1000,5000")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<12}{'n':>7}{'numpy s':>12}{'numba s':>12}{'speedup':>9}")
    for n in (int(s) for s in args.sizes.split(",")):
        # a 10 km square with every B point jittered off an A point or fresh
        ax, ay = rng.uniform(0, 10_000, (2, n))
        bx = ax + rng.normal(0, 20, n)
        by = ay + rng.normal(0, 20, n)
        fresh = rng.random(n) < 0.1
        bx[fresh], by[fresh] = rng.uniform(0, 10_000, (2, fresh.sum()))
        m_args = (ax, ay, bx, by, 100.0)
        for a, b in zip(K.greedy_match_numpy(*m_args), K.greedy_match_numba(*m_args)):
            np.testing.assert_array_equal(a, b)
        t_np = _best(K.greedy_match_numpy, m_args, args.repeat)
        t_nb = _best(K.greedy_match_numba, m_args, args.repeat)
        print(f"{'match':<12}{n:>7}{t_np:>12.5f}{t_nb:>12.5f}{t_np / t_nb:>9.1f}")

        px, py = rng.uniform(0, 10_000, (2, 50 * n))
        b_args = (px, py, 100.0, 100, 100)
        for a, b in zip(K.bin_points_numpy(*b_args), K.bin_points_numba(*b_args)):
            np.testing.assert_array_equal(a, b)
        t_np = _best(K.bin_points_numpy, b_args, args.repeat)
        t_nb = _best(K.bin_points_numba, b_args, args.repeat)
        print(f"{'bin':<12}{50 * n:>7}{t_np:>12.5f}{t_nb:>12.5f}{t_np / t_nb:>9.1f}")


if __name__ == "__main__":
    main()
