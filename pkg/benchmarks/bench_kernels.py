"""Compare the numba kernels with the numpy fallback on a sampled 4 x 6 grid.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""

import argparse
import random
import time
from fractions import Fraction

import numpy as np

from motsupport import _kernels as K
from motsupport.fuzz import Grid, sample_rows


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    grid = Grid("bench", tuple(Fraction(k, 2) for k in (3, 5, 7, 9)), tuple(Fraction(k) for k in range(1, 7)))
    rows = sample_rows(grid, args.n, random.Random(0))
    ny = len(grid.ys)
    mats = np.random.default_rng(0).integers(0, K.PRIME, size=(200, 40, 60), dtype=np.int64)

    cases = {
        "erase_batch": (lambda: K._erase_batch_numba(rows, ny), lambda: K._erase_batch_numpy(rows, ny)),
        "peel_batch": (lambda: K._peel_batch_numba(rows), lambda: K._peel_batch_numpy(rows)),
        "rank_mod_p x200": (
            lambda: [K._rank_mod_p_numba(m.copy(), K.PRIME) for m in mats],
            lambda: [K._rank_mod_p_numpy(m.copy(), K.PRIME) for m in mats],
        ),
    }
    print(f"{'kernel':18s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, (fast, slow) in cases.items():
        fast()  # compile
        a, b = fast(), slow()
        if isinstance(a, tuple):
            assert all(np.array_equal(u, v) for u, v in zip(a, b))
        elif isinstance(a, list):
            assert a == b
        else:
            assert np.array_equal(a, b)
        tf, ts = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:18s} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f}x")


if __name__ == "__main__":
    main()
