"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py --rows 1000000 --repeat 5
"""
import argparse
import timeit

import numpy as np

from trendparadox._kernels import _numba, _numpy


def inputs(rows, seed):
    rng = np.random.default_rng(seed)
    actors = max(rows // 60, 1)
    who = np.sort(rng.integers(0, actors, rows))
    new_actor = np.ones(rows, dtype=bool)
    new_actor[1:] = who[1:] != who[:-1]
    gaps = np.where(rng.random(rows) < 0.2, 7200.0, rng.uniform(1, 900, rows))
    ts = np.cumsum(gaps)
    x = rng.normal(size=rows)
    y = (rng.random(rows) < 1 / (1 + np.exp(-0.7 * x))).astype(np.float64)
    return {
        "session_positions": (new_actor, ts, 3600.0),
        "grouped_cumsum": (ts, gaps, new_actor),
        "logistic_newton": (x, y, 0.0, 0.0, 100, 1e-8, 30.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cases = inputs(args.rows, args.seed)
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, call_args in cases.items():
        ref, fast = getattr(_numpy, name), getattr(_numba, name)
        fast(*call_args)  # compile or load from cache before timing
        ta = min(timeit.repeat(lambda: ref(*call_args), number=1, repeat=args.repeat))
        tb = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<20}{ta * 1e3:>12.2f}{tb * 1e3:>12.2f}{ta / tb:>9.1f}x")


if __name__ == "__main__":
    main()
