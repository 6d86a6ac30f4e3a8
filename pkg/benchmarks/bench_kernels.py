"""Time the compiled kernels against the numpy fallback on representative inputs.

Usage: python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from lcelab import _fallback

try:
    from lcelab import _kernels
except ImportError:  # extension not built
    _kernels = None


def _cases(rng):
    A = rng.standard_normal((32, 96))
    G = np.ascontiguousarray(A.T @ A)
    X = rng.standard_normal((18, 8))
    G_small = np.ascontiguousarray(X @ X.T)
    denom = np.concatenate([[1.0], np.sqrt(8.0 * np.arange(1, 19)) + np.arange(1, 19) * np.log(2 * 18 / 8)])
    n = 6
    P_A = np.vstack([np.eye(n), -np.eye(n)])
    P_b = np.sqrt(3.0) * np.ones(2 * n)
    steps = 200_000
    dirs = rng.standard_normal((steps, n))
    us = rng.random(steps)
    cloud = rng.uniform(-1, 1, size=(60_000, 3))

    def restricted(mod):
        return mod.max_restricted_eig(G, 3, 0.0)

    def cross(mod):
        return mod.subset_cross_max(G_small)

    def subset(mod):
        return mod.subset_sum_ratio(np.ascontiguousarray(X), denom)

    def har(mod):
        x = np.zeros(n)
        out = np.empty((steps // 36 + 1, n))
        return mod.hit_and_run(P_A, P_b, x, dirs, us, 0, 0, 36, 1e-12, out, 0)

    def fps(mod):
        return mod.farthest_point(cloud, 0, 0.3, 10_000)

    return {
        "max_restricted_eig (N=96, m=3)": restricted,
        "subset_cross_max (N=18)": cross,
        "subset_sum_ratio (N=18)": subset,
        "hit_and_run (2e5 steps, n=6)": har,
        "farthest_point (6e4 x 3)": fps,
    }


def _best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write timings as JSON")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(20240601)
    rows = []
    print(f"{'kernel':34s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, case in _cases(rng).items():
        t_py = _best_time(lambda: case(_fallback), args.repeat)
        t_c = _best_time(lambda: case(_kernels), args.repeat) if _kernels else float("nan")
        speed = t_py / t_c if _kernels else float("nan")
        rows.append({"kernel": name, "python": t_py, "compiled": t_c, "speedup": speed})
        print(f"{name:34s} {t_py:11.4f} {t_c:13.4f} {speed:8.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
