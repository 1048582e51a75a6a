#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from sear import _accel, kernels
from sear.core import pack_trajectories
from sear.figure8 import move_maps
from sear.geometry import SamplerParams, sample_instance
from sear.pipeline import solve


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        tic = time.perf_counter()
        fn()
        times.append(time.perf_counter() - tic)
    return min(times)


def cases():
    gens = move_maps(10)
    yield "perm_bfs (10! states)", (lambda: kernels.perm_bfs_numba(gens)), (lambda: kernels.perm_bfs_numpy(gens))

    plan, _, _ = solve(sample_instance(SamplerParams(n=100, seed=0)))
    times, pts, offs = pack_trajectories(plan.trajectories)
    bounds = np.unique(np.concatenate([times, [0.0, plan.makespan]]))
    yield ("clearance_scan (n=100 plan)",
           lambda: kernels.clearance_scan_numba(times, pts, offs, bounds, 2.0 - 1e-6),
           lambda: kernels.clearance_scan_numpy(times, pts, offs, bounds, 2.0 - 1e-6))

    cand = np.random.default_rng(0).uniform(-40, 40, size=(200_000, 2))

    def fill(use):
        acc = np.empty((400, 2))
        kernels.reject_fill(cand, 40.0, 2.0, acc, 0, 0, 10**9, use_numba=use)
    yield "reject_fill (400 discs)", (lambda: fill(True)), (lambda: fill(False))

    rng = np.random.default_rng(1)
    nv, cyc, steps = 2000, [], []
    for _ in range(3000):
        free = rng.permutation(nv)
        k = int(rng.integers(1, 50))
        cyc.extend(free[4 * j:4 * j + 4] for j in range(k))
        steps.append(k)
    cv = np.concatenate(cyc).astype(np.int64)
    co = np.arange(0, 4 * len(cyc) + 1, 4, dtype=np.int64)
    so = np.concatenate([[0], np.cumsum(steps)]).astype(np.int64)
    yield ("asap_levels (3000 steps)",
           lambda: kernels.asap_levels(cv, co, so, nv, use_numba=True),
           lambda: kernels.asap_levels(cv, co, so, nv, use_numba=False))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':32s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, fast, slow in cases():
        fast()  # compile outside the timing
        t_nb = best_of(fast, args.repeat)
        t_np = best_of(slow, args.repeat)
        print(f"{name:32s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
