"""Compare the compiled and pure-Python kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each kernel is timed on both backends with identical inputs; outputs are
checked for equality before any timing is reported.
"""
import argparse
import time

import numpy as np

from bernet import kernels
from bernet.rng import derive_key, replicate_keys


def cases(quick: bool):
    r = 200 if quick else 2000
    keys = replicate_keys(7, r)
    pts = np.random.default_rng(0).random((2 * 4096, 2))
    labels = np.random.default_rng(1).random((64, 64, 33)) < 0.15
    return {
        "net_states 256x256": lambda b: b.net_states(11, 256, (256,), 0.3),
        f"longest_run_batch 64x64 x{r}": lambda b: b.longest_run_batch(keys, 64, (64,), (1,), 0.2),
        f"across_depth_batch 256x32 x{r}": lambda b: b.across_depth_batch(keys, 32, (256,), (1,), 0.3),
        f"tree_depth_batch K=40 x{r}": lambda b: b.tree_depth_batch(keys, 40, (1,), 0.2),
        "tree_splitting K=60 R=2000": lambda b: b.tree_splitting(derive_key(3, 1), 60, (1,), 0.2, 2000),
        "region_counts N=8192 j=3": lambda b: b.region_counts(pts[:, 0], pts[:, 1], 3, 13, 1),
        "longest_path_labels 64x64x33": lambda b: b.longest_path_labels(labels, 4),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    backs = kernels.backends()
    if "cython" not in backs:
        print("compiled backend unavailable; nothing to compare")
        return
    py, cy = backs["python"], backs["cython"]
    print(f"{'kernel':36s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, call in cases(args.quick).items():
        tp, op = best_of(lambda: call(py), args.repeat)
        tc, oc = best_of(lambda: call(cy), args.repeat)
        if not np.array_equal(np.asarray(op), np.asarray(oc)):
            raise SystemExit(f"backend outputs differ for {name}")
        print(f"{name:36s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
