#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallbacks.

The numba path is selected by default; run with SLICEGCN_NUMBA=0 to force
the fallback at import time. This script instead calls both implementations
directly so one run prints the comparison.

Usage: python3 benchmarks/bench_accel.py [--nodes 2000] [--nnz 40000]
       [--dim 200] [--repeats 5]
"""

import argparse
import time

import numpy as np

from slicegcn import _accel


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_matmul(nodes, nnz, dim, repeats):
    rng = np.random.default_rng(0)
    rows = rng.integers(0, nodes, size=nnz).astype(np.int64)
    cols = rng.integers(0, nodes, size=nnz).astype(np.int64)
    vals = rng.standard_normal(nnz)
    dense = rng.standard_normal((nodes, dim))

    t_py = time_fn(lambda: _accel._coo_matmul_py(rows, cols, vals, dense), repeats)
    if _accel.using_numba:
        _accel._coo_matmul_nb(rows, cols, vals, dense)  # compile
        t_nb = time_fn(lambda: _accel._coo_matmul_nb(rows, cols, vals, dense), repeats)
        same = np.array_equal(
            _accel._coo_matmul_nb(rows, cols, vals, dense),
            _accel._coo_matmul_py(rows, cols, vals, dense),
        )
    else:
        t_nb, same = None, True
    return t_py, t_nb, same


def bench_pairs(n_slices, words_per_slice, vocab, repeats):
    rng = np.random.default_rng(1)
    units = [
        np.unique(rng.integers(0, vocab, size=words_per_slice)).astype(np.int64)
        for _ in range(n_slices)
    ]
    starts = np.zeros(n_slices + 1, dtype=np.int64)
    for i, u in enumerate(units):
        starts[i + 1] = starts[i] + len(u)
    flat = np.concatenate(units)

    t_py = time_fn(lambda: _accel._pair_keys_py(starts, flat), repeats)
    if _accel.using_numba:
        _accel._pair_keys_nb(starts, flat)  # compile
        t_nb = time_fn(lambda: _accel._pair_keys_nb(starts, flat), repeats)
        same = np.array_equal(
            np.sort(_accel._pair_keys_nb(starts, flat)),
            np.sort(_accel._pair_keys_py(starts, flat)),
        )
    else:
        t_nb, same = None, True
    return t_py, t_nb, same


def row(name, t_py, t_nb, same):
    if t_nb is None:
        print(f"{name:<28}{t_py * 1e3:>12.2f} ms {'(numba unavailable)':>24}")
    else:
        speedup = t_py / t_nb
        tag = "bitwise-equal" if same else "MISMATCH"
        print(
            f"{name:<28}{t_py * 1e3:>12.2f} ms {t_nb * 1e3:>12.2f} ms "
            f"{speedup:>8.1f}x  {tag}"
        )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--nnz", type=int, default=40000)
    ap.add_argument("--dim", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"numba available: {_accel.using_numba}")
    print(f"{'kernel':<28}{'numpy':>15} {'numba':>15} {'speedup':>9}")
    row("coo_matmul", *bench_matmul(args.nodes, args.nnz, args.dim, args.repeats))
    row("pair_keys", *bench_pairs(args.nodes, 30, 5000, args.repeats))


if __name__ == "__main__":
    main()
