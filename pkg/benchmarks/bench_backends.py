#!/usr/bin/env python3
"""Benchmark the numba and numpy split-kernel backends against each other.

Times the raw kernel on synthetic matrices and a full forest fit on the
embedded dataset, then verifies both backends produced identical results.
Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from weldlab import kernels
from weldlab.dataset import builtin_aa6262
from weldlab.ensemble import fit_random_forest, predict_ensemble_many


def time_kernel(impl, X, y, feats, repeats):
    # warmup (JIT compile for the numba path)
    impl(X, y, feats, 1)
    start = time.perf_counter()
    for _ in range(repeats):
        impl(X, y, feats, 1)
    return (time.perf_counter() - start) / repeats


def bench_raw_kernel():
    print("== raw best-split kernel ==")
    print(f"{'n':>7} {'p':>3} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n, p, repeats in ((9, 3, 20000), (100, 3, 5000), (1000, 10, 200),
                          (20000, 10, 10)):
        X = np.ascontiguousarray(rng.uniform(-1, 1, (n, p)))
        y = rng.uniform(0, 10, n)
        feats = np.arange(p, dtype=np.int64)
        t_np = time_kernel(kernels.best_split_numpy, X, y, feats, repeats)
        if kernels.HAS_NUMBA:
            t_nb = time_kernel(kernels.best_split_numba, X, y, feats, repeats)
            assert kernels.best_split_numpy(X, y, feats, 1) == \
                kernels.best_split_numba(X, y, feats, 1), "backend mismatch"
            print(f"{n:>7} {p:>3} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us "
                  f"{t_np / t_nb:>7.1f}x")
        else:
            print(f"{n:>7} {p:>3} {t_np * 1e6:>10.1f}us {'-':>12} {'-':>8}")


def bench_forest_fit():
    print("\n== 200-tree forest fit on the embedded dataset ==")
    d = builtin_aa6262()
    results = {}
    timings = {}
    original = kernels.active_backend()
    try:
        for name in kernels.available_backends():
            kernels.set_backend(name)
            fit_random_forest(d, trees=10, m=3, seed=7)  # warmup
            start = time.perf_counter()
            model = fit_random_forest(d, trees=200, m=3, seed=7)
            timings[name] = time.perf_counter() - start
            results[name] = predict_ensemble_many(model, d.features())
    finally:
        kernels.set_backend(original)
    for name, t in sorted(timings.items()):
        print(f"{name:>6}: {t * 1e3:8.1f} ms")
    values = list(results.values())
    if len(values) == 2:
        identical = np.array_equal(values[0], values[1])
        print(f"predictions identical across backends: {identical}")
        assert identical, "backends disagree"


if __name__ == "__main__":
    print(f"available backends: {kernels.available_backends()}")
    print(f"active backend: {kernels.active_backend()}  "
          f"(set WELDLAB_NO_NUMBA=1 to force numpy)\n")
    bench_raw_kernel()
    bench_forest_fit()
