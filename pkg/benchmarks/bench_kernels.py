"""Time the numba and numpy kernel implementations side by side.

Usage: python3 benchmarks/bench_kernels.py [--rows 20000] [--repeat 5]

Each kernel is warmed up once (so numba compile time is excluded) and then
timed as the best of ``--repeat`` calls. The full-fit row swaps the GBDT
kernels the booster binds to and trains the same model under each backend.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from titleq import jaro
from titleq.gbdt import GbdtParams, _kernels, bin_features, booster, train


def best_time(fn, repeat: int) -> float:
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rows: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, 20))
    y = (X[:, 0] + X[:, 1] * X[:, 2] > 0).astype(float)
    data = bin_features(X, max_bin=255)
    grad = rng.normal(size=rows)
    hess = np.full(rows, 0.25)
    all_rows = np.arange(rows, dtype=np.int64)
    max_bins = int(data.n_bins.max())
    hist = _kernels.IMPLEMENTATIONS["numpy"]["build_histogram"](data.bins, all_rows, grad, hess, max_bins)
    mask = np.ones(X.shape[1], dtype=np.bool_)
    split_args = (hist, data.n_bins, data.is_categorical, mask, 10.0, float(grad.sum()), float(hess.sum()),
                  float(rows))
    model = train(X, y, GbdtParams(n_estimators=50, learning_rate=0.1))
    packed = booster._pack(model.trees)
    words = ["".join(rng.choice(list("abcdefghij"), size=int(rng.integers(3, 10)))) for _ in range(60)]
    codes, offsets = jaro.encode(words)
    return {
        "build_histogram": lambda impl: impl["build_histogram"](data.bins, all_rows, grad, hess, max_bins),
        "best_split": lambda impl: impl["best_split"](*split_args),
        "predict_trees (50 trees)": lambda impl: impl["predict_trees"](X, *packed),
        "pairwise_jaro_winkler (60 tokens)": lambda impl: impl["pairwise_jw"](codes, offsets),
    }, (X, y)


def full_fit(X, y, backend: str) -> float:
    impl = _kernels.IMPLEMENTATIONS[backend]
    saved = {name: getattr(_kernels, name) for name in impl}
    try:
        for name, fn in impl.items():
            setattr(_kernels, name, fn)
        params = GbdtParams(n_estimators=30, learning_rate=0.1, num_leaves=31)
        return best_time(lambda: train(X, y, params), 1)
    finally:
        for name, fn in saved.items():
            setattr(_kernels, name, fn)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = {
        "numba": {**_kernels.IMPLEMENTATIONS["numba"], "pairwise_jw": jaro._pairwise_numba},
        "numpy": {**_kernels.IMPLEMENTATIONS["numpy"], "pairwise_jw": jaro._pairwise_numpy},
    }
    cases, (X, y) = kernel_cases(args.rows)
    print(f"{'kernel':<36}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, call in cases.items():
        t_nb = best_time(lambda: call(impls["numba"]), args.repeat)
        t_np = best_time(lambda: call(impls["numpy"]), args.repeat)
        print(f"{name:<36}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")
    t_nb, t_np = full_fit(X, y, "numba"), full_fit(X, y, "numpy")
    print(f"{'gbdt fit (30 trees, 31 leaves)':<36}{t_nb * 1e3:>12.1f}{t_np * 1e3:>12.1f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
