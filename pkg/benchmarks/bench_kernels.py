"""Time every kernel under the numba and numpy backends on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]

Results agree exactly between backends (asserted here as well as in tests);
the first numba call per kernel is excluded as compile/cache warmup.
"""
import argparse
import csv
import sys
import time

import numpy as np

from fdcplan.kernels import _numba as nb
from fdcplan.kernels import _numpy as npk


def _order_book(rng, n_skus, n_types, max_size=5):
    sizes = rng.integers(1, max_size + 1, n_types)
    indptr = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    indices = np.concatenate([np.sort(rng.choice(n_skus, s, replace=False)) for s in sizes]).astype(np.int64)
    counts = rng.integers(1, 20, n_types).astype(np.int64)
    return indptr, indices, counts


def _incidence(indptr, indices, n_skus):
    rows = np.repeat(np.arange(indptr.size - 1), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    sku_indptr = np.concatenate(([0], np.cumsum(np.bincount(indices, minlength=n_skus)))).astype(np.int64)
    return sku_indptr, rows[order].astype(np.int64)


def cases(seed=0):
    rng = np.random.default_rng(seed)
    n_skus, n_types = 20_000, 200_000
    indptr, indices, counts = _order_book(rng, n_skus, n_types)
    selected = rng.random(n_skus) < 0.5
    yield "satisfied_orders", lambda k: k.satisfied_orders(indptr, indices, selected)

    sku_indptr, sku_orders = _incidence(indptr, indices, n_skus)
    influence0 = np.bincount(indices, weights=np.repeat(counts, np.diff(indptr)), minlength=n_skus).astype(np.int64)
    removed = np.sort(rng.choice(n_skus, n_skus // 10, replace=False)).astype(np.int64)

    def excl(k):
        alive = np.ones(n_types, dtype=np.bool_)
        infl = influence0.copy()
        k.exclude_skus(removed, sku_indptr, sku_orders, indptr, indices, counts, alive, infl)
        return alive, infl

    yield "exclude_skus", excl

    n_small = 16
    ip, ix, cnt = _order_book(rng, n_small, 60, max_size=3)
    masks = np.array([np.bitwise_or.reduce(np.left_shift(np.int64(1), ix[ip[o]:ip[o + 1]])) for o in range(60)], dtype=np.int64)
    yield "best_subset", lambda k: k.best_subset(masks, cnt, n_small, 6)

    avail = rng.integers(0, 200, 5_000).astype(np.int64)
    short = rng.integers(0, 60, (5_000, 6)).astype(np.int64)
    yield "ration", lambda k: k.ration(avail, short)

    y = rng.poisson(3.0, (6_000, 120)).astype(float)
    lv, tr, se = y[:, :7].mean(axis=1), np.zeros(6_000), np.zeros((6_000, 7))
    yield "hw_filter", lambda k: k.hw_filter(y, 7, 0.2, 0.05, 0.1, lv, tr, se)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f":
        return np.allclose(a, b, rtol=1e-12, atol=1e-12)
    return np.array_equal(a, b)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)

    rows = []
    for name, call in cases():
        ref, out = call(npk), call(nb)  # numba warmup happens here
        if not _same(ref, out):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        t_np = _time(lambda: call(npk), args.repeat)
        t_nb = _time(lambda: call(nb), args.repeat)
        rows.append((name, t_np * 1e3, t_nb * 1e3, t_np / t_nb))

    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, a, b, s in rows:
        print(f"{name:<18}{a:>12.2f}{b:>12.2f}{s:>9.1f}x")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "numpy_ms", "numba_ms", "speedup"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
