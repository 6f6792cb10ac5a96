import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdcplan.kernels import _numba as nb
from fdcplan.kernels import _numpy as npk


def _csr(rng, n_skus, n_types, max_size=4):
    sizes = rng.integers(1, min(max_size, n_skus) + 1, n_types)
    indptr = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    rows = [np.sort(rng.choice(n_skus, s, replace=False)) for s in sizes]
    indices = np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, np.int64)
    return indptr, indices, rng.integers(0, 20, n_types).astype(np.int64)


@given(st.integers(0, 2**32 - 1))
def test_satisfied_orders_parity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 30))
    indptr, indices, _ = _csr(rng, n, int(rng.integers(0, 40)))
    sel = rng.random(n) < 0.6
    a = npk.satisfied_orders(indptr, indices, sel)
    b = nb.satisfied_orders(indptr, indices, sel)
    expect = np.array([sel[indices[indptr[o]:indptr[o + 1]]].all() for o in range(indptr.size - 1)], dtype=bool)
    assert np.array_equal(a, expect) and np.array_equal(b, expect)


@given(st.integers(0, 2**32 - 1))
def test_best_subset_parity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    indptr, indices, counts = _csr(rng, n, int(rng.integers(1, 15)))
    masks = np.array(
        [sum(1 << int(p) for p in indices[indptr[o]:indptr[o + 1]]) for o in range(counts.size)], dtype=np.int64
    )
    k = int(rng.integers(0, n + 1))
    assert npk.best_subset(masks, counts, n, k) == nb.best_subset(masks, counts, n, k)


@given(st.integers(0, 2**32 - 1))
def test_exclude_skus_parity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 25))
    indptr, indices, counts = _csr(rng, n, int(rng.integers(1, 40)))
    rows = np.repeat(np.arange(counts.size), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    sku_indptr = np.concatenate(([0], np.cumsum(np.bincount(indices, minlength=n)))).astype(np.int64)
    sku_orders = rows[order].astype(np.int64)
    infl = np.bincount(indices, weights=np.repeat(counts, np.diff(indptr)), minlength=n).astype(np.int64)
    removed = np.sort(rng.choice(n, int(rng.integers(1, n)), replace=False)).astype(np.int64)
    out = []
    for k in (npk, nb):
        alive = np.ones(counts.size, dtype=bool)
        inf = infl.copy()
        k.exclude_skus(removed, sku_indptr, sku_orders, indptr, indices, counts, alive, inf)
        out.append((alive, inf))
    assert np.array_equal(out[0][0], out[1][0])
    assert np.array_equal(out[0][1], out[1][1])
    # surviving influence equals a recount over live orders
    live = np.repeat(out[0][0], np.diff(indptr))
    recount = np.bincount(indices[live], weights=np.repeat(counts, np.diff(indptr))[live], minlength=n)
    keep = np.setdiff1d(np.arange(n), removed)
    assert np.array_equal(out[0][1][keep], recount[keep].astype(np.int64))


@given(st.integers(0, 2**32 - 1))
def test_ration_parity_and_properties(seed):
    rng = np.random.default_rng(seed)
    n, J = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    avail = rng.integers(0, 30, n).astype(np.int64)
    short = rng.integers(0, 15, (n, J)).astype(np.int64)
    a, b = npk.ration(avail, short), nb.ration(avail, short)
    assert np.array_equal(a, b)
    assert (a >= 0).all() and (a <= short).all()
    assert np.array_equal(a.sum(axis=1), np.minimum(avail, short.sum(axis=1)))


def test_ration_worked_example():
    # 5 units over shortfalls (4, 6): exact shares 2.0 and 3.0
    assert npk.ration(np.array([5]), np.array([[4, 6]])).tolist() == [[2, 3]]
    # remainder tie goes to the lower column
    assert nb.ration(np.array([1]), np.array([[1, 1]])).tolist() == [[1, 0]]


@given(st.integers(0, 2**32 - 1))
def test_hw_filter_parity(seed):
    rng = np.random.default_rng(seed)
    S, p = int(rng.integers(1, 5)), int(rng.integers(1, 8))
    y = rng.poisson(3.0, (S, 2 * p + int(rng.integers(0, 20)))).astype(float)
    lv, tr, se = rng.normal(3, 1, S), rng.normal(0, 0.1, S), rng.normal(0, 1, (S, p))
    a = npk.hw_filter(y, p, 0.2, 0.05, 0.1, lv, tr, se)
    b = nb.hw_filter(y, p, 0.2, 0.05, 0.1, lv, tr, se)
    for x, z in zip(a, b):
        np.testing.assert_allclose(x, z, rtol=1e-12, atol=1e-12)


def _run(env_value):
    env = dict(os.environ, FDCPLAN_BACKEND=env_value)
    code = "import fdcplan.kernels as k; print(k.BACKEND)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)


def test_backend_env_flag():
    assert _run("numpy").stdout.strip() == "numpy"
    assert _run("numba").stdout.strip() == "numba"
    bad = _run("fortran")
    assert bad.returncode != 0 and "FDCPLAN_BACKEND" in bad.stderr


def test_numpy_backend_end_to_end():
    code = (
        "from fdcplan.assortment import reverse_exclude, solve_exact\n"
        "from fdcplan.core import OrderBook\n"
        "b = OrderBook.from_orders({(1,): 5, (2,): 3, (1, 2): 2, (3,): 4})\n"
        "print(sorted(reverse_exclude(b, 2).selected), solve_exact(b, 2)[1])\n"
    )
    env = dict(os.environ, FDCPLAN_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "[1, 2] 10"
