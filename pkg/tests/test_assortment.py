import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _util import A, B, C, D, E, book, random_book
from fdcplan.assortment import (
    RankedList,
    alpha_of,
    eval_fulfillment,
    hybrid_selection,
    k_for_coverage,
    ml_top_k,
    reverse_exclude,
    reverse_exclude_with_trace,
    solve_exact,
    top_k_hist,
    tune_hybrid_ratio,
)
from fdcplan.core import Assortment, OrderBook

BOOK = {"A": 5, "B": 3, "AB": 2, "C": 4}


def freq_map(b):
    return dict(zip(b.sku_ids.tolist(), b.frequencies().astype(float).tolist()))


def brute_force(b, k):
    best = (-1, ())
    ids = b.sku_ids.tolist()
    for size in range(min(k, len(ids)) + 1):
        for combo in itertools.combinations(ids, size):
            v = eval_fulfillment(set(combo), b)[0]
            if v > best[0] or (v == best[0] and combo < best[1]):
                best = (v, combo)
    return best


def test_eval_examples():
    b = book(BOOK)
    assert eval_fulfillment(set(), b) == (0, 0.0)
    assert eval_fulfillment({A, B, C}, b) == (14, 1.0)
    assert eval_fulfillment({A, B}, b) == (10, 10 / 14)
    empty = OrderBook.from_orders({}, catalog=[1, 2])
    assert eval_fulfillment({1}, empty) == (0, 1.0)


def test_solve_exact_examples():
    b = book(BOOK)
    S, v = solve_exact(b, 2)
    assert S.selected == {A, B} and v == 10
    S, v = solve_exact(b, 3)
    assert S.selected == {A, B, C} and v == 14
    S, v = solve_exact(b, 0)
    assert S.selected == frozenset() and v == 0


def test_solve_exact_guard():
    b = OrderBook.from_orders({(i,): 1 for i in range(30)})
    with pytest.raises(ValueError, match="heuristic"):
        solve_exact(b, 3)


@given(st.integers(0, 2**32 - 1))
def test_solve_exact_matches_brute_force(seed):
    b = random_book(np.random.default_rng(seed), n_max=8, types_max=12)
    k = int(np.random.default_rng(seed + 1).integers(0, b.n_skus + 1))
    S, v = solve_exact(b, k)
    bv, bset = brute_force(b, k)
    assert v == bv == eval_fulfillment(S, b)[0]
    assert tuple(sorted(S.selected)) == bset


def test_top_k_hist_examples():
    b = book(BOOK)
    assert top_k_hist(b, 2).selected == {A, B}
    flat = OrderBook.from_orders({(7,): 2, (3,): 2, (5,): 2})
    assert top_k_hist(flat, 2).selected == {3, 5}
    assert top_k_hist(b, 10).selected == {A, B, C}


def test_ml_top_k_examples():
    b = book(BOOK)
    assert ml_top_k(freq_map(b), 2) == top_k_hist(b, 2)
    gap = book({"A": 10, "B": 9, "CD": 8, "CE": 8})
    S = ml_top_k(freq_map(gap), 2)
    assert S.selected == {C, A} and eval_fulfillment(S, gap)[0] == 10
    assert solve_exact(gap, 2) == (Assortment(frozenset({A, B}), 2), 19)
    singles = OrderBook.from_orders({(i,): c for i, c in enumerate([5, 1, 7, 3, 3])})
    assert eval_fulfillment(ml_top_k(freq_map(singles), 3), singles)[0] == solve_exact(singles, 3)[1]


def test_alpha_examples():
    assert alpha_of(OrderBook.from_orders({(1,): 3, (2,): 4}), 2) == 1.0
    assert alpha_of(book({"A": 10, "B": 9, "CD": 8, "CE": 8}), 2) == 0.0
    assert alpha_of(book({"A": 3, "AB": 4}), 1) == pytest.approx(3 / 7)


def test_reverse_exclude_examples():
    b = book(BOOK)
    S, trace = reverse_exclude_with_trace(b, 2, lambda n, k: 1)
    assert S.selected == {A, B} and trace.eliminated == ((C,),)
    assert eval_fulfillment(S, b)[0] == 10
    assert reverse_exclude(b, 3).selected == {A, B, C}
    singles = OrderBook.from_orders({(i,): c for i, c in enumerate([5, 1, 7, 3, 4, 9])})
    for k in range(7):
        assert reverse_exclude(singles, k) == top_k_hist(singles, k)


def test_reverse_exclude_tie_removes_lower_id():
    # the two rules break ties in opposite directions
    tied = OrderBook.from_orders({(3,): 3, (4,): 3})
    assert reverse_exclude(tied, 1).selected == {4}
    assert top_k_hist(tied, 1).selected == {3}


@given(st.integers(0, 2**32 - 1))
def test_reverse_exclude_soundness(seed):
    rng = np.random.default_rng(seed)
    b = random_book(rng, n_max=15, types_max=30)
    k = int(rng.integers(0, b.n_skus + 1))
    S, trace = reverse_exclude_with_trace(b, k)
    assert len(S) == k
    for o in np.flatnonzero(trace.alive):
        assert set(b.members(o)) <= S.selected


@given(st.integers(0, 2**32 - 1))
def test_heuristics_bounded_by_optimum(seed):
    rng = np.random.default_rng(seed)
    b = random_book(rng)
    k = int(rng.integers(0, b.n_skus + 1))
    opt = solve_exact(b, k)[1]
    for S in (top_k_hist(b, k), ml_top_k(freq_map(b), k), reverse_exclude(b, k)):
        assert len(S) <= k
        assert eval_fulfillment(S, b)[0] <= opt


@given(st.integers(0, 2**32 - 1))
def test_ml_top_k_alpha_guarantee(seed):
    rng = np.random.default_rng(seed)
    b = random_book(rng, n_max=10, types_max=25)
    k = int(rng.integers(0, min(5, b.n_skus) + 1))
    got = eval_fulfillment(ml_top_k(freq_map(b), k), b)[0]
    assert got >= alpha_of(b, k) * solve_exact(b, k)[1] - 1e-9


@given(st.integers(0, 2**32 - 1))
def test_eval_monotone(seed):
    rng = np.random.default_rng(seed)
    b = random_book(rng)
    S = set(rng.choice(b.sku_ids, int(rng.integers(0, b.n_skus + 1)), replace=False).tolist())
    extra = int(rng.choice(b.sku_ids))
    assert eval_fulfillment(S | {extra}, b)[0] >= eval_fulfillment(S, b)[0]


def _ranks(ids):
    return RankedList.from_scores({s: float(100 - s) for s in ids})


def test_hybrid_worked_example():
    M, R = Assortment(frozenset({A, B, C}), 3), Assortment(frozenset({A, D, E}), 3)
    rM = RankedList.from_scores({A: 9, B: 5, C: 7})
    rR = RankedList.from_scores({A: 9, D: 2, E: 4})
    assert hybrid_selection(M, R, rM, rR, 0.5, 3).selected == {A, C, E}
    assert hybrid_selection(M, R, rM, rR, 1.0, 3) == M
    assert hybrid_selection(M, R, rM, rR, 0.0, 3) == R


def test_hybrid_errors_and_big_intersection():
    M, R = Assortment(frozenset({A, B}), 2), Assortment(frozenset({A, C}), 2)
    with pytest.raises(ValueError):
        hybrid_selection(M, R, RankedList.from_scores({A: 1}), _ranks([A, C]), 0.5, 2)
    with pytest.raises(ValueError):
        hybrid_selection(M, R, _ranks([A, B]), _ranks([A, C]), 1.5, 2)
    big = Assortment(frozenset({A, B, C}), 3)
    out = hybrid_selection(big, big, RankedList.from_scores({A: 1, B: 3, C: 2}), _ranks([A, B, C]), 0.5, 2)
    assert out.selected == {B, C}


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_hybrid_size_and_endpoints(seed, r):
    rng = np.random.default_rng(seed)
    pool = list(range(30))
    k = int(rng.integers(1, 12))
    M = Assortment(frozenset(rng.choice(pool, k, replace=False).tolist()), k)
    R = Assortment(frozenset(rng.choice(pool, k, replace=False).tolist()), k)
    rM = RankedList.from_scores({s: float(rng.random()) for s in M.selected})
    rR = RankedList.from_scores({s: float(rng.random()) for s in R.selected})
    out = hybrid_selection(M, R, rM, rR, r, k)
    assert len(out) == k and out.selected <= (M.selected | R.selected)
    assert (M.selected & R.selected) <= out.selected
    assert hybrid_selection(M, R, rM, rR, 1.0, k) == M
    assert hybrid_selection(M, R, rM, rR, 0.0, k) == R


def test_tune_ratio_examples():
    b = book({"A": 10, "B": 9, "CD": 8, "CE": 8})
    M, R = Assortment(frozenset({C, A}), 2), Assortment(frozenset({A, B}), 2)
    rM, rR = RankedList.from_scores({C: 16, A: 10}), RankedList.from_scores({A: 10, B: 9})
    r, sweep = tune_hybrid_ratio(b, M, R, rM, rR, [0, 1], 2)
    assert r == 0.0 and [row["r"] for row in sweep] == [0.0, 1.0]
    r, sweep = tune_hybrid_ratio(b, M, M, rM, rM, [0, 0.5, 1], 2)
    assert r == 0.0 and len({row["train_rate"] for row in sweep}) == 1
    with pytest.raises(ValueError):
        tune_hybrid_ratio(b, M, R, rM, rR, [0.5], 2)


def test_k_for_coverage():
    b = book(BOOK)
    assert k_for_coverage(b, 0.5) == 2  # {A} alone covers 5 of 14
    assert eval_fulfillment(top_k_hist(b, k_for_coverage(b, 0.7)), b)[1] >= 0.7
    assert eval_fulfillment(top_k_hist(b, k_for_coverage(b, 0.7) - 1), b)[1] < 0.7
