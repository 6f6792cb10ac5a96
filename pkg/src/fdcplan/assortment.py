"""FDC assortment selection: exact enumeration, frequency heuristics,
reverse exclusion and the hybrid of the two.

All rankings break ties by ascending sku id.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Assortment, OrderBook

EXACT_GUARD = 22


@dataclass(frozen=True)
class RankedList:
    """``(sku_id, score)`` pairs sorted by decreasing score, then ascending id."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        ids = [e[0] for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("ranked list repeats a sku")
        keys = [(-s, i) for i, s in self.entries]
        if keys != sorted(keys):
            raise ValueError("ranked list is not sorted by (-score, id)")

    @classmethod
    def from_scores(cls, scores: Mapping[int, float]) -> RankedList:
        return cls(tuple(sorted(((int(i), float(s)) for i, s in scores.items()), key=lambda e: (-e[1], e[0]))))

    def score_map(self) -> dict[int, float]:
        return dict(self.entries)

    def ids(self) -> list[int]:
        return [i for i, _ in self.entries]


def _top_k(ids: np.ndarray, scores: np.ndarray, k: int) -> np.ndarray:
    order = np.lexsort((ids, -scores))
    return ids[order[:k]]


def eval_fulfillment(assortment: Assortment | set[int], book: OrderBook) -> tuple[int, float]:
    """Orders whose every sku is stocked, and that count as a share of all orders."""
    selected = assortment.selected if isinstance(assortment, Assortment) else assortment
    mask = np.isin(book.sku_ids, np.fromiter(selected, dtype=np.int64, count=len(selected)))
    ok = kernels.satisfied_orders(book.indptr, book.indices, mask)
    satisfied = int(book.counts[ok].sum())
    total = book.total_orders
    return satisfied, (satisfied / total if total else 1.0)


def solve_exact(book: OrderBook, k: int, guard: int = EXACT_GUARD) -> tuple[Assortment, int]:
    """Optimal assortment by enumerating every subset of at most ``k`` skus.

    Exists as a test oracle. Ties go to the lexicographically smallest set.
    """
    n = book.n_skus
    if n > guard:
        raise ValueError(f"catalog of {n} skus exceeds the enumeration guard ({guard}); use a heuristic")
    if n > 62:
        raise ValueError("bitmask enumeration supports at most 62 skus")
    k = max(0, min(int(k), n))
    order_masks = np.zeros(book.n_types, dtype=np.int64)
    for o in range(book.n_types):
        for p in book.indices[book.indptr[o]:book.indptr[o + 1]]:
            order_masks[o] |= np.int64(1) << np.int64(p)
    mask, value = kernels.best_subset(order_masks, book.counts.astype(np.int64), n, k)
    chosen = [int(book.sku_ids[p]) for p in range(n) if (int(mask) >> p) & 1]
    return Assortment(frozenset(chosen), k), int(value)


def top_k_hist(book: OrderBook, k: int) -> Assortment:
    """The ``k`` skus appearing in the most historical orders."""
    chosen = _top_k(book.sku_ids, book.frequencies().astype(float), k)
    return Assortment(frozenset(chosen.tolist()), k)


def ml_top_k(predicted_freq: Mapping[int, float], k: int) -> Assortment:
    """The ``k`` skus with the highest predicted order frequency."""
    ids = np.fromiter(predicted_freq.keys(), dtype=np.int64, count=len(predicted_freq))
    scores = np.fromiter(predicted_freq.values(), dtype=float, count=len(predicted_freq))
    return Assortment(frozenset(_top_k(ids, scores, k).tolist()), k)


def alpha_of(book: OrderBook, k: int) -> float:
    """Smallest singleton-order share among the top-``k`` skus by order frequency.

    A sku with no orders contributes ratio 1. With ``k == 0`` the minimum is
    over nothing and the result is 1.
    """
    f = book.frequencies()
    top = np.lexsort((book.sku_ids, -f))[:k]
    if top.size == 0:
        return 1.0
    single = book.singleton_counts()[top]
    ft = f[top]
    ratio = np.where(ft > 0, single / np.where(ft > 0, ft, 1), 1.0)
    return float(ratio.min())


def default_batch_schedule(survivors: int, k: int) -> int:
    return max(1, (survivors - k) // 10)


@dataclass(frozen=True)
class ReverseExcludeTrace:
    """Elimination record. ``alive[o]`` is False once order type ``o`` was zeroed."""

    eliminated: tuple[tuple[int, ...], ...]
    alive: np.ndarray
    influence: RankedList


def reverse_exclude_with_trace(
    book: OrderBook, k: int, batch_schedule: Callable[[int, int], int] | None = None
) -> tuple[Assortment, ReverseExcludeTrace]:
    """Drop the least-influential skus in batches, zeroing every order they touch.

    Influence is recomputed over surviving orders only. The schedule maps
    ``(survivors, k)`` to a batch size and is clipped to ``[1, survivors - k]``.
    """
    schedule = batch_schedule or default_batch_schedule
    n = book.n_skus
    k = max(0, int(k))
    alive = np.ones(book.n_types, dtype=np.bool_)
    influence = book.frequencies().astype(np.int64)
    surviving = np.ones(n, dtype=np.bool_)
    sku_indptr, sku_orders = book.sku_incidence
    indptr = book.indptr.astype(np.int64)
    indices = book.indices.astype(np.int64)
    counts = book.counts.astype(np.int64)
    eliminated = []
    n_left = n
    while n_left > k:
        batch = min(max(1, int(schedule(n_left, k))), n_left - k)
        cand = np.flatnonzero(surviving)
        if batch < cand.size:
            # partition on influence, then settle ties at the cut by id
            f = influence[cand]
            cut = np.partition(f, batch - 1)[batch - 1]
            below = cand[f < cut]
            at = cand[f == cut]
            removed = np.concatenate((below, at[: batch - below.size]))
        else:
            removed = cand
        removed = np.sort(removed)
        surviving[removed] = False
        kernels.exclude_skus(removed, sku_indptr, sku_orders, indptr, indices, counts, alive, influence)
        eliminated.append(tuple(book.sku_ids[removed].tolist()))
        n_left -= removed.size
    keep = np.flatnonzero(surviving)
    ranks = RankedList.from_scores(dict(zip(book.sku_ids[keep].tolist(), influence[keep].astype(float).tolist())))
    alive.setflags(write=False)
    trace = ReverseExcludeTrace(tuple(eliminated), alive, ranks)
    return Assortment(frozenset(book.sku_ids[keep].tolist()), max(k, keep.size)), trace


def reverse_exclude(book: OrderBook, k: int, batch_schedule=None) -> Assortment:
    return reverse_exclude_with_trace(book, k, batch_schedule)[0]


def hybrid_selection(
    M: Assortment,
    R: Assortment,
    ranks_M: RankedList,
    ranks_R: RankedList,
    r: float,
    k: int,
) -> Assortment:
    """Blend two assortments of size ``k``.

    The intersection is always kept. Of the remaining ``k - |I|`` slots,
    ``ceil((k - |I|) * r)`` go to the best of M's own skus by M's score and
    the rest to R's own skus by R's score, so the result has exactly ``k``
    skus. If the intersection alone exceeds ``k``, its top ``k`` by M's score
    are returned.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError("hybrid ratio must lie in [0, 1]")
    sM, sR = ranks_M.score_map(), ranks_R.score_map()
    inter = M.selected & R.selected
    dM, dR = M.selected - inter, R.selected - inter
    for name, distinct, scores in (("M", dM, sM), ("R", dR, sR)):
        missing = [s for s in distinct if s not in scores]
        if missing:
            raise ValueError(f"rank list for {name} is missing skus {sorted(missing)[:5]}")
    if len(inter) >= k:
        top = sorted(inter, key=lambda s: (-sM.get(s, -math.inf), s))[:k]
        return Assortment(frozenset(top), k)
    LM = sorted(dM, key=lambda s: (-sM[s], s))
    LR = sorted(dR, key=lambda s: (-sR[s], s))
    slots = k - len(inter)
    m = min(len(LM), math.ceil(slots * r - 1e-9))
    fill = LR[: slots - m]
    chosen = set(inter) | set(LM[:m]) | set(fill)
    if len(chosen) < k:
        chosen |= set(LM[m: m + k - len(chosen)])
    return Assortment(frozenset(chosen), k)


def tune_hybrid_ratio(
    train_book: OrderBook,
    M: Assortment,
    R: Assortment,
    ranks_M: RankedList,
    ranks_R: RankedList,
    grid,
    k: int,
    eval_book: OrderBook | None = None,
) -> tuple[float, list[dict[str, float]]]:
    """Pick the ratio with the best training fulfillment rate (ties: smallest r).

    The sweep has one row per grid value with ``r`` and ``train_rate`` (and
    ``test_rate`` when ``eval_book`` is given).
    """
    grid = sorted(float(r) for r in grid)
    if not grid or grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("ratio grid must be non-empty and include both 0 and 1")
    sweep = []
    best_r, best_rate = grid[0], -1.0
    for r in grid:
        S = hybrid_selection(M, R, ranks_M, ranks_R, r, k)
        rate = eval_fulfillment(S, train_book)[1]
        row = {"r": r, "train_rate": rate}
        if eval_book is not None:
            row["test_rate"] = eval_fulfillment(S, eval_book)[1]
        sweep.append(row)
        if rate > best_rate:
            best_r, best_rate = r, rate
    return best_r, sweep


def k_for_coverage(book: OrderBook, target: float) -> int:
    """Smallest K whose top-K-by-frequency assortment covers ``target`` of the book."""
    if not 0.0 < target <= 1.0:
        raise ValueError("target coverage must lie in (0, 1]")
    order = np.lexsort((book.sku_ids, -book.frequencies()))
    rank = np.empty(book.n_skus, dtype=np.int64)
    rank[order] = np.arange(book.n_skus)
    # an order type becomes satisfiable once its worst-ranked sku is included
    need = np.maximum.reduceat(rank[book.indices], book.indptr[:-1]) + 1
    covered = np.cumsum(np.bincount(need, weights=book.counts, minlength=book.n_skus + 1))
    hit = np.flatnonzero(covered >= target * book.total_orders - 1e-9)
    return int(hit[0])
