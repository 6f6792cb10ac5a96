"""Pure-numpy kernels. Vectorized where the loop structure allows it."""
import numpy as np


def _gather_ranges(starts, ends):
    """Concatenate ``arange(s, e)`` for every (s, e) pair without a Python loop."""
    lengths = ends - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    return np.arange(total, dtype=np.int64) + offsets


def satisfied_orders(indptr, indices, selected):
    """Boolean per order type: every member sku is selected.

    Rows must be non-empty (an ``OrderBook`` invariant).
    """
    n_orders = indptr.shape[0] - 1
    if n_orders == 0:
        return np.zeros(0, dtype=np.bool_)
    hit = selected[indices]
    return np.logical_and.reduceat(hit, indptr[:-1])


def _lex_min(masks):
    # Lexicographic order on the sorted member tuples: strip lowest set bits in
    # lockstep; a candidate that runs out first is a prefix and therefore smaller.
    idx = np.arange(masks.shape[0])
    rest = masks.copy()
    while idx.shape[0] > 1:
        empty = rest == 0
        if empty.any():
            return masks[idx[np.argmax(empty)]]
        low = rest & -rest
        keep = low == low.min()
        idx, rest = idx[keep], rest[keep] ^ low[keep]
    return masks[idx[0]]


def best_subset(order_masks, counts, n, k):
    """Maximize satisfied demand over all subsets of ``n`` items with at most ``k`` members.

    Returns ``(mask, value)``; ties go to the lexicographically smallest set.
    """
    masks = np.arange(1 << n, dtype=np.int64)
    if k < n:
        masks = masks[np.bitwise_count(masks) <= k]
    values = np.zeros(masks.shape[0], dtype=np.int64)
    for om, d in zip(order_masks.tolist(), counts.tolist()):
        if d:
            values += d * ((masks & om) == om)
    best = values.max()
    return int(_lex_min(masks[values == best])), int(best)


def exclude_skus(removed, sku_indptr, sku_orders, indptr, indices, counts, alive, influence):
    """Zero every live order containing a removed sku and debit member influence.

    Mutates ``alive`` and ``influence`` in place.
    """
    hits = sku_orders[_gather_ranges(sku_indptr[removed], sku_indptr[removed + 1])]
    hits = np.unique(hits[alive[hits]])
    if hits.shape[0] == 0:
        return
    alive[hits] = False
    starts, ends = indptr[hits], indptr[hits + 1]
    members = indices[_gather_ranges(starts, ends)]
    weights = np.repeat(counts[hits], ends - starts)
    debit = np.bincount(members, weights=weights, minlength=influence.shape[0])
    influence -= np.rint(debit).astype(np.int64)


def ration(avail, short):
    """Split ``avail[i]`` units over the row ``short[i, :]`` proportionally.

    Rows that can be met in full get exactly their shortfall. Otherwise each
    column gets the floor of its quota, and leftover units go to the largest
    remainders, ties to the lower column index.
    """
    avail = np.asarray(avail, dtype=np.int64)
    short = np.asarray(short, dtype=np.int64)
    total = short.sum(axis=1)
    scarce = (total > avail) & (total > 0)
    grant = short.copy()
    if not scarce.any():
        return grant
    a = avail[scarce][:, None]
    s = short[scarce]
    t = total[scarce][:, None]
    num = a * s
    floor, rem = num // t, num % t
    left = a[:, 0] - floor.sum(axis=1)
    order = np.argsort(-rem, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(s.shape[1])[None, :].repeat(s.shape[0], 0), axis=1)
    grant[scarce] = floor + (ranks < left[:, None])
    return grant


def hw_filter(y, period, alpha, beta, gamma, level0, trend0, season0):
    """Additive Holt-Winters recursion over many series at once.

    ``y`` is (series, time); ``season0`` is (series, period) indexed by
    ``time % period``. Returns final level, trend, season and the one-step
    errors.
    """
    n = y.shape[1]
    level = level0.astype(np.float64).copy()
    trend = trend0.astype(np.float64).copy()
    season = season0.astype(np.float64).copy()
    errors = np.empty_like(y, dtype=np.float64)
    for t in range(n):
        slot = t % period
        obs = y[:, t]
        s = season[:, slot]
        errors[:, t] = obs - (level + trend + s)
        new_level = alpha * (obs - s) + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        season[:, slot] = gamma * (obs - new_level) + (1.0 - gamma) * s
        level = new_level
    return level, trend, season, errors
