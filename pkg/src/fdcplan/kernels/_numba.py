"""numba kernels. Same contracts as ``_numpy``; loops written out explicitly."""
import numpy as np
from numba import njit


@njit(cache=True)
def satisfied_orders(indptr, indices, selected):
    n_orders = indptr.shape[0] - 1
    out = np.ones(n_orders, dtype=np.bool_)
    for o in range(n_orders):
        for p in range(indptr[o], indptr[o + 1]):
            if not selected[indices[p]]:
                out[o] = False
                break
    return out


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _lex_less(a, b):
    while True:
        if a == b:
            return False
        if a == 0:
            return True
        if b == 0:
            return False
        la = a & -a
        lb = b & -b
        if la != lb:
            return la < lb
        a ^= la
        b ^= lb


@njit(cache=True)
def best_subset(order_masks, counts, n, k):
    best_mask = np.int64(0)
    best_value = np.int64(-1)
    m = len(order_masks)
    for mask in range(np.int64(1) << n):
        if _popcount(mask) > k:
            continue
        value = np.int64(0)
        for o in range(m):
            om = order_masks[o]
            if (mask & om) == om:
                value += counts[o]
        if value > best_value or (value == best_value and _lex_less(mask, best_mask)):
            best_value = value
            best_mask = mask
    return best_mask, best_value


@njit(cache=True)
def exclude_skus(removed, sku_indptr, sku_orders, indptr, indices, counts, alive, influence):
    for r in removed:
        for p in range(sku_indptr[r], sku_indptr[r + 1]):
            o = sku_orders[p]
            if not alive[o]:
                continue
            alive[o] = False
            d = counts[o]
            for q in range(indptr[o], indptr[o + 1]):
                influence[indices[q]] -= d


@njit(cache=True)
def _ration_jit(avail, short):
    n, J = short.shape
    grant = short.copy()
    rem = np.empty(J, dtype=np.int64)
    for i in range(n):
        total = np.int64(0)
        for j in range(J):
            total += short[i, j]
        if total <= avail[i] or total == 0:
            continue
        left = avail[i]
        for j in range(J):
            num = avail[i] * short[i, j]
            grant[i, j] = num // total
            rem[j] = num % total
            left -= grant[i, j]
        while left > 0:
            pick = -1
            for j in range(J):
                if rem[j] > 0 and (pick < 0 or rem[j] > rem[pick]):
                    pick = j
            grant[i, pick] += 1
            rem[pick] = -1
            left -= 1
    return grant


def ration(avail, short):
    return _ration_jit(
        np.ascontiguousarray(avail, dtype=np.int64),
        np.ascontiguousarray(short, dtype=np.int64),
    )


@njit(cache=True)
def _hw_jit(y, period, alpha, beta, gamma, level0, trend0, season0):
    S, n = y.shape
    level = level0.copy()
    trend = trend0.copy()
    season = season0.copy()
    errors = np.empty((S, n))
    for i in range(S):
        lv = level[i]
        tr = trend[i]
        for t in range(n):
            slot = t % period
            s = season[i, slot]
            obs = y[i, t]
            errors[i, t] = obs - (lv + tr + s)
            new_lv = alpha * (obs - s) + (1.0 - alpha) * (lv + tr)
            tr = beta * (new_lv - lv) + (1.0 - beta) * tr
            season[i, slot] = gamma * (obs - new_lv) + (1.0 - gamma) * s
            lv = new_lv
        level[i] = lv
        trend[i] = tr
    return level, trend, season, errors


def hw_filter(y, period, alpha, beta, gamma, level0, trend0, season0):
    return _hw_jit(
        np.ascontiguousarray(y, dtype=np.float64),
        int(period),
        float(alpha),
        float(beta),
        float(gamma),
        np.ascontiguousarray(level0, dtype=np.float64),
        np.ascontiguousarray(trend0, dtype=np.float64),
        np.ascontiguousarray(season0, dtype=np.float64),
    )
