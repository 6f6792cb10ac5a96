"""Per-period fulfillment cost, safety-stock/target-inventory generation and
RDC-to-FDC transfer rules.

Array conventions: ``(n_skus, 1 + n_fdcs)`` for per-location quantities with
the RDC in column 0, ``(n_skus, n_fdcs)`` for transfers, and
``(n_skus, 1 + n_fdcs, horizon)`` for forecasts.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import InventoryState, NetworkConfig

ORACLE_GUARD = (3, 3, 12)  # skus, fdcs, largest quantity


@dataclass(frozen=True, eq=False)
class PeriodOutcome:
    fdc_fulfilled: np.ndarray  # x, (n, J)
    spillover: np.ndarray  # y, (n, J)
    rdc_fulfilled: np.ndarray  # y_0, (n,)
    lost: np.ndarray  # z, (n, 1 + J)
    cost: float


class InfeasibleTransfer(ValueError):
    pass


def _fulfill(on_hand, arriving, outgoing, demand, c, s) -> PeriodOutcome:
    """Greedy solution of the period LP on raw arrays.

    FDC stock serves local demand first. The RDC, after sending ``outgoing``,
    serves its own demand (saves ``s`` per unit) and then FDC spillover in
    ascending FDC order (saves ``s - c``), the latter only when ``c < s``.
    """
    avail_f = on_hand[:, 1:] + arriving
    x = np.minimum(avail_f, demand[:, 1:])
    rest = on_hand[:, 0] - outgoing.sum(axis=1)
    if (rest < 0).any():
        raise InfeasibleTransfer("transfers exceed RDC on-hand inventory")
    y0 = np.minimum(rest, demand[:, 0])
    rest = rest - y0
    need = demand[:, 1:] - x
    y = np.zeros_like(need)
    if c < s:
        for j in range(need.shape[1]):
            y[:, j] = np.minimum(rest, need[:, j])
            rest = rest - y[:, j]
    lost = np.empty_like(demand)
    lost[:, 0] = demand[:, 0] - y0
    lost[:, 1:] = need - y
    cost = float(c * y.sum() + s * lost.sum())
    return PeriodOutcome(x, y, y0, lost, cost)


def solve_period_fulfillment(state: InventoryState, arriving, outgoing, demand, network: NetworkConfig) -> PeriodOutcome:
    """Optimal fulfillment for one period given arrivals, outgoing transfers and demand."""
    arriving = np.asarray(arriving, dtype=np.int64)
    outgoing = np.asarray(outgoing, dtype=np.int64)
    demand = np.asarray(demand, dtype=np.int64)
    if (arriving < 0).any() or (outgoing < 0).any() or (demand < 0).any():
        raise ValueError("arrivals, transfers and demand must be non-negative")
    return _fulfill(state.on_hand, arriving, outgoing, demand, network.spillover_cost, network.lost_sale_cost)


def lp_period_oracle(state: InventoryState, arriving, outgoing, demand, network: NetworkConfig) -> float:
    """Minimum period cost by exhaustive search over integer (x, y, z).

    Skus are independent, so each sku's allocations are enumerated on their
    own: every feasible (x_j, y_j) pair per FDC, all FDC combinations, then
    every RDC self-service level. Small instances only.
    """
    arriving = np.asarray(arriving, dtype=np.int64)
    outgoing = np.asarray(outgoing, dtype=np.int64)
    demand = np.asarray(demand, dtype=np.int64)
    n, J = arriving.shape
    big = max(int(state.on_hand.max(initial=0)), int(demand.max(initial=0)), int(arriving.max(initial=0)))
    if n > ORACLE_GUARD[0] or J > ORACLE_GUARD[1] or big > ORACLE_GUARD[2]:
        raise ValueError(f"instance exceeds oracle guard {ORACLE_GUARD}")
    c, s = network.spillover_cost, network.lost_sale_cost
    total = 0.0
    for i in range(n):
        cap0 = int(state.on_hand[i, 0] - outgoing[i].sum())
        if cap0 < 0:
            raise InfeasibleTransfer("transfers exceed RDC on-hand inventory")
        cost = np.zeros(1)
        used = np.zeros(1, dtype=np.int64)
        for j in range(J):
            d = int(demand[i, 1 + j])
            avail = int(state.on_hand[i, 1 + j] + arriving[i, j])
            opts = [(xv, yv) for xv in range(min(avail, d) + 1) for yv in range(d - xv + 1)]
            xs = np.array([o[0] for o in opts])
            ys = np.array([o[1] for o in opts])
            opt_cost = c * ys + s * (d - xs - ys)
            cost = (cost[:, None] + opt_cost[None, :]).ravel()
            used = (used[:, None] + ys[None, :]).ravel()
        d0 = int(demand[i, 0])
        best = math.inf
        for y0 in range(d0 + 1):
            ok = used + y0 <= cap0
            if ok.any():
                best = min(best, float(cost[ok].min()) + s * (d0 - y0))
        total += best
    return total


# safety stock and target inventory ----------------------------------------------


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Safety stock and target inventory per (sku, location) plus the factors behind them."""

    ss: np.ndarray
    ti: np.ndarray
    safety_factor: np.ndarray
    coverage_days: np.ndarray
    review_period: int = 1

    def __post_init__(self):
        if (self.ss < 0).any() or (self.ti < self.ss).any():
            raise ValueError("need 0 <= ss <= ti everywhere")


def _per_location(v, L, name):
    v = np.broadcast_to(np.asarray(v, dtype=float), (L,)).copy()
    if (v < 0).any():
        raise ValueError(f"{name} must be non-negative")
    return v


def stack_forecasts(forecasts, sku_ids, locations):
    """Turn ``{(sku, location): ForecastResult}`` into ``(point, sd)`` arrays."""
    H = len(next(iter(forecasts.values())).point)
    point = np.zeros((len(sku_ids), len(locations), H))
    sd = np.zeros_like(point)
    for a, sku in enumerate(sku_ids):
        for b, loc in enumerate(locations):
            f = forecasts[(int(sku), int(loc))]
            point[a, b], sd[a, b] = f.point, f.sd
    return point, sd


def compute_ss_ti(point, sd, network: NetworkConfig, safety_factor, coverage_days, review_period: int = 1) -> PolicyParams:
    """Safety stock ``ceil(z * sigma)`` and target ``ceil((mu + z * sigma) * d / review)``.

    ``mu`` and ``sigma`` aggregate the forecast over the protection window of
    ``lead_time + review_period`` periods, with independent errors.
    """
    point = np.asarray(point, dtype=float)
    sd = np.asarray(sd, dtype=float)
    L = point.shape[1]
    z = _per_location(safety_factor, L, "safety factor")
    d = _per_location(coverage_days, L, "coverage days")
    if (d <= 0).any():
        raise ValueError("coverage days must be positive")
    if review_period < 1:
        raise ValueError("review period must be positive")
    w = network.lead_time + review_period
    if point.shape[2] < w:
        raise ValueError(f"forecast horizon {point.shape[2]} shorter than protection window {w}")
    mu = point[:, :, :w].sum(axis=2)
    sigma = np.sqrt((sd[:, :, :w] ** 2).sum(axis=2))
    buffer = z[None, :] * sigma
    ss = np.ceil(buffer - 1e-9).astype(np.int64)
    ti = np.ceil((mu + buffer) * (d / review_period)[None, :] - 1e-9).astype(np.int64)
    ss = np.maximum(ss, 0)
    return PolicyParams(ss, np.maximum(ti, ss), z, d, review_period)


def _cap_columns(u, caps):
    """Scale each FDC column down to ``caps[j]`` units by proportional rationing over skus."""
    if caps is None:
        return u
    caps = np.broadcast_to(np.asarray(caps, dtype=np.int64), (u.shape[1],))
    over = u.sum(axis=0) > caps
    if not over.any():
        return u
    out = u.copy()
    out[:, over] = kernels.ration(caps[over], u[:, over].T).T
    return out


def allocate_transfers(state: InventoryState, params: PolicyParams, network: NetworkConfig) -> np.ndarray:
    """Ship RDC stock toward FDC safety stock first, then toward target inventory.

    The RDC keeps its own safety stock. When stock is short, each phase is
    rationed in proportion to the FDC shortfalls. Per-FDC transfer caps apply
    to the total over skus.
    """
    A = state.on_hand[:, 0]
    avail = A - np.minimum(A, params.ss[:, 0])
    pos = state.positions()
    cap = network.transfer_cap
    short = np.maximum(0, params.ss[:, 1:] - pos)
    g_ss = _cap_columns(kernels.ration(avail, short), cap)
    avail = avail - g_ss.sum(axis=1)
    short = np.maximum(0, params.ti[:, 1:] - pos - g_ss)
    left = None if cap is None else cap - g_ss.sum(axis=0)
    g_ti = _cap_columns(kernels.ration(avail, short), left)
    return g_ss + g_ti


# myopic deterministic-equivalent allocation ----------------------------------------


def _window_inputs(state, point, network, rdc_safety_stock):
    W = network.lead_time + 1
    point = np.asarray(point, dtype=float)
    if point.shape[2] < W:
        raise ValueError(f"forecast horizon {point.shape[2]} shorter than window {W}")
    need0 = np.ceil(point[:, 0, :W].sum(axis=1) - 1e-9).astype(np.int64)
    need_f = np.ceil(point[:, 1:, :W].sum(axis=2) - 1e-9).astype(np.int64)
    ss0 = np.zeros(point.shape[0], dtype=np.int64) if rdc_safety_stock is None else np.asarray(rdc_safety_stock, dtype=np.int64)
    budget = np.maximum(0, state.on_hand[:, 0] - need0 - ss0)
    return need0, need_f, budget


def myopic_lp_policy(state: InventoryState, point, network: NetworkConfig, rdc_safety_stock=None) -> np.ndarray:
    """Transfers minimizing cost over the next ``lead_time + 1`` periods with forecasts taken as exact.

    The RDC retains its forecast need plus safety stock. A unit shipped to
    an FDC replaces a spillover (saving ``c``) or a lost sale (saving ``s``,
    when spillover is not worth serving), so FDCs with ``r < min(c, s)``
    receive their window shortfall, cheapest FDCs first and proportionally
    among equal costs.
    """
    need0, need_f, budget = _window_inputs(state, point, network, rdc_safety_stock)
    short = np.maximum(0, need_f - state.positions())
    r = network.transfer_cost_matrix(state.sku_ids)
    threshold = min(network.spillover_cost, network.lost_sale_cost)
    short = np.where(r < threshold, short, 0)
    u = np.zeros_like(short)
    left = budget.copy()
    for level in np.unique(r):
        group = (r == level) & (short > 0)
        if not group.any():
            continue
        g = kernels.ration(left, np.where(group, short, 0))
        u += g
        left = left - g.sum(axis=1)
    return _cap_columns(u, network.transfer_cap)


def window_cost(state, point, network, u, rdc_safety_stock=None) -> float:
    """Cost of transfers ``u`` in the pooled deterministic window model."""
    need0, need_f, _ = _window_inputs(state, point, network, rdc_safety_stock)
    pos = state.positions()
    on_hand = np.concatenate([state.on_hand[:, :1], pos], axis=1)
    demand = np.concatenate([need0[:, None], need_f], axis=1)
    u = np.asarray(u, dtype=np.int64)
    out = _fulfill(on_hand, u, u, demand, network.spillover_cost, network.lost_sale_cost)
    return out.cost + float((network.transfer_cost_matrix(state.sku_ids) * u).sum())


def myopic_window_oracle(state, point, network, rdc_safety_stock=None) -> tuple[float, np.ndarray]:
    """Brute-force the window model over every feasible integer transfer vector, per sku."""
    _, _, budget = _window_inputs(state, point, network, rdc_safety_stock)
    n, J = state.pipeline.shape[1], len(network.fdc_ids)
    best_u = np.zeros((n, J), dtype=np.int64)
    total = 0.0
    for i in range(n):
        sub = InventoryState(state.sku_ids[i:i + 1], state.fdc_ids, state.on_hand[i:i + 1], state.pipeline[:, i:i + 1])
        ss = None if rdc_safety_stock is None else np.asarray(rdc_safety_stock)[i:i + 1]
        best = (math.inf, 0, ())
        for combo in itertools.product(range(int(budget[i]) + 1), repeat=J):
            if sum(combo) > budget[i]:
                continue
            cost = window_cost(sub, point[i:i + 1], network, np.array([combo]), ss)
            key = (round(cost, 9), sum(combo), combo)
            if key < best:
                best = key
        total += best[0]
        best_u[i] = best[2]
    return total, best_u


# policies -------------------------------------------------------------------------


class ParamsPolicy:
    """Periodic-review policy: forecasts -> SS/TI via fixed factors -> rationed allocation."""

    def __init__(self, network: NetworkConfig, safety_factor, coverage_days, review_period: int = 1):
        self.network = network
        self.safety_factor = safety_factor
        self.coverage_days = coverage_days
        self.review_period = review_period
        self.horizon = network.lead_time + review_period
        self.last_params: PolicyParams | None = None

    def decide(self, t, state, point, sd):
        params = compute_ss_ti(point, sd, self.network, self.safety_factor, self.coverage_days, self.review_period)
        self.last_params = params
        if t % self.review_period:
            return np.zeros((state.on_hand.shape[0], self.network.n_fdcs), dtype=np.int64)
        return allocate_transfers(state, params, self.network)


class MyopicLPPolicy:
    """Re-solves the deterministic window model every period."""

    def __init__(self, network: NetworkConfig, safety_factor: float = 0.0):
        self.network = network
        self.safety_factor = safety_factor
        self.horizon = network.lead_time + 1
        self.last_params = None

    def decide(self, t, state, point, sd):
        sigma = np.sqrt((np.asarray(sd)[:, 0, : self.horizon] ** 2).sum(axis=1))
        ss0 = np.ceil(self.safety_factor * sigma - 1e-9).astype(np.int64)
        return myopic_lp_policy(state, point, self.network, ss0)


class ScheduledPolicy:
    """Replays a fixed transfer schedule ``(T, n, J)``; used for hand traces and tests."""

    horizon = 1
    last_params = None

    def __init__(self, schedule):
        self.schedule = np.asarray(schedule, dtype=np.int64)

    def decide(self, t, state, point, sd):
        return self.schedule[t]
