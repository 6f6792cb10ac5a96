"""Exact dynamic programming on tiny single-sku networks.

Used as an oracle: backward recursion over the full discrete state
``(rdc, fdc on-hand, in-transit)`` with expectation over a finite demand
support per period and minimization over every feasible integer transfer.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .allocation import _fulfill
from .core import DemandPanel, InventoryState, NetworkConfig

DP_GUARD = 10**6


def _normalize_dist(demand_dist, T, n_loc):
    out = []
    for t in range(T):
        support = []
        for prob, d in demand_dist[t]:
            d = tuple(int(v) for v in np.asarray(d).reshape(-1))
            if len(d) != n_loc:
                raise ValueError(f"period {t}: demand vector must have {n_loc} entries")
            if min(d) < 0 or prob < 0:
                raise ValueError(f"period {t}: negative demand or probability")
            support.append((float(prob), d))
        if len(support) > 3:
            raise ValueError(f"period {t}: demand support has more than 3 points")
        if abs(sum(p for p, _ in support) - 1.0) > 1e-9:
            raise ValueError(f"period {t}: probabilities do not sum to 1")
        out.append(tuple(support))
    return out


def _check_tiny(network, state, T, caps, guard):
    if state.on_hand.shape[0] != 1:
        raise ValueError("the DP oracle handles exactly one sku")
    J = network.n_fdcs
    if J > 2 or network.lead_time > 1:
        raise ValueError("the DP oracle needs at most 2 FDCs and lead time at most 1")
    caps = np.broadcast_to(np.asarray(caps, dtype=np.int64), (1 + J,))
    size = int(caps[0] + 1) * int(np.prod((caps[1:] + 1) ** (1 + network.lead_time)))
    if size > guard:
        raise ValueError(f"state space of {size} exceeds the guard ({guard})")
    return caps


def solve_tiny_dp(
    network: NetworkConfig,
    initial_state: InventoryState,
    demand_dist,
    replenishment,
    T: int,
    caps,
    guard: int = DP_GUARD,
) -> tuple[float, np.ndarray]:
    """Optimal expected cost ``V_1`` and an optimal first transfer.

    ``demand_dist[t]`` lists ``(probability, demand over locations)`` pairs.
    ``caps`` bounds stock per location: FDC position after shipping may not
    exceed its cap, and RDC stock above its cap is an error. Ties among
    optimal transfers go to the smallest total, then the smallest tuple.
    """
    caps = _check_tiny(network, initial_state, T, caps, guard)
    J, l = network.n_fdcs, network.lead_time
    dist = _normalize_dist(demand_dist, T, 1 + J)
    repl = [int(v) for v in np.asarray(replenishment).reshape(-1)]
    if len(repl) < T:
        raise ValueError("replenishment schedule shorter than the horizon")
    c, s = network.spillover_cost, network.lost_sale_cost
    r = network.transfer_cost_matrix(initial_state.sku_ids)[0]
    cap_t = network.transfer_cap

    @lru_cache(maxsize=None)
    def value(t, rdc, fdc, pipe):
        if t == T:
            return 0.0, ()
        if rdc > caps[0]:
            raise ValueError(f"period {t}: RDC stock {rdc} exceeds its cap {caps[0]}")
        arriving = pipe if l else None
        pos = [fdc[j] + (pipe[j] if l else 0) for j in range(J)]
        ranges = [range(int(caps[1 + j]) - pos[j] + 1) if caps[1 + j] >= pos[j] else range(1) for j in range(J)]
        best = (np.inf, 0, ())
        for u in itertools.product(*ranges):
            tot = sum(u)
            if tot > rdc or (cap_t is not None and max(u, default=0) > cap_t):
                continue
            ua = np.array([u], dtype=np.int64)
            arr = np.array([arriving], dtype=np.int64) if l else ua
            on_hand = np.array([(rdc, *fdc)], dtype=np.int64)
            exp = float(np.dot(r, u))
            for prob, d in dist[t]:
                if prob == 0:
                    continue
                out = _fulfill(on_hand, arr, ua, np.array([d], dtype=np.int64), c, s)
                fdc_next = tuple(int(v) for v in (on_hand[0, 1:] + arr[0] - out.fdc_fulfilled[0]))
                rdc_next = int(rdc - tot - out.rdc_fulfilled[0] - out.spillover[0].sum() + repl[t])
                nxt = value(t + 1, rdc_next, fdc_next, tuple(u) if l else ())[0]
                exp += prob * (out.cost + nxt)
            key = (round(exp, 9), tot, u)
            if key < best:
                best = (exp, tot, u)
        return best[0], best[2]

    rdc0 = int(initial_state.on_hand[0, 0])
    fdc0 = tuple(int(v) for v in initial_state.on_hand[0, 1:])
    pipe0 = tuple(int(v) for v in initial_state.pipeline[0, 0]) if l else ()
    v, u = value(0, rdc0, fdc0, pipe0)
    return float(v), np.array([u], dtype=np.int64)


def demand_paths(demand_dist, T):
    """Every demand path with its probability, as ``(prob, (T, locations) array)``."""
    for combo in itertools.product(*(demand_dist[t] for t in range(T))):
        prob = float(np.prod([p for p, _ in combo]))
        if prob > 0:
            yield prob, np.array([np.asarray(d).reshape(-1) for _, d in combo], dtype=np.int64)


def evaluate_policy_exact(
    network: NetworkConfig,
    initial_state: InventoryState,
    demand_dist,
    replenishment,
    T: int,
    policy_factory,
    forecaster_factory=None,
) -> float:
    """Expected total cost of a policy, averaging the simulator over every demand path.

    ``policy_factory()`` builds a fresh policy per path; ``forecaster_factory(panel)``
    (optional) a fresh forecaster. Comparing against ``solve_tiny_dp`` on a
    stochastic instance is only meaningful for forecasters that do not read
    the realized path ahead of time.
    """
    from .simulator import simulate

    repl = np.asarray(replenishment, dtype=np.int64).reshape(-1)[:T]
    total = 0.0
    for prob, path in demand_paths(demand_dist, T):
        panel = DemandPanel(initial_state.sku_ids, network.locations, path[:, None, :], repl[:, None])
        fc = None if forecaster_factory is None else forecaster_factory(panel)
        _, report = simulate(network, initial_state, panel, policy_factory(), fc)
        total += prob * report.total_cost
    return total
