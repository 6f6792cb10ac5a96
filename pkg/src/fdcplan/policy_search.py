"""Tuning the safety-factor / coverage-days policy by simulation.

Both searches evaluate every candidate on the same list of scenarios
(common random numbers), so differences between candidates come from the
factors alone.
"""
from __future__ import annotations

import csv
import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .allocation import ParamsPolicy
from .core import DemandPanel, InventoryState, NetworkConfig
from .simulator import SimulationReport, simulate


@dataclass(frozen=True)
class Scenario:
    network: NetworkConfig
    initial_state: InventoryState
    panel: DemandPanel
    forecaster_factory: Callable | None = None

    def forecaster(self):
        return None if self.forecaster_factory is None else self.forecaster_factory(self.panel)


@dataclass(frozen=True)
class PolicyFactors:
    """Safety factor and coverage days per location (RDC first)."""

    safety_factor: tuple[float, ...]
    coverage_days: tuple[float, ...]

    def __post_init__(self):
        z = tuple(float(v) for v in self.safety_factor)
        d = tuple(float(v) for v in self.coverage_days)
        if len(z) != len(d):
            raise ValueError("safety_factor and coverage_days need one value per location")
        if min(z) < 0 or min(d) <= 0:
            raise ValueError("safety factors must be >= 0 and coverage days > 0")
        object.__setattr__(self, "safety_factor", z)
        object.__setattr__(self, "coverage_days", d)

    @classmethod
    def uniform(cls, z: float, d: float, n_locations: int) -> PolicyFactors:
        return cls((z,) * n_locations, (d,) * n_locations)

    def key(self):
        return tuple(round(v, 9) for v in self.safety_factor + self.coverage_days)


@dataclass(frozen=True)
class CompositeLossWeights:
    op: float = 1.0
    sales_pred: float = 0.0
    ss: float = 0.1

    def __post_init__(self):
        w = (self.op, self.sales_pred, self.ss)
        if min(w) < 0 or max(w) == 0:
            raise ValueError("loss weights must be non-negative and not all zero")


def evaluate_factors(factors: PolicyFactors, scenarios: Sequence[Scenario], review_period=1, simulator=simulate):
    reports = []
    for sc in scenarios:
        policy = ParamsPolicy(sc.network, factors.safety_factor, factors.coverage_days, review_period)
        reports.append(simulator(sc.network, sc.initial_state, sc.panel, policy, sc.forecaster())[1])
    return reports


def composite_loss(reports: Sequence[SimulationReport], weights: CompositeLossWeights) -> dict[str, float]:
    op = float(np.mean([r.total_cost for r in reports]))
    pred = float(np.mean([r.forecast_mae or 0.0 for r in reports]))
    ss = float(np.mean([r.safety_stock_violation or 0.0 for r in reports]))
    return {
        "loss": weights.op * op + weights.sales_pred * pred + weights.ss * ss,
        "op": op,
        "sales_pred": pred,
        "ss": ss,
    }


def parameter_search(grid_z, grid_d, scenarios: Sequence[Scenario], review_period: int = 1, simulator=simulate):
    """Grid search over one ``(z, d)`` pair shared by all locations.

    Returns the factors with the lowest mean total cost (ties: smallest z,
    then smallest d) and one table row per grid point.
    """
    grid_z, grid_d = sorted(float(z) for z in grid_z), sorted(float(d) for d in grid_d)
    if not grid_z or not grid_d or not scenarios:
        raise ValueError("grids and scenario list must be non-empty")
    L = 1 + scenarios[0].network.n_fdcs
    table = []
    best = None
    for z, d in itertools.product(grid_z, grid_d):
        f = PolicyFactors.uniform(z, d, L)
        reports = evaluate_factors(f, scenarios, review_period, simulator)
        row = {
            "z": z,
            "d": d,
            "mean_cost": float(np.mean([r.total_cost for r in reports])),
            "fdc_fulfillment_rate": float(np.mean([r.fdc_fulfillment_rate for r in reports])),
            "regional_loss": float(np.mean([r.regional_loss for r in reports])),
        }
        table.append(row)
        if best is None or row["mean_cost"] < best[0] - 1e-9:
            best = (row["mean_cost"], f)
    return best[1], table


@dataclass
class TrainResult:
    factors: PolicyFactors
    loss: float
    trace: list[float] = field(default_factory=list)
    evaluations: int = 0
    exhausted: bool = False


def train_e2e_policy(
    initial: PolicyFactors,
    scenarios: Sequence[Scenario],
    weights: CompositeLossWeights = CompositeLossWeights(),
    budget: int = 200,
    review_period: int = 1,
    step: float = 0.5,
    min_step: float = 1 / 16,
    simulator=simulate,
) -> TrainResult:
    """Coordinate descent on the composite loss.

    Coordinates are every location's safety factor and every FDC's coverage
    days (the RDC's target level never drives a transfer). Each sweep tries
    ``+step`` and ``-step`` per coordinate and keeps a move only if it lowers
    the loss; a sweep without improvement halves the step. ``trace`` holds the
    loss after each accepted move, starting with the initial loss.
    ``budget`` counts distinct factor settings simulated.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not scenarios:
        raise ValueError("need at least one scenario")
    cache: dict = {}
    evals = 0

    def loss(f):
        nonlocal evals
        k = f.key()
        if k not in cache:
            evals += 1
            cache[k] = composite_loss(evaluate_factors(f, scenarios, review_period, simulator), weights)["loss"]
        return cache[k]

    cur, cur_loss = initial, loss(initial)
    trace = [cur_loss]
    L = len(initial.safety_factor)
    coords = [("z", j) for j in range(L)] + [("d", j) for j in range(1, L)]
    exhausted = False
    while step >= min_step and not exhausted:
        improved = False
        for kind, j in coords:
            for sign in (1.0, -1.0):
                z, d = list(cur.safety_factor), list(cur.coverage_days)
                if kind == "z":
                    z[j] = round(z[j] + sign * step, 9)
                    if z[j] < 0:
                        continue
                else:
                    d[j] = round(d[j] + sign * step, 9)
                    if d[j] <= 0:
                        continue
                cand = PolicyFactors(tuple(z), tuple(d))
                if cand.key() not in cache and evals >= budget:
                    exhausted = True
                    break
                val = loss(cand)
                if val < cur_loss - 1e-12:
                    cur, cur_loss = cand, val
                    trace.append(val)
                    improved = True
                    break
            if exhausted:
                break
        if not improved and not exhausted:
            step /= 2
    return TrainResult(cur, cur_loss, trace, evals, exhausted)


def write_table(rows: Sequence[dict], path) -> None:
    if not rows:
        raise ValueError("empty table")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in row.items()})


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return f"{v:.6f}"


def write_policy_params(params, sku_ids, locations, path) -> None:
    """CSV ``sku_id,location,ss,ti``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sku_id", "location", "ss", "ti"])
        for a, sku in enumerate(sku_ids):
            for b, loc in enumerate(locations):
                w.writerow([int(sku), int(loc), int(params.ss[a, b]), int(params.ti[a, b])])
