"""End-to-end benchmark: assortments on dated orders, then allocation policies in simulation.

Every artifact is a pure function of the ``RunConfig``; nothing depends on
the clock or the environment, so two runs with one seed produce identical
directories.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import assortment as asm
from .allocation import MyopicLPPolicy, ParamsPolicy
from .config import RunConfig, config_to_dict
from .core import RDC, Assortment, InventoryState, NetworkConfig
from .datagen import daily_sku_counts, gen_dated_orders, gen_demand_panel, merge_books, split_demand_into_orders
from .forecast import HoltWintersForecaster, forecast_order_frequency
from .policy_search import (
    CompositeLossWeights,
    PolicyFactors,
    Scenario,
    parameter_search,
    train_e2e_policy,
    write_table,
)
from .simulator import eval_order_level, simulate

log = logging.getLogger(__name__)

METHOD_LABELS = {
    "topk": "Top-K-hist",
    "mltopk": "ML-Top-K",
    "reverse": "Reverse-Exclude",
    "hybrid": "Hybrid",
    "exact": "Exact",
}


class StageError(RuntimeError):
    pass


def _stage(name):
    def wrap(fn):
        def inner(*a, **kw):
            try:
                return fn(*a, **kw)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(f"stage '{name}' failed: {exc}") from exc

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


# assortment stage -----------------------------------------------------------


@dataclass
class AssortmentRun:
    k: int
    rows: list[dict]
    selections: dict[str, Assortment]
    sweep: list[dict]
    ratio: float | None


@_stage("assortment")
def run_assortment(cfg: RunConfig) -> AssortmentRun:
    a = cfg.assortment
    books = gen_dated_orders(cfg.orders)
    train_books, test_books = books[: a.train_periods], books[a.train_periods:]
    train, test = merge_books(train_books), merge_books(test_books)
    k = a.k if a.k is not None else asm.k_for_coverage(train, a.coverage)
    log.info("assortment: K=%d over %d skus", k, train.n_skus)

    selections: dict[str, Assortment] = {}
    need_ml = {"mltopk", "hybrid"} & set(a.methods)
    need_rev = {"reverse", "hybrid"} & set(a.methods)
    pred = ranks_M = trace = None
    if need_ml:
        counts = daily_sku_counts(train_books, train.sku_ids)
        pred = forecast_order_frequency(counts, a.test_periods, train.sku_ids, a.season_period)
        ranks_M = asm.RankedList.from_scores(pred)
    if need_rev:
        rev, trace = asm.reverse_exclude_with_trace(train, k)
    sweep, ratio = [], None
    for m in a.methods:
        if m == "topk":
            selections[m] = asm.top_k_hist(train, k)
        elif m == "mltopk":
            selections[m] = asm.ml_top_k(pred, k)
        elif m == "reverse":
            selections[m] = rev
        elif m == "exact":
            selections[m] = asm.solve_exact(train, k)[0]
        elif m == "hybrid":
            M = asm.ml_top_k(pred, k)
            ratio, sweep = asm.tune_hybrid_ratio(train, M, rev, ranks_M, trace.influence, a.ratio_grid, k, eval_book=test)
            selections[m] = asm.hybrid_selection(M, rev, ranks_M, trace.influence, ratio, k)
    rows = []
    for m, S in selections.items():
        rows.append(
            {
                "method": METHOD_LABELS[m],
                "k": k,
                "train_rate": asm.eval_fulfillment(S, train)[1],
                "test_rate": asm.eval_fulfillment(S, test)[1],
            }
        )
    return AssortmentRun(k, rows, selections, sweep, ratio)


# allocation stage -----------------------------------------------------------


def build_network(cfg: RunConfig) -> NetworkConfig:
    n = cfg.network
    return NetworkConfig(
        fdc_ids=tuple(range(1, cfg.demand.n_fdcs + 1)),
        lead_time=n.lead_time,
        spillover_cost=n.spillover_cost,
        lost_sale_cost=n.lost_sale_cost,
        transfer_cost=n.transfer_cost,
        transfer_cap=n.transfer_cap,
    )


def build_scenario(cfg: RunConfig, seed: int, network: NetworkConfig) -> Scenario:
    """A simulation scenario: history feeds the forecaster, the rest is simulated."""
    full = gen_demand_panel(replace(cfg.demand, seed=seed))
    h = cfg.policy.history_periods
    history, panel = full.window(0, h), full.window(h, full.horizon)
    mean = cfg.demand.mean_demand()[h:] * (1.0 - cfg.demand.sparsity)
    rdc0 = np.ceil(mean[: max(1, int(cfg.policy.initial_rdc_days))].sum(axis=(0, 2))).astype(np.int64)
    n, J = panel.sku_ids.size, network.n_fdcs
    on_hand = np.zeros((n, 1 + J), dtype=np.int64)
    on_hand[:, RDC] = rdc0
    state = InventoryState(panel.sku_ids, network.fdc_ids, on_hand, np.zeros((network.lead_time, n, J), np.int64))
    hist = history.demand
    period = cfg.demand.season_period

    def factory(_panel, hist=hist, period=period):
        return HoltWintersForecaster(hist, period)

    return Scenario(network, state, panel, factory)


@dataclass
class AllocationRun:
    rows: list[dict]
    search_table: list[dict]
    train_trace: list[dict]
    trajectories: dict
    reports: dict
    factors: dict


@_stage("allocation")
def run_allocation(cfg: RunConfig) -> AllocationRun:
    p = cfg.policy
    network = build_network(cfg)
    L = 1 + network.n_fdcs
    main = build_scenario(cfg, cfg.demand.seed, network)
    tuning = [build_scenario(cfg, cfg.demand.seed + 1000 + i, network) for i in range(p.n_scenarios)]
    search_table, trace_rows, factors = [], [], {}
    policies = {}
    if "params" in p.policies:
        best, search_table = parameter_search(p.grid_z, p.grid_d, tuning, p.review_period)
        factors["params"] = best
        policies["params"] = lambda f=best: ParamsPolicy(network, f.safety_factor, f.coverage_days, p.review_period)
    if "myopic" in p.policies:
        policies["myopic"] = lambda: MyopicLPPolicy(network, p.myopic_safety_factor)
    if "e2e" in p.policies:
        w = cfg.weights
        res = train_e2e_policy(
            PolicyFactors.uniform(p.initial_z, p.initial_d, L),
            tuning,
            CompositeLossWeights(w.op, w.sales_pred, w.ss),
            budget=p.train_budget,
            review_period=p.review_period,
        )
        factors["e2e"] = res.factors
        trace_rows = [{"step": i, "loss": v} for i, v in enumerate(res.trace)]
        policies["e2e"] = lambda f=res.factors: ParamsPolicy(network, f.safety_factor, f.coverage_days, p.review_period)

    stream = split_demand_into_orders(main.panel, p.order_max_size, seed=cfg.seed)
    rows, trajs, reports = [], {}, {}
    for name, make in policies.items():
        traj, rep = simulate(network, main.initial_state, main.panel, make(), main.forecaster())
        local = eval_order_level(traj, stream)
        trajs[name], reports[name] = traj, rep
        rows.append(
            {
                "policy": name,
                "fdc_fulfillment_rate": rep.fdc_fulfillment_rate,
                "regional_loss": rep.regional_loss,
                "loss_ratio": float("nan") if rep.loss_ratio is None else rep.loss_ratio,
                "local_order_rate": local,
                "total_cost": rep.total_cost,
            }
        )
        reports[name] = replace(rep, local_order_rate=local)
    return AllocationRun(rows, search_table, trace_rows, trajs, reports, factors)


# outputs --------------------------------------------------------------------


def sweep_svg(sweep: list[dict], width: int = 480, height: int = 320) -> str:
    """Line plot of fulfillment rate against hybrid ratio, as standalone SVG text."""
    pad = 48
    rs = [row["r"] for row in sweep]
    series = [("train_rate", "#1f77b4")] + ([("test_rate", "#d62728")] if "test_rate" in sweep[0] else [])
    vals = [row[k] for row in sweep for k, _ in series]
    lo, hi = min(vals), max(vals)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.01, hi + 0.01

    def sx(r):
        return pad + (r - rs[0]) / max(rs[-1] - rs[0], 1e-12) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">hybrid ratio r</text>',
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {height / 2:.1f})">fulfillment rate</text>',
        f'<text x="{pad - 4}" y="{sy(hi) + 4:.1f}" text-anchor="end" font-size="10">{hi:.3f}</text>',
        f'<text x="{pad - 4}" y="{sy(lo) + 4:.1f}" text-anchor="end" font-size="10">{lo:.3f}</text>',
    ]
    for i, (key, color) in enumerate(series):
        pts = " ".join(f"{sx(row['r']):.2f},{sy(row[key]):.2f}" for row in sweep)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 14 * i}" text-anchor="end" font-size="11" fill="{color}">{key}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _factors_dict(f: PolicyFactors):
    return {"safety_factor": list(f.safety_factor), "coverage_days": list(f.coverage_days)}


def write_assortment(S: Assortment, path) -> None:
    Path(path).write_text("sku_id\n" + "".join(f"{s}\n" for s in S.ids()), encoding="utf-8")


def run_benchmark(cfg: RunConfig, out_dir=None) -> dict:
    """Run every configured stage and write tables, reports and plots under ``out_dir``."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=True), encoding="utf-8")

    ar = run_assortment(cfg)
    write_table(ar.rows, out / "assortment_table.csv")
    for m, S in ar.selections.items():
        write_assortment(S, out / f"assortment_{m}.csv")
    if ar.sweep:
        write_table(ar.sweep, out / "ratio_sweep.csv")
        (out / "ratio_sweep.svg").write_text(sweep_svg(ar.sweep), encoding="utf-8")

    summary = {"experiment": cfg.experiment, "seed": cfg.seed, "k": ar.k, "hybrid_ratio": ar.ratio}
    if cfg.policy.policies:
        al = run_allocation(cfg)
        write_table(al.rows, out / "policy_table.csv")
        if al.search_table:
            write_table(al.search_table, out / "param_search.csv")
        if al.train_trace:
            write_table(al.train_trace, out / "e2e_trace.csv")
        for name, traj in al.trajectories.items():
            traj.write(out / f"trajectory_{name}.ndjson")
            (out / f"report_{name}.json").write_text(al.reports[name].to_json(), encoding="utf-8")
        summary["factors"] = {k: _factors_dict(v) for k, v in al.factors.items()}
        summary["policies"] = {r["policy"]: {k: v for k, v in r.items() if k != "policy"} for r in al.rows}
    summary["assortment"] = {r["method"]: {"train_rate": r["train_rate"], "test_rate": r["test_rate"]} for r in ar.rows}
    _write_json(_jsonable(summary), out / "summary.json")
    return summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float):
        return None if obj != obj else round(obj, 10)
    return obj
