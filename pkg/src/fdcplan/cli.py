"""Command-line entry point: ``fdcplan <subcommand> [--config F] [--seed N] [--out DIR]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import assortment as asm
from .bench import (
    build_network,
    build_scenario,
    run_assortment,
    run_benchmark,
    sweep_svg,
    write_assortment,
)
from .config import ConfigError, load_config
from .core import Assortment, InventoryState, NetworkConfig
from .datagen import (
    OrderLogError,
    gen_dated_orders,
    gen_demand_panel,
    ingest_order_log,
    merge_books,
    write_demand_panel,
    write_order_log,
    write_replenishment,
)
from .allocation import MyopicLPPolicy, ParamsPolicy
from .policy_search import (
    CompositeLossWeights,
    PolicyFactors,
    parameter_search,
    train_e2e_policy,
    write_table,
)
from .simulator import simulate

log = logging.getLogger("fdcplan")


def _out(args, cfg) -> Path:
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print(obj):
    print(json.dumps(obj, sort_keys=True, indent=2))


def cmd_gen_orders(args, cfg):
    out = _out(args, cfg)
    books = gen_dated_orders(cfg.orders)
    a = cfg.assortment
    write_order_log(merge_books(books[: a.train_periods]), out / "orders_train.csv")
    write_order_log(merge_books(books[a.train_periods:]), out / "orders_test.csv")
    _print({"periods": len(books), "orders": int(sum(b.total_orders for b in books))})


def cmd_gen_demand(args, cfg):
    out = _out(args, cfg)
    panel = gen_demand_panel(cfg.demand)
    write_demand_panel(panel, out / "demand.csv")
    write_replenishment(panel, out / "replenishment.csv")
    _print({"horizon": panel.horizon, "skus": int(panel.sku_ids.size), "units": int(panel.demand.sum())})


def _train_book(args, cfg):
    if args.orders:
        return ingest_order_log(args.orders)
    books = gen_dated_orders(cfg.orders)
    return merge_books(books[: cfg.assortment.train_periods])


def cmd_assort(args, cfg):
    out = _out(args, cfg)
    if args.k is not None and args.coverage is not None:
        raise ConfigError("give at most one of --k and --coverage")
    book = _train_book(args, cfg)
    if args.k is not None:
        k = args.k
    elif args.coverage is not None:
        k = asm.k_for_coverage(book, args.coverage)
    elif cfg.assortment.k is not None:
        k = cfg.assortment.k
    else:
        k = asm.k_for_coverage(book, cfg.assortment.coverage)
    m = args.method
    if m == "topk":
        S = asm.top_k_hist(book, k)
    elif m == "reverse":
        S = asm.reverse_exclude(book, k)
    elif m == "exact":
        S = asm.solve_exact(book, k)[0]
    else:
        if args.orders:
            raise ConfigError(f"--method {m} needs dated orders; run without --orders to use the generator")
        a = replace(cfg.assortment, k=k, coverage=None, methods=(m,))
        run = run_assortment(replace(cfg, assortment=a))
        S = run.selections[m]
    write_assortment(S, out / f"assortment_{m}.csv")
    count, rate = asm.eval_fulfillment(S, book)
    _print({"method": m, "k": k, "satisfied": count, "rate": rate})


def cmd_eval_assort(args, cfg):
    ids = [int(line) for line in Path(args.assortment).read_text(encoding="utf-8").split()[1:]]
    book = ingest_order_log(args.orders)
    count, rate = asm.eval_fulfillment(Assortment(frozenset(ids), len(ids)), book)
    _print({"k": len(ids), "satisfied": count, "total": book.total_orders, "rate": rate})


def _policy(name, cfg, network, args, tuning=None):
    p = cfg.policy
    if name == "myopic":
        return MyopicLPPolicy(network, p.myopic_safety_factor)
    L = 1 + network.n_fdcs
    if name == "params":
        f = PolicyFactors.uniform(args.z if args.z is not None else p.initial_z, args.d if args.d is not None else p.initial_d, L)
    else:
        w = cfg.weights
        res = train_e2e_policy(
            PolicyFactors.uniform(p.initial_z, p.initial_d, L), tuning, CompositeLossWeights(w.op, w.sales_pred, w.ss),
            budget=p.train_budget, review_period=p.review_period,
        )
        f = res.factors
    return ParamsPolicy(network, f.safety_factor, f.coverage_days, p.review_period)


def _tuning(cfg, network):
    return [build_scenario(cfg, cfg.demand.seed + 1000 + i, network) for i in range(cfg.policy.n_scenarios)]


def cmd_simulate(args, cfg):
    out = _out(args, cfg)
    network = build_network(cfg)
    sc = build_scenario(cfg, cfg.demand.seed, network)
    policy = _policy(args.policy, cfg, network, args, _tuning(cfg, network) if args.policy == "e2e" else None)
    traj, rep = simulate(network, sc.initial_state, sc.panel, policy, sc.forecaster())
    traj.write(out / f"trajectory_{args.policy}.ndjson")
    (out / f"report_{args.policy}.json").write_text(rep.to_json(), encoding="utf-8")
    print(rep.to_json(), end="")


def cmd_tune_ratio(args, cfg):
    out = _out(args, cfg)
    a = cfg.assortment
    methods = tuple(dict.fromkeys(a.methods + ("hybrid",)))
    run = run_assortment(replace(cfg, assortment=replace(a, methods=methods)))
    write_table(run.sweep, out / "ratio_sweep.csv")
    (out / "ratio_sweep.svg").write_text(sweep_svg(run.sweep), encoding="utf-8")
    _print({"k": run.k, "ratio": run.ratio})


def cmd_tune_params(args, cfg):
    out = _out(args, cfg)
    network = build_network(cfg)
    best, table = parameter_search(cfg.policy.grid_z, cfg.policy.grid_d, _tuning(cfg, network), cfg.policy.review_period)
    write_table(table, out / "param_search.csv")
    _print({"safety_factor": list(best.safety_factor), "coverage_days": list(best.coverage_days)})


def cmd_train_e2e(args, cfg):
    out = _out(args, cfg)
    network = build_network(cfg)
    p, w = cfg.policy, cfg.weights
    res = train_e2e_policy(
        PolicyFactors.uniform(p.initial_z, p.initial_d, 1 + network.n_fdcs),
        _tuning(cfg, network),
        CompositeLossWeights(w.op, w.sales_pred, w.ss),
        budget=p.train_budget,
        review_period=p.review_period,
    )
    write_table([{"step": i, "loss": v} for i, v in enumerate(res.trace)], out / "e2e_trace.csv")
    _print(
        {
            "safety_factor": list(res.factors.safety_factor),
            "coverage_days": list(res.factors.coverage_days),
            "loss": res.loss,
            "evaluations": res.evaluations,
            "exhausted": res.exhausted,
        }
    )


def cmd_bench(args, cfg):
    summary = run_benchmark(cfg, args.out or cfg.out_dir)
    _print(summary)


def cmd_dp_oracle(args, cfg):
    from .dp import evaluate_policy_exact, solve_tiny_dp
    from .forecast import PerfectForecaster

    fdc_demand = [int(x) for x in args.fdc_demand.split(",")]
    rdc_demand = [int(x) for x in args.rdc_demand.split(",")] if args.rdc_demand else [0] * len(fdc_demand)
    if len(rdc_demand) != len(fdc_demand):
        raise ConfigError("--rdc-demand and --fdc-demand need the same length")
    T = len(fdc_demand)
    n = cfg.network
    network = NetworkConfig((1,), args.lead_time, n.spillover_cost, n.lost_sale_cost, n.transfer_cost)
    state = InventoryState(
        np.array([0]), (1,), np.array([[args.rdc_stock, 0]]), np.zeros((args.lead_time, 1, 1), dtype=np.int64)
    )
    dist = [[(1.0, (a, b))] for a, b in zip(rdc_demand, fdc_demand)]
    repl = [0] * T
    caps = (args.rdc_stock, max(args.rdc_stock, 1))
    v, u = solve_tiny_dp(network, state, dist, repl, T, caps)
    z, d = (args.z if args.z is not None else 0.0), (args.d if args.d is not None else 1.0)
    policy_cost = evaluate_policy_exact(
        network, state, dist, repl, T, lambda: ParamsPolicy(network, z, d), PerfectForecaster
    )
    _print({"V1": v, "first_transfer": u.tolist(), "params_policy_cost": policy_cost, "z": z, "d": d})


COMMANDS = {
    "gen-orders": cmd_gen_orders,
    "gen-demand": cmd_gen_demand,
    "assort": cmd_assort,
    "eval-assort": cmd_eval_assort,
    "simulate": cmd_simulate,
    "tune-ratio": cmd_tune_ratio,
    "tune-params": cmd_tune_params,
    "train-e2e": cmd_train_e2e,
    "bench": cmd_bench,
    "dp-oracle": cmd_dp_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output directory (default: config out_dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="fdcplan", description=__doc__, parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-orders", parents=[common], help="write train/test order logs")
    sub.add_parser("gen-demand", parents=[common], help="write a demand panel and replenishment schedule")
    p = sub.add_parser("assort", parents=[common], help="build one FDC assortment")
    p.add_argument("--method", choices=["topk", "mltopk", "reverse", "hybrid", "exact"], default="reverse")
    p.add_argument("--k", type=int)
    p.add_argument("--coverage", type=float)
    p.add_argument("--orders", help="order log CSV (default: generated training split)")
    p = sub.add_parser("eval-assort", parents=[common], help="fulfillment rate of an assortment on an order log")
    p.add_argument("--assortment", required=True)
    p.add_argument("--orders", required=True)
    p = sub.add_parser("simulate", parents=[common], help="simulate one allocation policy")
    p.add_argument("--policy", choices=["params", "myopic", "e2e"], default="params")
    p.add_argument("--z", type=float, help="safety factor for --policy params")
    p.add_argument("--d", type=float, help="coverage days for --policy params")
    sub.add_parser("tune-ratio", parents=[common], help="sweep the hybrid ratio")
    sub.add_parser("tune-params", parents=[common], help="grid search over safety factor and coverage")
    sub.add_parser("train-e2e", parents=[common], help="coordinate-descent training on the composite loss")
    sub.add_parser("bench", parents=[common], help="full pipeline with tables, reports and plots")
    p = sub.add_parser("dp-oracle", parents=[common], help="exact DP on a one-sku, one-FDC instance")
    p.add_argument("--fdc-demand", default="2,3,1,2", help="comma-separated FDC demand per period")
    p.add_argument("--rdc-demand", help="comma-separated RDC demand per period (default zeros)")
    p.add_argument("--rdc-stock", type=int, default=20)
    p.add_argument("--lead-time", type=int, default=1, choices=[0, 1])
    p.add_argument("--z", type=float)
    p.add_argument("--d", type=float)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed)
        COMMANDS[args.command](args, cfg)
    except (ConfigError, OrderLogError, FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"fdcplan {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
