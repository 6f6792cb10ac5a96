import filecmp
import json
from pathlib import Path

import pytest
import yaml

from fdcplan.bench import run_assortment, run_benchmark
from fdcplan.cli import main
from fdcplan.config import ConfigError, config_from_dict, config_to_dict, load_config

ROOT = Path(__file__).resolve().parents[1]

# small enough for a few seconds per bench run
QUICK = {
    "orders": {"n_skus": 200, "n_orders": 4000},
    "demand": {"n_skus": 12, "n_fdcs": 2, "horizon": 42},
    "policy": {"n_scenarios": 2, "train_budget": 10, "grid_z": [0, 1], "grid_d": [1, 2]},
}


def quick_config(tmp_path, **over):
    raw = {**QUICK, **over}
    path = tmp_path / "quick.yaml"
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return str(path)


def test_default_config_file_loads():
    cfg = load_config(ROOT / "configs" / "default.yaml")
    assert cfg.orders.seed == 0 and cfg.demand.seed == 1
    assert cfg.assortment.coverage == 0.7


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"polcy": {}})
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"policy": {"grid_zz": [1]}})
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"orders": {"seed": 3}})


def test_k_and_coverage_exclusive():
    with pytest.raises(ConfigError):
        config_from_dict({"assortment": {"k": 5, "coverage": 0.5}})
    with pytest.raises(ConfigError):
        config_from_dict({"assortment": {"k": None, "coverage": None}})
    assert config_from_dict({"assortment": {"k": 5, "coverage": None}}).assortment.k == 5


def test_bad_values_become_config_errors():
    with pytest.raises(ConfigError):
        config_from_dict({"demand": {"sparsity": 2.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"assortment": {"methods": ["nope"]}})


def test_config_roundtrip():
    cfg = config_from_dict({**QUICK, "seed": 4})
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_seed_override(tmp_path):
    cfg = load_config(quick_config(tmp_path), seed=9)
    assert (cfg.seed, cfg.orders.seed, cfg.demand.seed) == (9, 9, 10)


def test_single_method_gives_single_row():
    cfg = config_from_dict({**QUICK, "assortment": {"methods": ["topk"]}})
    run = run_assortment(cfg)
    assert [r["method"] for r in run.rows] == ["Top-K-hist"] and run.sweep == []


def test_tuned_hybrid_beats_endpoints_on_training():
    cfg = config_from_dict({"seed": 7, "assortment": {"methods": ["mltopk", "reverse", "hybrid"]}})
    rows = {r["method"]: r["train_rate"] for r in run_assortment(cfg).rows}
    assert rows["Hybrid"] >= max(rows["ML-Top-K"], rows["Reverse-Exclude"])


def test_bench_is_byte_identical(tmp_path):
    cfg = config_from_dict(QUICK)
    a, b = tmp_path / "a", tmp_path / "b"
    run_benchmark(cfg, a)
    run_benchmark(cfg, b)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors
    for n in ("summary.json", "policy_table.csv", "assortment_table.csv", "ratio_sweep.svg", "config.yaml"):
        assert n in names


def test_cli_pipeline(tmp_path, capsys):
    cfg = quick_config(tmp_path)
    out = str(tmp_path / "out")
    assert main(["gen-orders", "--config", cfg, "--out", out]) == 0
    assert main(["gen-demand", "--config", cfg, "--out", out]) == 0
    assert (tmp_path / "out" / "demand.csv").exists()
    capsys.readouterr()

    orders = str(tmp_path / "out" / "orders_train.csv")
    assert main(["assort", "--config", cfg, "--out", out, "--method", "reverse", "--k", "10", "--orders", orders]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["k"] == 10
    assort = str(tmp_path / "out" / "assortment_reverse.csv")
    assert main(["eval-assort", "--assortment", assort, "--orders", orders]) == 0
    assert json.loads(capsys.readouterr().out)["rate"] == res["rate"]

    assert main(["simulate", "--config", cfg, "--out", out, "--policy", "myopic"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert 0 <= rep["fdc_fulfillment_rate"] <= 1
    assert (tmp_path / "out" / "trajectory_myopic.ndjson").exists()

    assert main(["tune-params", "--config", cfg, "--out", out]) == 0
    assert (tmp_path / "out" / "param_search.csv").read_text().count("\n") == 5


def test_cli_dp_oracle(capsys):
    assert main(["dp-oracle", "--z", "0", "--d", "1"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["params_policy_cost"] >= res["V1"] - 1e-9


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense_key: 1\n")
    assert main(["gen-demand", "--config", str(bad)]) == 1
    assert "unknown" in capsys.readouterr().err
    assert main(["eval-assort", "--assortment", "missing.csv", "--orders", "missing.csv"]) == 1
    assert main(["assort", "--config", quick_config(tmp_path), "--k", "3", "--coverage", "0.5", "--out", str(tmp_path)]) == 1
