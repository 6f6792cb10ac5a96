"""Run configuration loaded from YAML.

Key names mirror the dataclass fields exactly; any unknown key is an error
so a typo never silently falls back to a default.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .datagen import DemandGenConfig, OrderGenConfig

METHODS = ("topk", "mltopk", "reverse", "hybrid", "exact")
POLICIES = ("params", "myopic", "e2e")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AssortmentConfig:
    k: int | None = None
    coverage: float | None = 0.7
    methods: tuple[str, ...] = ("topk", "mltopk", "reverse", "hybrid")
    ratio_grid: tuple[float, ...] = tuple(i / 10 for i in range(11))
    train_periods: int = 28
    test_periods: int = 14
    season_period: int = 7

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "ratio_grid", tuple(float(r) for r in self.ratio_grid))
        if (self.k is None) == (self.coverage is None):
            raise ConfigError("assortment: give exactly one of k and coverage")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"assortment.methods: unknown or empty {bad}; choose from {METHODS}")
        if self.train_periods < 2 * self.season_period or self.test_periods < 1:
            raise ConfigError("assortment: train_periods must cover two seasons and test_periods be positive")


@dataclass(frozen=True)
class NetworkSection:
    lead_time: int = 1
    spillover_cost: float = 1.0
    lost_sale_cost: float = 10.0
    transfer_cost: float = 0.2
    transfer_cap: int | None = None


@dataclass(frozen=True)
class PolicyConfig:
    policies: tuple[str, ...] = POLICIES
    grid_z: tuple[float, ...] = (0.0, 1.0, 2.0)
    grid_d: tuple[float, ...] = (1.0, 2.0, 3.0)
    review_period: int = 1
    history_periods: int = 28
    n_scenarios: int = 3
    train_budget: int = 40
    initial_z: float = 1.0
    initial_d: float = 2.0
    myopic_safety_factor: float = 0.0
    initial_rdc_days: float = 7.0
    order_max_size: int = 3

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "grid_z", tuple(float(v) for v in self.grid_z))
        object.__setattr__(self, "grid_d", tuple(float(v) for v in self.grid_d))
        bad = [p for p in self.policies if p not in POLICIES]
        if bad:
            raise ConfigError(f"policy.policies: unknown {bad}; choose from {POLICIES}")
        if not self.grid_z or not self.grid_d:
            raise ConfigError("policy: grids must be non-empty")
        if self.n_scenarios < 1 or self.train_budget < 1 or self.review_period < 1:
            raise ConfigError("policy: n_scenarios, train_budget and review_period must be positive")


@dataclass(frozen=True)
class WeightsConfig:
    op: float = 1.0
    sales_pred: float = 0.0
    ss: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "default"
    seed: int = 0
    out_dir: str = "out"
    orders: OrderGenConfig = field(default_factory=lambda: OrderGenConfig(n_periods=42))
    demand: DemandGenConfig = field(default_factory=DemandGenConfig)
    assortment: AssortmentConfig = field(default_factory=AssortmentConfig)
    network: NetworkSection = field(default_factory=NetworkSection)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)

    def __post_init__(self):
        a = self.assortment
        if self.orders.n_periods != a.train_periods + a.test_periods:
            raise ConfigError(
                f"orders.n_periods ({self.orders.n_periods}) must equal train_periods + test_periods "
                f"({a.train_periods + a.test_periods})"
            )
        if self.demand.horizon <= self.policy.history_periods:
            raise ConfigError("demand.horizon must exceed policy.history_periods")
        if self.policy.history_periods < 2 * self.demand.season_period:
            raise ConfigError("policy.history_periods must cover two demand seasons")

    def with_seed(self, seed: int) -> RunConfig:
        return dataclasses.replace(self, seed=int(seed))


_SECTIONS = {
    "orders": OrderGenConfig,
    "demand": DemandGenConfig,
    "assortment": AssortmentConfig,
    "network": NetworkSection,
    "policy": PolicyConfig,
    "weights": WeightsConfig,
}
# generator seeds come from the top-level seed
_DERIVED = {"orders": {"seed"}, "demand": {"seed"}}


def _section(name, cls, raw):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    allowed = {f.name for f in dataclasses.fields(cls)} - _DERIVED.get(name, set())
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {unknown}")
    vals = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
    return vals


def config_from_dict(raw: dict | None) -> RunConfig:
    raw = dict(raw or {})
    top = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - top)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    seed = int(raw.get("seed", 0))
    kwargs = {k: raw[k] for k in ("experiment", "out_dir") if k in raw}
    a_vals = _section("assortment", AssortmentConfig, raw.get("assortment"))
    try:
        assortment = AssortmentConfig(**a_vals)
        o_vals = _section("orders", OrderGenConfig, raw.get("orders"))
        o_vals.setdefault("n_periods", assortment.train_periods + assortment.test_periods)
        d_vals = _section("demand", DemandGenConfig, raw.get("demand"))
        sections = {
            "orders": OrderGenConfig(seed=seed, **o_vals),
            "demand": DemandGenConfig(seed=seed + 1, **d_vals),
            "assortment": assortment,
        }
        for name in ("network", "policy", "weights"):
            sections[name] = _SECTIONS[name](**_section(name, _SECTIONS[name], raw.get(name)))
        return RunConfig(seed=seed, **kwargs, **sections)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, seed: int | None = None) -> RunConfig:
    raw = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    if seed is not None:
        raw["seed"] = seed
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"experiment": cfg.experiment, "seed": cfg.seed, "out_dir": cfg.out_dir}
    for name in _SECTIONS:
        sec = dataclasses.asdict(getattr(cfg, name))
        for k in _DERIVED.get(name, ()):
            sec.pop(k, None)
        out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
    return out
