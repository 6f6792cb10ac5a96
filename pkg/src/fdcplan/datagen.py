"""Synthetic order books and demand panels, plus order-log ingestion.

Everything here is a pure function of its config: each generator owns a
``numpy.random.Generator`` seeded from ``cfg.seed``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RDC, DemandPanel, OrderBook, Sku


class OrderLogError(ValueError):
    pass


@dataclass(frozen=True)
class OrderGenConfig:
    """Clustered Zipf order generator.

    ``order_size_dist[k]`` is the probability of an order with ``k + 1`` skus.
    Clusters are contiguous id blocks; popularity ranks are a seeded
    permutation of ids so every cluster mixes head and tail skus.
    ``n_periods > 1`` spreads orders over dated periods, and ``drift_sd``
    gives each sku a log-linear popularity trend across those periods.
    """

    n_skus: int = 500
    n_orders: int = 20_000
    zipf_exponent: float = 1.1
    order_size_dist: tuple[float, ...] = (0.45, 0.25, 0.15, 0.1, 0.05)
    n_clusters: int = 25
    intra_cluster_prob: float = 0.85
    seed: int = 0
    n_periods: int = 1
    drift_sd: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "order_size_dist", tuple(float(p) for p in self.order_size_dist))
        if self.n_skus < 1 or self.n_orders < 1 or self.n_clusters < 1 or self.n_periods < 1:
            raise ValueError("n_skus, n_orders, n_clusters and n_periods must be positive")
        if self.zipf_exponent <= 0:
            raise ValueError("zipf_exponent must be > 0")
        if not 0.0 <= self.intra_cluster_prob <= 1.0:
            raise ValueError("intra_cluster_prob must lie in [0, 1]")
        p = self.order_size_dist
        if not p or any(x < 0 or x > 1 for x in p) or abs(sum(p) - 1.0) > 1e-9:
            raise ValueError("order_size_dist must be probabilities summing to 1")
        if self.drift_sd < 0:
            raise ValueError("drift_sd must be >= 0")

    @property
    def max_size(self) -> int:
        return max(k + 1 for k, p in enumerate(self.order_size_dist) if p > 0)


def zipf_weights(n: int, exponent: float) -> np.ndarray:
    """Normalized weights ``k**-exponent`` for ranks ``k = 1..n``."""
    w = np.arange(1, n + 1, dtype=float) ** -exponent
    return w / w.sum()


def _popularity(cfg: OrderGenConfig, rng: np.random.Generator) -> np.ndarray:
    rank_of = rng.permutation(cfg.n_skus)
    return zipf_weights(cfg.n_skus, cfg.zipf_exponent)[rank_of]


def _pick(cdf, u):
    return min(int(np.searchsorted(cdf, u, side="right")), cdf.shape[0] - 1)


def _draw_orders(cfg, rng, weight, n_orders):
    """Yield sorted sku tuples for ``n_orders`` orders under popularity ``weight``.

    The first sku is drawn from the global popularity law, which fixes the
    order's cluster. Each further sku comes from inside that cluster with
    probability ``intra_cluster_prob`` and from outside it otherwise, both
    popularity-weighted and without repeats.
    """
    n = cfg.n_skus
    block = math.ceil(n / cfg.n_clusters)
    cdf = np.cumsum(weight)
    cdf /= cdf[-1]
    cluster_cdf = []
    for lo in range(0, n, block):
        c = np.cumsum(weight[lo:lo + block])
        cluster_cdf.append(c / c[-1] if c[-1] > 0 else np.linspace(1 / c.size, 1.0, c.size))
    sizes = rng.choice(len(cfg.order_size_dist), size=n_orders, p=cfg.order_size_dist) + 1
    first = np.minimum(np.searchsorted(cdf, rng.random(n_orders), side="right"), n - 1)
    for o in range(n_orders):
        f = int(first[o])
        picked = {f}
        c = f // block
        lo, hi = c * block, min(c * block + block, n)
        for _ in range(1, sizes[o]):
            in_full = sum(lo <= p < hi for p in picked) >= hi - lo
            out_full = len(picked) - sum(lo <= p < hi for p in picked) >= n - (hi - lo)
            inside = (rng.random() < cfg.intra_cluster_prob and not in_full) or out_full
            pick = -1
            for _attempt in range(64):
                if inside:
                    cand = lo + _pick(cluster_cdf[c], rng.random())
                else:
                    cand = _pick(cdf, rng.random())
                    if lo <= cand < hi:
                        continue
                if cand not in picked:
                    pick = cand
                    break
            if pick < 0:
                pool = [p for p in (range(lo, hi) if inside else [*range(lo), *range(hi, n)]) if p not in picked]
                w = weight[pool]
                w = w / w.sum() if w.sum() > 0 else np.full(len(pool), 1.0 / len(pool))
                pick = pool[_pick(np.cumsum(w), rng.random())]
            picked.add(pick)
        yield tuple(sorted(picked))


def gen_dated_orders(cfg: OrderGenConfig) -> list[OrderBook]:
    """Per-period order books; their merged total holds exactly ``cfg.n_orders`` orders."""
    if cfg.max_size > cfg.n_skus:
        raise ValueError(f"max order size {cfg.max_size} exceeds n_skus {cfg.n_skus}")
    rng = np.random.default_rng(cfg.seed)
    base = _popularity(cfg, rng)
    drift = rng.normal(0.0, cfg.drift_sd, cfg.n_skus) if cfg.drift_sd > 0 else np.zeros(cfg.n_skus)
    per = np.full(cfg.n_periods, cfg.n_orders // cfg.n_periods)
    per[: cfg.n_orders % cfg.n_periods] += 1
    catalog = list(range(cfg.n_skus))
    skus = tuple(Sku(i, int(i // math.ceil(cfg.n_skus / cfg.n_clusters)), float(base[i])) for i in catalog)
    books = []
    for t in range(cfg.n_periods):
        w = base * np.exp(drift * (t - (cfg.n_periods - 1) / 2.0))
        w /= w.sum()
        counts: dict[tuple[int, ...], int] = {}
        for key in _draw_orders(cfg, rng, w, int(per[t])):
            counts[key] = counts.get(key, 0) + 1
        books.append(OrderBook.from_orders(counts, catalog=catalog, skus=skus))
    return books


def gen_order_book(cfg: OrderGenConfig) -> OrderBook:
    """One book over the whole horizon (dated books merged)."""
    books = gen_dated_orders(cfg)
    return merge_books(books)


def merge_books(books: list[OrderBook]) -> OrderBook:
    counts: dict[tuple[int, ...], int] = {}
    catalog: set[int] = set()
    for b in books:
        catalog.update(b.sku_ids.tolist())
        for o in range(b.n_types):
            key = b.members(o)
            counts[key] = counts.get(key, 0) + int(b.counts[o])
    return OrderBook.from_orders(counts, catalog=sorted(catalog), skus=books[0].skus if books else None)


def daily_sku_counts(books: list[OrderBook], sku_ids) -> np.ndarray:
    """``(periods, skus)`` matrix of orders containing each sku, per period."""
    sku_ids = np.asarray(sku_ids, dtype=np.int64)
    out = np.zeros((len(books), sku_ids.size), dtype=np.int64)
    for t, b in enumerate(books):
        f = b.frequencies()
        pos = np.searchsorted(sku_ids, b.sku_ids)
        out[t, pos] = f
    return out


# demand panels -----------------------------------------------------------------


@dataclass(frozen=True)
class DemandGenConfig:
    """Sparse Poisson demand with seasonality, promotions and periodic RDC replenishment.

    ``base_rate`` is the mean daily demand per sku at each FDC (scalar or one
    value per FDC). The RDC's own mean is sized so it receives ``rdc_share`` of
    regional demand. Replenishment arrives every ``replenish_every`` periods
    with ``replenish_cover`` times the expected regional demand of one cycle.
    """

    n_skus: int = 50
    n_fdcs: int = 3
    horizon: int = 56
    base_rate: float | tuple[float, ...] = 2.0
    sparsity: float = 0.3
    season_period: int = 7
    season_amplitude: float = 0.2
    promo_days: tuple[int, ...] = ()
    promo_uplift: float = 1.5
    rdc_share: float = 0.2
    replenish_every: int = 7
    replenish_cover: float = 1.0
    sku_scale: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        rates = self.base_rate if isinstance(self.base_rate, (tuple, list)) else (self.base_rate,)
        object.__setattr__(self, "promo_days", tuple(int(d) for d in self.promo_days))
        if isinstance(self.base_rate, list):
            object.__setattr__(self, "base_rate", tuple(float(x) for x in self.base_rate))
        if self.sku_scale is not None:
            object.__setattr__(self, "sku_scale", tuple(float(x) for x in self.sku_scale))
            if len(self.sku_scale) != self.n_skus or min(self.sku_scale) < 0:
                raise ValueError("sku_scale needs one non-negative value per sku")
        if min(self.n_skus, self.n_fdcs, self.horizon, self.season_period, self.replenish_every) < 1:
            raise ValueError("sizes, season_period and replenish_every must be positive")
        if any(r < 0 for r in rates) or (len(rates) not in (1, self.n_fdcs)):
            raise ValueError("base_rate must be non-negative, scalar or one per FDC")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if not 0.0 <= self.rdc_share < 1.0:
            raise ValueError("rdc_share must lie in [0, 1)")
        if self.season_amplitude < 0 or self.promo_uplift < 1 or self.replenish_cover < 0:
            raise ValueError("season_amplitude >= 0, promo_uplift >= 1, replenish_cover >= 0 required")

    def fdc_rates(self) -> np.ndarray:
        r = np.atleast_1d(np.asarray(self.base_rate, dtype=float))
        return np.broadcast_to(r, (self.n_fdcs,)).copy()

    def mean_demand(self) -> np.ndarray:
        """Expected demand ``(T, n_skus, 1 + n_fdcs)``, before sparsity thinning."""
        t = np.arange(self.horizon)
        season = np.clip(1.0 + self.season_amplitude * np.sin(2 * np.pi * t / self.season_period), 0.0, None)
        promo = np.where(np.isin(t, self.promo_days), self.promo_uplift, 1.0)
        fdc = self.fdc_rates()
        rdc = fdc.sum() * self.rdc_share / (1.0 - self.rdc_share)
        loc = np.concatenate(([rdc], fdc))
        scale = np.ones(self.n_skus) if self.sku_scale is None else np.asarray(self.sku_scale)
        return (season * promo)[:, None, None] * scale[None, :, None] * loc[None, None, :]


def gen_demand_panel(cfg: DemandGenConfig) -> DemandPanel:
    rng = np.random.default_rng(cfg.seed)
    mean = cfg.mean_demand()
    draws = rng.poisson(mean)
    active = rng.random(mean.shape) >= cfg.sparsity
    demand = np.where(active, draws, 0).astype(np.int64)
    expected = (1.0 - cfg.sparsity) * mean.sum(axis=2)
    repl = np.zeros((cfg.horizon, cfg.n_skus), dtype=np.int64)
    for t in range(0, cfg.horizon, cfg.replenish_every):
        cycle = expected[t:t + cfg.replenish_every].sum(axis=0)
        repl[t] = np.ceil(cfg.replenish_cover * cycle - 1e-9).astype(np.int64)
    return DemandPanel(
        sku_ids=np.arange(cfg.n_skus),
        location_ids=(RDC, *range(1, cfg.n_fdcs + 1)),
        demand=demand,
        replenishment=repl,
    )


# order logs ------------------------------------------------------------------


def ingest_order_log(path) -> OrderBook:
    """Read an ``order_id,sku_id`` CSV into an order book.

    Rows sharing an order id form one sku-set (repeated skus collapse); equal
    sku-sets are merged into a single order type. Extra columns are ignored.
    """
    path = Path(path)
    orders: dict[str, set[int]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise OrderLogError(f"{path}: empty order log")
        header = [h.strip() for h in header]
        if header[:2] != ["order_id", "sku_id"]:
            raise OrderLogError(f"{path}:1: expected header 'order_id,sku_id', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2 or not row[0].strip():
                raise OrderLogError(f"{path}:{lineno}: malformed row {row!r}")
            try:
                sku = int(row[1])
            except ValueError:
                raise OrderLogError(f"{path}:{lineno}: sku_id {row[1]!r} is not an integer") from None
            if sku < 0:
                raise OrderLogError(f"{path}:{lineno}: negative sku_id {sku}")
            orders.setdefault(row[0].strip(), set()).add(sku)
    if not orders:
        raise OrderLogError(f"{path}: order log has no rows")
    counts: dict[tuple[int, ...], int] = {}
    for skus in orders.values():
        key = tuple(sorted(skus))
        counts[key] = counts.get(key, 0) + 1
    return OrderBook.from_orders(counts)


def write_order_log(book: OrderBook, path) -> None:
    """Expand every order type into ``count`` synthetic orders, one row per sku."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["order_id", "sku_id"])
        n = 0
        for o in range(book.n_types):
            members = book.members(o)
            for _ in range(int(book.counts[o])):
                n += 1
                for s in members:
                    w.writerow([f"o{n}", s])


def write_demand_panel(panel: DemandPanel, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "location", "sku_id", "qty"])
        T, n, L = panel.demand.shape
        for t in range(T):
            for j in range(L):
                for i in range(n):
                    q = int(panel.demand[t, i, j])
                    if q:
                        w.writerow([t, panel.location_ids[j], int(panel.sku_ids[i]), q])


def write_replenishment(panel: DemandPanel, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "sku_id", "qty"])
        for t, i in zip(*np.nonzero(panel.replenishment)):
            w.writerow([int(t), int(panel.sku_ids[i]), int(panel.replenishment[t, i])])


def _read_rows(path, header):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or [h.strip() for h in got] != header:
            raise ValueError(f"{path}: expected header {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                vals = [int(x) for x in row]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer field in {row!r}") from None
            if len(vals) != len(header) or vals[-1] < 0:
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}")
            rows.append(vals)
    return rows


def read_demand_panel(demand_path, replenishment_path=None, *, sku_ids=None, fdc_ids=None, horizon=None) -> DemandPanel:
    """Load panel CSVs. Labels default to whatever ids appear in the files."""
    rows = _read_rows(demand_path, ["period", "location", "sku_id", "qty"])
    rrows = _read_rows(replenishment_path, ["period", "sku_id", "qty"]) if replenishment_path else []
    skus = sorted(set(sku_ids) if sku_ids is not None else {r[2] for r in rows} | {r[1] for r in rrows})
    fdcs = sorted(set(fdc_ids) if fdc_ids is not None else {r[1] for r in rows} - {RDC})
    T = horizon or 1 + max([r[0] for r in rows] + [r[0] for r in rrows] + [0])
    locs = (RDC, *fdcs)
    si = {s: k for k, s in enumerate(skus)}
    li = {x: k for k, x in enumerate(locs)}
    demand = np.zeros((T, len(skus), len(locs)), dtype=np.int64)
    for t, loc, sku, q in rows:
        if t < 0 or t >= T or loc not in li or sku not in si:
            raise ValueError(f"{demand_path}: row {(t, loc, sku, q)} outside panel labels")
        demand[t, si[sku], li[loc]] += q
    repl = np.zeros((T, len(skus)), dtype=np.int64)
    for t, sku, q in rrows:
        if t < 0 or t >= T or sku not in si:
            raise ValueError(f"{replenishment_path}: row {(t, sku, q)} outside panel labels")
        repl[t, si[sku]] += q
    return DemandPanel(np.array(skus, dtype=np.int64), locs, demand, repl)


@dataclass
class OrderStream:
    """Per-period orders routed to FDCs: ``periods[t]`` is a list of ``(fdc_id, sku_ids)``."""

    periods: list[list[tuple[int, tuple[int, ...]]]] = field(default_factory=list)


def split_demand_into_orders(panel: DemandPanel, max_size: int = 3, seed: int = 0) -> OrderStream:
    """Group each period's FDC demand units into random multi-sku orders.

    Unit totals per (period, fdc, sku) match the panel exactly; an order never
    repeats a sku.
    """
    rng = np.random.default_rng(seed)
    stream = OrderStream()
    T, n, L = panel.demand.shape
    for t in range(T):
        orders = []
        for j in range(1, L):
            units = np.repeat(panel.sku_ids, panel.demand[t, :, j]).tolist()
            rng.shuffle(units)
            pending: list[list[int]] = []
            for s in units:
                target = rng.integers(1, max_size + 1)
                placed = False
                for o in pending:
                    if len(o) < target and s not in o:
                        o.append(s)
                        placed = True
                        break
                if not placed:
                    pending.append([s])
            perm = rng.permutation(len(pending))
            orders.extend((panel.location_ids[j], tuple(sorted(pending[k]))) for k in perm)
        order_perm = rng.permutation(len(orders))
        stream.periods.append([orders[k] for k in order_perm])
    return stream
