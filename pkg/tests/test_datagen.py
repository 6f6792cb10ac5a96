import numpy as np
import pytest

from _util import A, B
from fdcplan.core import OrderBook
from fdcplan.datagen import (
    DemandGenConfig,
    OrderGenConfig,
    OrderLogError,
    daily_sku_counts,
    gen_dated_orders,
    gen_demand_panel,
    gen_order_book,
    ingest_order_log,
    read_demand_panel,
    split_demand_into_orders,
    write_demand_panel,
    write_order_log,
    write_replenishment,
    zipf_weights,
)


def test_order_book_deterministic_and_exact_total():
    cfg = OrderGenConfig(n_skus=200, n_orders=3000, seed=5)
    a, b = gen_order_book(cfg), gen_order_book(cfg)
    assert a == b
    assert a.total_orders == 3000


def test_singleton_size_dist_gives_singletons():
    b = gen_order_book(OrderGenConfig(n_skus=50, n_orders=500, order_size_dist=(1.0,), seed=1))
    assert (b.sizes == 1).all()


def test_rank_one_frequency_matches_zipf():
    cfg = OrderGenConfig(n_skus=1000, n_orders=100_000, zipf_exponent=1.2, order_size_dist=(1.0,), seed=3)
    b = gen_order_book(cfg)
    top = max(b.skus, key=lambda s: s.popularity_weight)
    expected = zipf_weights(1000, 1.2)[0] * cfg.n_orders
    observed = b.frequencies()[b.positions([top.id])[0]]
    assert abs(observed - expected) <= 0.15 * expected


def test_oversized_orders_rejected():
    with pytest.raises(ValueError):
        gen_order_book(OrderGenConfig(n_skus=2, n_orders=10, order_size_dist=(0.0, 0.0, 1.0)))


def test_orders_never_repeat_a_sku_and_clusters_dominate():
    cfg = OrderGenConfig(n_skus=100, n_orders=4000, n_clusters=10, intra_cluster_prob=1.0, seed=2)
    b = gen_order_book(cfg)
    for o in range(b.n_types):
        m = b.members(o)
        assert len(set(m)) == len(m)
        assert len({s // 10 for s in m}) == 1


def test_dated_orders_split_total():
    books = gen_dated_orders(OrderGenConfig(n_skus=60, n_orders=1001, n_periods=7, seed=4))
    assert len(books) == 7 and sum(b.total_orders for b in books) == 1001
    counts = daily_sku_counts(books, np.arange(60))
    assert counts.shape == (7, 60)
    assert counts.sum() == sum(int(b.frequencies().sum()) for b in books)


def test_full_sparsity_means_no_demand():
    p = gen_demand_panel(DemandGenConfig(sparsity=1.0, seed=1))
    assert p.demand.sum() == 0


def test_sample_means_within_three_standard_errors():
    cfg = DemandGenConfig(n_skus=5, n_fdcs=2, horizon=400, base_rate=3.0, sparsity=0.0, season_amplitude=0.0, seed=11)
    p = gen_demand_panel(cfg)
    fdc = p.demand[:, :, 1:].astype(float)
    mean = fdc.mean(axis=0)
    se = fdc.std(axis=0, ddof=1) / np.sqrt(cfg.horizon)
    assert (np.abs(mean - 3.0) <= 3 * se).all()


def test_promo_uplift_ratio():
    promo = tuple(range(0, 300, 3))
    cfg = DemandGenConfig(
        n_skus=10, n_fdcs=2, horizon=300, base_rate=20.0, sparsity=0.0, season_amplitude=0.0,
        promo_days=promo, promo_uplift=1.5, seed=2,
    )
    d = gen_demand_panel(cfg).demand[:, :, 1:]
    on = np.isin(np.arange(300), promo)
    ratio = d[on].mean() / d[~on].mean()
    assert abs(ratio - 1.5) <= 0.1 * 1.5


def test_rdc_share_and_replenishment_schedule():
    cfg = DemandGenConfig(n_skus=4, n_fdcs=3, horizon=21, base_rate=2.0, rdc_share=0.25, replenish_every=7, seed=0)
    mean = cfg.mean_demand()
    share = mean[:, :, 0].sum() / mean.sum()
    assert share == pytest.approx(0.25)
    repl = gen_demand_panel(cfg).replenishment
    assert set(np.flatnonzero(repl.sum(axis=1))) == {0, 7, 14}


def _write(tmp_path, text):
    p = tmp_path / "orders.csv"
    p.write_text(text, encoding="utf-8")
    return p


def test_ingest_grouping_examples(tmp_path):
    b = ingest_order_log(_write(tmp_path, f"order_id,sku_id\no1,{A}\no1,{B}\no2,{A}\n"))
    assert b.as_dict() == {frozenset({A, B}): 1, frozenset({A}): 1}
    b = ingest_order_log(_write(tmp_path, f"order_id,sku_id\no1,{A}\no1,{A}\n"))
    assert b.as_dict() == {frozenset({A}): 1}
    rows = "".join(f"o{i},{A}\no{i},{B}\n" for i in range(3))
    b = ingest_order_log(_write(tmp_path, "order_id,sku_id,qty\n" + rows.replace(f"{B}\n", f"{B},4\n")))
    assert b.as_dict() == {frozenset({A, B}): 3}


def test_ingest_errors_name_the_line(tmp_path):
    with pytest.raises(OrderLogError, match="empty"):
        ingest_order_log(_write(tmp_path, ""))
    with pytest.raises(OrderLogError, match=":3:"):
        ingest_order_log(_write(tmp_path, "order_id,sku_id\no1,1\no2,abc\n"))
    with pytest.raises(OrderLogError, match=":1:"):
        ingest_order_log(_write(tmp_path, "id,sku\n"))


def test_order_log_round_trip_fixed_point(tmp_path):
    b = gen_order_book(OrderGenConfig(n_skus=40, n_orders=500, seed=9))
    write_order_log(b, tmp_path / "a.csv")
    once = ingest_order_log(tmp_path / "a.csv")
    write_order_log(once, tmp_path / "b.csv")
    twice = ingest_order_log(tmp_path / "b.csv")
    assert once.as_dict() == b.as_dict() and twice == once
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_demand_panel_round_trip(tmp_path):
    p = gen_demand_panel(DemandGenConfig(n_skus=6, n_fdcs=2, horizon=14, seed=3))
    write_demand_panel(p, tmp_path / "d.csv")
    write_replenishment(p, tmp_path / "r.csv")
    q = read_demand_panel(tmp_path / "d.csv", tmp_path / "r.csv", sku_ids=p.sku_ids, fdc_ids=(1, 2), horizon=14)
    assert np.array_equal(q.demand, p.demand) and np.array_equal(q.replenishment, p.replenishment)


def test_split_into_orders_matches_units():
    p = gen_demand_panel(DemandGenConfig(n_skus=8, n_fdcs=2, horizon=5, seed=1))
    stream = split_demand_into_orders(p, max_size=3, seed=0)
    for t, orders in enumerate(stream.periods):
        units = np.zeros((8, 2), int)
        for fdc, skus in orders:
            assert len(set(skus)) == len(skus) <= 3
            for s in skus:
                units[s, fdc - 1] += 1
        assert np.array_equal(units, p.demand[t, :, 1:])
