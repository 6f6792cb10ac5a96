"""Periodic-review simulation of one RDC and its FDCs.

Event order within period ``t``:

1. the shipment sent ``lead_time`` periods ago is due at the FDCs;
2. the policy sees ``(on_hand, pipeline)`` and a forecast, and emits ``u^t``,
   which leaves the RDC immediately;
3. demand is realized and fulfilled (local stock, then RDC);
4. period cost = fulfillment cost + transfer cost;
5. stock rolls forward and exogenous replenishment lands at the RDC.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .allocation import PeriodOutcome, _fulfill
from .core import DemandPanel, InventoryState, NetworkConfig, validate_instance


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PeriodRecord:
    t: int
    on_hand: np.ndarray
    pipeline: np.ndarray
    transfers: np.ndarray
    arrivals: np.ndarray
    demand: np.ndarray
    outcome: PeriodOutcome
    transfer_cost: float
    replenishment: np.ndarray
    end_on_hand: np.ndarray
    safety_stock: np.ndarray | None = None
    forecast: np.ndarray | None = None

    def to_dict(self) -> dict:
        o = self.outcome
        d = {
            "t": self.t,
            "on_hand": self.on_hand.tolist(),
            "pipeline": self.pipeline.tolist(),
            "transfers": self.transfers.tolist(),
            "arrivals": self.arrivals.tolist(),
            "demand": self.demand.tolist(),
            "outcome": {
                "fdc_fulfilled": o.fdc_fulfilled.tolist(),
                "spillover": o.spillover.tolist(),
                "rdc_fulfilled": o.rdc_fulfilled.tolist(),
                "lost": o.lost.tolist(),
                "cost": o.cost,
            },
            "transfer_cost": self.transfer_cost,
            "replenishment": self.replenishment.tolist(),
            "end_on_hand": self.end_on_hand.tolist(),
        }
        if self.safety_stock is not None:
            d["safety_stock"] = self.safety_stock.tolist()
        if self.forecast is not None:
            d["forecast"] = np.round(self.forecast, 9).tolist()
        return d


@dataclass(eq=False)
class Trajectory:
    sku_ids: np.ndarray
    network: NetworkConfig
    records: list[PeriodRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def to_ndjson(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_ndjson())


@dataclass(frozen=True)
class SimulationReport:
    fdc_fulfillment_rate: float
    regional_loss: float
    loss_ratio: float | None
    total_cost: float
    transfer_cost: float
    spillover_cost: float
    lost_sales_cost: float
    local_order_rate: float | None = None
    loss_ratio_undefined: bool = False
    forecast_mae: float | None = None
    safety_stock_violation: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def metrics(trajectory: Trajectory) -> SimulationReport:
    """FDC fill rate, regional loss share, loss ratio and cost breakdown."""
    if not trajectory.records:
        raise ValueError("empty trajectory")
    net = trajectory.network
    x = sum(int(r.outcome.fdc_fulfilled.sum()) for r in trajectory.records)
    z = sum(int(r.outcome.lost.sum()) for r in trajectory.records)
    spill = sum(int(r.outcome.spillover.sum()) for r in trajectory.records)
    d_fdc = sum(int(r.demand[:, 1:].sum()) for r in trajectory.records)
    d_all = sum(int(r.demand.sum()) for r in trajectory.records)
    transfer = sum(r.transfer_cost for r in trajectory.records)
    fulfil = sum(r.outcome.cost for r in trajectory.records)
    spill_cost = net.spillover_cost * spill
    lost_cost = net.lost_sale_cost * z
    undefined = x == 0
    mae = None
    if all(r.forecast is not None for r in trajectory.records):
        mae = float(np.mean([np.abs(r.forecast - r.demand).mean() for r in trajectory.records]))
    ss_viol = None
    if all(r.safety_stock is not None for r in trajectory.records):
        ss_viol = float(np.mean([np.maximum(0, r.safety_stock - r.end_on_hand).mean() for r in trajectory.records]))
    return SimulationReport(
        fdc_fulfillment_rate=x / d_fdc if d_fdc else 1.0,
        regional_loss=z / d_all if d_all else 0.0,
        loss_ratio=None if undefined else z / x,
        total_cost=fulfil + transfer,
        transfer_cost=transfer,
        spillover_cost=spill_cost,
        lost_sales_cost=lost_cost,
        loss_ratio_undefined=undefined,
        forecast_mae=mae,
        safety_stock_violation=ss_viol,
    )


def _check_transfers(u, rdc, network, t, shape):
    if u.shape != shape:
        raise SimulationError(f"period {t}: transfer matrix shape {u.shape} != {shape}")
    if (u < 0).any():
        raise SimulationError(f"period {t}: negative transfer")
    if (u.sum(axis=1) > rdc).any():
        raise SimulationError(f"period {t}: transfers exceed RDC on-hand stock")
    cap = network.transfer_cap
    if cap is not None and (u.sum(axis=0) > cap).any():
        raise SimulationError(f"period {t}: transfers exceed the per-FDC cap of {cap}")


def simulate(
    network: NetworkConfig,
    initial_state: InventoryState,
    panel: DemandPanel,
    policy,
    forecaster=None,
    horizon: int | None = None,
    check: bool = True,
) -> tuple[Trajectory, SimulationReport]:
    """Run ``policy`` over the panel.

    ``policy.decide(t, state, point, sd)`` returns the integer transfer
    matrix; ``forecaster`` (optional) supplies ``point``/``sd`` over
    ``policy.horizon`` periods and is fed realized demand after each period.
    With ``check`` on, conservation and flow balance are asserted every
    period.
    """
    problems = validate_instance(network, initial_state, panel)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    T = panel.horizon if horizon is None else int(horizon)
    if T > panel.horizon:
        raise ValueError(f"horizon {T} exceeds panel length {panel.horizon}")
    l = network.lead_time
    c, s = network.spillover_cost, network.lost_sale_cost
    r = network.transfer_cost_matrix(initial_state.sku_ids)
    on_hand = initial_state.on_hand.copy()
    pipe = initial_state.pipeline.copy()
    n, J = on_hand.shape[0], network.n_fdcs
    traj = Trajectory(initial_state.sku_ids, network)
    for t in range(T):
        view = InventoryState(initial_state.sku_ids, network.fdc_ids, on_hand, pipe)
        point = sd = None
        if forecaster is not None:
            point, sd = forecaster.predict(t, max(1, getattr(policy, "horizon", 1)))
        u = np.asarray(policy.decide(t, view, point, sd))
        if not np.issubdtype(u.dtype, np.integer):
            if not np.array_equal(u, np.round(u)):
                raise SimulationError(f"period {t}: transfers must be integers")
        u = u.astype(np.int64)
        _check_transfers(u, on_hand[:, 0], network, t, (n, J))
        arriving = pipe[0] if l > 0 else u
        demand = panel.demand[t]
        out = _fulfill(on_hand, arriving, u, demand, c, s)
        tc = float((r * u).sum())
        repl = panel.replenishment[t]
        fdc_next = on_hand[:, 1:] + arriving - out.fdc_fulfilled
        rdc_left = on_hand[:, 0] - u.sum(axis=1) - out.rdc_fulfilled - out.spillover.sum(axis=1)
        if check:
            if (fdc_next < 0).any() or (rdc_left < 0).any():
                raise SimulationError(f"period {t}: negative inventory after fulfillment")
            if not np.array_equal(out.fdc_fulfilled + out.spillover + out.lost[:, 1:], demand[:, 1:]):
                raise SimulationError(f"period {t}: FDC flow balance violated")
            if not np.array_equal(out.rdc_fulfilled + out.lost[:, 0], demand[:, 0]):
                raise SimulationError(f"period {t}: RDC flow balance violated")
        end = np.empty_like(on_hand)
        end[:, 0] = rdc_left + repl
        end[:, 1:] = fdc_next
        params = getattr(policy, "last_params", None)
        traj.records.append(
            PeriodRecord(
                t=t,
                on_hand=on_hand,
                pipeline=pipe,
                transfers=u,
                arrivals=np.asarray(arriving).copy(),
                demand=np.asarray(demand),
                outcome=out,
                transfer_cost=tc,
                replenishment=np.asarray(repl),
                end_on_hand=end,
                safety_stock=None if params is None else params.ss,
                forecast=None if point is None else point[:, :, 0],
            )
        )
        if l > 0:
            pipe = np.concatenate([pipe[1:], u[None]], axis=0)
        on_hand = end
        if forecaster is not None:
            forecaster.observe(t, demand)
    return traj, metrics(traj)


def eval_order_level(trajectory: Trajectory, order_stream) -> float:
    """Share of orders served entirely from their FDC's stock, replayed in arrival order.

    Each period's FDC stock is the on-hand level plus that period's arrivals.
    An order that cannot be served in full locally consumes no FDC stock.
    """
    periods = order_stream.periods if hasattr(order_stream, "periods") else order_stream
    if len(periods) != len(trajectory.records):
        raise ValueError("order stream and trajectory cover different numbers of periods")
    fdcs = trajectory.network.fdc_ids
    sku_pos = {int(s): i for i, s in enumerate(trajectory.sku_ids.tolist())}
    total = local = 0
    for rec, orders in zip(trajectory.records, periods):
        units = np.zeros_like(rec.demand[:, 1:])
        for fdc, skus in orders:
            if fdc not in fdcs:
                raise ValueError(f"period {rec.t}: order routed to unknown FDC {fdc}")
            for s in skus:
                if s not in sku_pos:
                    raise ValueError(f"period {rec.t}: order references unknown sku {s}")
                units[sku_pos[s], fdcs.index(fdc)] += 1
        if not np.array_equal(units, rec.demand[:, 1:]):
            raise ValueError(f"period {rec.t}: order stream does not match FDC demand")
        stock = (rec.on_hand[:, 1:] + rec.arrivals).copy()
        for fdc, skus in orders:
            j = fdcs.index(fdc)
            rows = [sku_pos[s] for s in skus]
            total += 1
            if all(stock[i, j] >= 1 for i in rows):
                local += 1
                for i in rows:
                    stock[i, j] -= 1
    return local / total if total else 1.0
