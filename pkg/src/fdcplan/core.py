"""Shared domain types for the RDC/FDC network, order books and inventory state.

Locations are indexed by column: column 0 is the RDC, column ``1 + j`` is the
j-th FDC in ascending id order. Quantities are integer units, costs are floats.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

RDC = 0


def _frozen(a, dtype=np.int64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Sku:
    id: int
    category_id: int = 0
    popularity_weight: float = 1.0


@dataclass(frozen=True)
class OrderType:
    skus: frozenset[int]
    count: int

    def __post_init__(self):
        object.__setattr__(self, "skus", frozenset(int(s) for s in self.skus))
        if not self.skus:
            raise ValueError("order type must contain at least one sku")
        if self.count < 0:
            raise ValueError(f"order count must be >= 0, got {self.count}")


@dataclass(frozen=True, eq=False)
class OrderBook:
    """Order types over a catalog, stored as a CSR incidence matrix.

    ``indices`` holds catalog *positions* (not ids); ``sku_ids`` is sorted, so
    position order and id order coincide. Order types are distinct sku-sets.
    """

    sku_ids: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    counts: np.ndarray
    skus: tuple[Sku, ...] | None = None

    def __post_init__(self):
        for name in ("sku_ids", "indptr", "indices", "counts"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        ids = self.sku_ids
        if ids.ndim != 1 or (ids.size > 1 and np.any(np.diff(ids) <= 0)):
            raise ValueError("catalog sku ids must be unique and sorted ascending")
        if ids.size and ids[0] < 0:
            raise ValueError("sku ids must be non-negative")
        if self.indptr.shape[0] != self.counts.shape[0] + 1 or self.indptr[0] != 0:
            raise ValueError("indptr must have one entry more than counts and start at 0")
        if self.indptr[-1] != self.indices.shape[0]:
            raise ValueError("indptr does not match indices length")
        if np.any(np.diff(self.indptr) <= 0):
            raise ValueError("every order type needs at least one sku")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= ids.size):
            raise ValueError("order references a sku outside the catalog")
        if np.any(self.counts < 0):
            raise ValueError("order counts must be non-negative")

    # construction -----------------------------------------------------------

    @classmethod
    def from_orders(cls, orders, catalog: Iterable[int] | None = None, skus=None) -> OrderBook:
        """Build from ``{skus: count}`` or an iterable of ``(skus, count)`` pairs.

        Duplicate sku-sets are merged by summing counts. The catalog defaults to
        the union of all referenced skus.
        """
        items = orders.items() if isinstance(orders, Mapping) else orders
        merged: dict[tuple[int, ...], int] = {}
        for members, count in items:
            key = tuple(sorted({int(s) for s in members}))
            if not key:
                raise ValueError("order type must contain at least one sku")
            if count < 0:
                raise ValueError(f"order count must be >= 0, got {count}")
            merged[key] = merged.get(key, 0) + int(count)
        referenced = {s for key in merged for s in key}
        if catalog is None:
            cat = np.array(sorted(referenced), dtype=np.int64)
        else:
            cat = np.unique(np.asarray(list(catalog), dtype=np.int64))
            missing = referenced.difference(cat.tolist())
            if missing:
                raise ValueError(f"orders reference skus not in catalog: {sorted(missing)[:5]}")
        keys = sorted(merged)
        lengths = np.array([len(k) for k in keys], dtype=np.int64)
        indptr = np.concatenate(([0], np.cumsum(lengths)))
        flat = np.fromiter((s for k in keys for s in k), dtype=np.int64, count=int(lengths.sum()))
        return cls(
            sku_ids=cat,
            indptr=indptr,
            indices=np.searchsorted(cat, flat),
            counts=np.array([merged[k] for k in keys], dtype=np.int64),
            skus=skus,
        )

    @classmethod
    def from_csr(cls, sku_ids, indptr, members, counts, dedupe: bool = True) -> OrderBook:
        """Build from CSR rows of sku *ids*. Rows are deduplicated as sets."""
        sku_ids = np.asarray(sku_ids, dtype=np.int64)
        indptr = np.asarray(indptr, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        pos = np.searchsorted(sku_ids, members)
        if pos.size and (pos.max() >= sku_ids.size or np.any(sku_ids[pos] != members)):
            raise ValueError("orders reference skus not in catalog")
        rows = np.repeat(np.arange(counts.size), np.diff(indptr))
        order = np.lexsort((pos, rows))
        pos, rows = pos[order], rows[order]
        keep = np.ones(pos.size, dtype=bool)
        keep[1:] = (pos[1:] != pos[:-1]) | (rows[1:] != rows[:-1])
        pos, rows = pos[keep], rows[keep]
        indptr = np.concatenate(([0], np.cumsum(np.bincount(rows, minlength=counts.size))))
        if not dedupe:
            return cls(sku_ids, indptr, pos, counts)
        first: dict[bytes, int] = {}
        target = np.empty(counts.size, dtype=np.int64)
        for o in range(counts.size):
            key = pos[indptr[o]:indptr[o + 1]].tobytes()
            target[o] = first.setdefault(key, len(first))
        if len(first) == counts.size:
            return cls(sku_ids, indptr, pos, counts)
        reps = np.unique(target, return_index=True)[1]
        new_counts = np.bincount(target, weights=counts, minlength=len(first))
        lengths = np.diff(indptr)[reps]
        new_indptr = np.concatenate(([0], np.cumsum(lengths)))
        starts = indptr[reps]
        idx = np.repeat(starts - new_indptr[:-1], lengths) + np.arange(new_indptr[-1])
        return cls(sku_ids, new_indptr, pos[idx], np.rint(new_counts).astype(np.int64))

    # views -------------------------------------------------------------------

    @property
    def n_skus(self) -> int:
        return int(self.sku_ids.shape[0])

    @property
    def n_types(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total_orders(self) -> int:
        return int(self.counts.sum())

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def positions(self, ids) -> np.ndarray:
        ids = np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)
        pos = np.searchsorted(self.sku_ids, ids)
        if pos.size and (pos.max() >= self.n_skus or np.any(self.sku_ids[pos] != ids)):
            raise KeyError("unknown sku id in selection")
        return pos

    def mask(self, ids) -> np.ndarray:
        m = np.zeros(self.n_skus, dtype=np.bool_)
        m[self.positions(ids)] = True
        return m

    def frequencies(self) -> np.ndarray:
        """Orders containing each catalog sku (``f_i``), aligned with ``sku_ids``."""
        w = np.repeat(self.counts, self.sizes)
        return np.bincount(self.indices, weights=w, minlength=self.n_skus).round().astype(np.int64)

    def singleton_counts(self) -> np.ndarray:
        out = np.zeros(self.n_skus, dtype=np.int64)
        single = self.sizes == 1
        np.add.at(out, self.indices[self.indptr[:-1][single]], self.counts[single])
        return out

    @cached_property
    def sku_incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSC view: ``(sku_indptr, order_ids)`` listing the orders of each sku."""
        rows = np.repeat(np.arange(self.n_types, dtype=np.int64), self.sizes)
        order = np.argsort(self.indices, kind="stable")
        sku_indptr = np.concatenate(([0], np.cumsum(np.bincount(self.indices, minlength=self.n_skus))))
        return sku_indptr.astype(np.int64), rows[order]

    def members(self, o: int) -> tuple[int, ...]:
        return tuple(self.sku_ids[self.indices[self.indptr[o]:self.indptr[o + 1]]].tolist())

    def order_types(self) -> list[OrderType]:
        return [OrderType(frozenset(self.members(o)), int(self.counts[o])) for o in range(self.n_types)]

    def as_dict(self) -> dict[frozenset[int], int]:
        return {frozenset(self.members(o)): int(self.counts[o]) for o in range(self.n_types)}

    def __eq__(self, other):
        if not isinstance(other, OrderBook):
            return NotImplemented
        return np.array_equal(self.sku_ids, other.sku_ids) and self.as_dict() == other.as_dict()

    def merge(self, other: OrderBook) -> OrderBook:
        """Sum two books over the union catalog."""
        cat = np.union1d(self.sku_ids, other.sku_ids)
        pairs = [(self.members(o), int(self.counts[o])) for o in range(self.n_types)]
        pairs += [(other.members(o), int(other.counts[o])) for o in range(other.n_types)]
        return OrderBook.from_orders(pairs, catalog=cat.tolist())


@dataclass(frozen=True)
class Assortment:
    selected: frozenset[int]
    cap: int

    def __post_init__(self):
        object.__setattr__(self, "selected", frozenset(int(s) for s in self.selected))
        if self.cap < 0:
            raise ValueError("assortment cap must be non-negative")
        if len(self.selected) > self.cap:
            raise ValueError(f"assortment has {len(self.selected)} skus, cap is {self.cap}")

    def __len__(self):
        return len(self.selected)

    def __contains__(self, sku):
        return sku in self.selected

    def ids(self) -> list[int]:
        return sorted(self.selected)


@dataclass(frozen=True)
class NetworkConfig:
    """One RDC (location 0) and its FDCs.

    ``transfer_cost`` is a per-FDC unit cost (or one float for all FDCs);
    ``transfer_cost_override`` maps ``(sku_id, fdc_id)`` to a specific cost.
    ``transfer_cap`` limits total units shipped to each FDC per period.
    """

    fdc_ids: tuple[int, ...]
    lead_time: int = 0
    spillover_cost: float = 1.0
    lost_sale_cost: float = 10.0
    transfer_cost: Mapping[int, float] | float = 0.0
    transfer_cap: int | None = None
    transfer_cost_override: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        fdcs = tuple(sorted(int(f) for f in self.fdc_ids))
        if not fdcs:
            raise ValueError("network needs at least one FDC")
        if len(set(fdcs)) != len(fdcs):
            raise ValueError("FDC ids must be unique")
        if RDC in fdcs:
            raise ValueError("location 0 is reserved for the RDC")
        object.__setattr__(self, "fdc_ids", fdcs)
        if isinstance(self.transfer_cost, Mapping):
            costs = {int(k): float(v) for k, v in self.transfer_cost.items()}
            unknown = set(costs) - set(fdcs)
            if unknown:
                raise ValueError(f"transfer cost given for unknown FDCs {sorted(unknown)}")
            costs = {f: costs.get(f, 0.0) for f in fdcs}
        else:
            costs = {f: float(self.transfer_cost) for f in fdcs}
        object.__setattr__(self, "transfer_cost", costs)
        object.__setattr__(
            self,
            "transfer_cost_override",
            {(int(i), int(j)): float(v) for (i, j), v in dict(self.transfer_cost_override).items()},
        )
        if self.lead_time < 0:
            raise ValueError("lead time must be non-negative")
        if self.spillover_cost < 0 or self.lost_sale_cost < 0:
            raise ValueError("costs must be non-negative")
        if any(v < 0 for v in costs.values()) or any(v < 0 for v in self.transfer_cost_override.values()):
            raise ValueError("transfer costs must be non-negative")
        if self.transfer_cap is not None and self.transfer_cap < 0:
            raise ValueError("transfer cap must be non-negative")

    @property
    def n_fdcs(self) -> int:
        return len(self.fdc_ids)

    @property
    def locations(self) -> tuple[int, ...]:
        return (RDC, *self.fdc_ids)

    def column(self, location: int) -> int:
        try:
            return self.locations.index(int(location))
        except ValueError:
            raise KeyError(f"unknown location {location}") from None

    def transfer_cost_matrix(self, sku_ids) -> np.ndarray:
        """Unit transfer cost per (sku, fdc), shape ``(n_skus, n_fdcs)``."""
        sku_ids = np.asarray(sku_ids)
        r = np.tile([self.transfer_cost[f] for f in self.fdc_ids], (sku_ids.shape[0], 1)).astype(float)
        if self.transfer_cost_override:
            where = {int(s): i for i, s in enumerate(sku_ids.tolist())}
            for (sku, fdc), v in self.transfer_cost_override.items():
                if sku in where and fdc in self.transfer_cost:
                    r[where[sku], self.fdc_ids.index(fdc)] = v
        return r


@dataclass(frozen=True, eq=False)
class InventoryState:
    """On-hand stock ``(n_skus, 1 + n_fdcs)`` and the in-transit pipeline.

    ``pipeline`` has shape ``(lead_time, n_skus, n_fdcs)``, oldest shipment
    first, so ``pipeline[0]`` lands at the FDCs this period.
    """

    sku_ids: np.ndarray
    fdc_ids: tuple[int, ...]
    on_hand: np.ndarray
    pipeline: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sku_ids", _frozen(self.sku_ids))
        object.__setattr__(self, "fdc_ids", tuple(int(f) for f in self.fdc_ids))
        object.__setattr__(self, "on_hand", _frozen(self.on_hand))
        pipe = np.asarray(self.pipeline, dtype=np.int64)
        if pipe.size == 0:
            pipe = pipe.reshape(pipe.shape[0] if pipe.ndim == 3 else 0, self.sku_ids.shape[0], len(self.fdc_ids))
        object.__setattr__(self, "pipeline", _frozen(pipe))

    @classmethod
    def empty(cls, sku_ids, fdc_ids, lead_time: int) -> InventoryState:
        n, J = len(sku_ids), len(fdc_ids)
        return cls(np.asarray(sku_ids), tuple(fdc_ids), np.zeros((n, J + 1), np.int64), np.zeros((lead_time, n, J), np.int64))

    @property
    def lead_time(self) -> int:
        return int(self.pipeline.shape[0])

    def positions(self) -> np.ndarray:
        """FDC inventory positions (on hand plus in transit), ``(n_skus, n_fdcs)``."""
        return self.on_hand[:, 1:] + self.pipeline.sum(axis=0)

    def with_shipment(self, u) -> InventoryState:
        """Append shipment ``u`` to the pipeline (dropping nothing). Testing helper."""
        pipe = np.concatenate([self.pipeline, np.asarray(u, dtype=np.int64)[None]], axis=0)
        return InventoryState(self.sku_ids, self.fdc_ids, self.on_hand, pipe)


def inventory_position(state: InventoryState, sku: int, fdc: int) -> int:
    """On hand plus in transit for one (sku, fdc) pair."""
    if int(fdc) not in state.fdc_ids:
        raise KeyError(f"unknown FDC {fdc}")
    hits = np.flatnonzero(state.sku_ids == int(sku))
    if hits.size == 0:
        raise KeyError(f"unknown sku {sku}")
    i, j = int(hits[0]), state.fdc_ids.index(int(fdc))
    return int(state.on_hand[i, 1 + j] + state.pipeline[:, i, j].sum())


@dataclass(frozen=True, eq=False)
class DemandPanel:
    """Demand ``(T, n_skus, n_locations)`` and RDC replenishment ``(T, n_skus)``."""

    sku_ids: np.ndarray
    location_ids: tuple[int, ...]
    demand: np.ndarray
    replenishment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sku_ids", _frozen(self.sku_ids))
        object.__setattr__(self, "location_ids", tuple(int(x) for x in self.location_ids))
        object.__setattr__(self, "demand", _frozen(self.demand))
        object.__setattr__(self, "replenishment", _frozen(self.replenishment))
        if self.demand.ndim != 3 or self.replenishment.ndim != 2:
            raise ValueError("demand must be (T, skus, locations) and replenishment (T, skus)")
        if self.demand.shape[0] < 1:
            raise ValueError("panel horizon must be positive")

    @property
    def horizon(self) -> int:
        return int(self.demand.shape[0])

    def window(self, start: int, stop: int) -> DemandPanel:
        return DemandPanel(self.sku_ids, self.location_ids, self.demand[start:stop], self.replenishment[start:stop])


def validate_instance(network: NetworkConfig, state: InventoryState, panel: DemandPanel) -> list[str]:
    """List every shape or sign problem; an empty list means the instance is usable."""
    problems: list[str] = []
    n = state.sku_ids.shape[0]
    if tuple(state.fdc_ids) != network.fdc_ids:
        problems.append(f"state FDCs {state.fdc_ids} differ from network FDCs {network.fdc_ids}")
    if state.on_hand.shape != (n, len(state.fdc_ids) + 1):
        problems.append(f"on_hand shape {state.on_hand.shape} != {(n, len(state.fdc_ids) + 1)}")
    if state.pipeline.shape[0] != network.lead_time:
        problems.append(f"pipeline holds {state.pipeline.shape[0]} shipments, lead time is {network.lead_time}")
    elif state.pipeline.shape[1:] != (n, len(state.fdc_ids)):
        problems.append(f"pipeline shipment shape {state.pipeline.shape[1:]} != {(n, len(state.fdc_ids))}")
    if (state.on_hand < 0).any():
        problems.append("negative on-hand inventory")
    if (state.pipeline < 0).any():
        problems.append("negative in-transit quantity")
    if panel.location_ids[:1] != (RDC,):
        problems.append("demand panel must list the RDC (location 0) first")
    unknown = [x for x in panel.location_ids[1:] if x not in network.fdc_ids]
    for x in unknown:
        problems.append(f"demand references unknown FDC {x}")
    known = [x for x in panel.location_ids[1:] if x in network.fdc_ids]
    if not unknown and tuple(known) != network.fdc_ids:
        problems.append(f"demand FDC columns {tuple(known)} do not match network {network.fdc_ids}")
    if not np.array_equal(panel.sku_ids, state.sku_ids):
        problems.append("demand panel skus differ from state skus")
    T = panel.demand.shape[0]
    if panel.demand.shape[1:] != (panel.sku_ids.shape[0], len(panel.location_ids)):
        problems.append(f"demand shape {panel.demand.shape} inconsistent with panel labels")
    if panel.replenishment.shape != (T, panel.sku_ids.shape[0]):
        problems.append(f"replenishment shape {panel.replenishment.shape} != {(T, panel.sku_ids.shape[0])}")
    if (panel.demand < 0).any():
        problems.append("negative demand")
    if (panel.replenishment < 0).any():
        problems.append("negative replenishment")
    return problems
