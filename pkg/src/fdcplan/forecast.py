"""Seasonal-trend forecasting with a multiplicative promotion uplift.

An additive Holt-Winters filter supplies the baseline; promotion days are
deflated by a fitted multiplier before smoothing and re-inflated at forecast
time. Dispersion grows as ``residual_sd * sqrt(h)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import kernels

DEFAULT_SMOOTHING = (0.2, 0.05, 0.1)


@dataclass(frozen=True)
class SeriesHistory:
    values: tuple[float, ...]
    promo_flags: tuple[bool, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        flags = self.promo_flags
        flags = (False,) * len(self.values) if flags is None else tuple(bool(f) for f in flags)
        object.__setattr__(self, "promo_flags", flags)
        if len(flags) != len(self.values):
            raise ValueError("promo_flags must match values in length")
        if any(v < 0 for v in self.values):
            raise ValueError("history values must be non-negative")


@dataclass(frozen=True)
class ForecastModel:
    level: float
    trend: float
    season: tuple[float, ...]
    promo_multiplier: float = 1.0
    residual_sd: float = 0.0
    n_obs: int = 0
    warning: str | None = None

    def __post_init__(self):
        if len(self.season) < 1:
            raise ValueError("season needs at least one slot")
        if self.residual_sd < 0 or self.promo_multiplier < 0:
            raise ValueError("residual_sd and promo_multiplier must be non-negative")


@dataclass(frozen=True)
class ForecastResult:
    point: tuple[float, ...]
    sd: tuple[float, ...]


def _promo_multiplier(y, promo):
    """Per-series ratio of promo-day mean to regular-day mean; 1 where undefined."""
    S = y.shape[0]
    mult = np.ones(S)
    degenerate = np.zeros(S, dtype=bool)
    if promo.any() and (~promo).any():
        on = y[:, promo].mean(axis=1)
        off = y[:, ~promo].mean(axis=1)
        degenerate = off <= 0
        mult = np.where(degenerate, 1.0, on / np.where(degenerate, 1.0, off))
    return mult, degenerate


def fit_many(y, period: int, promo=None, smoothing=DEFAULT_SMOOTHING):
    """Fit the filter to every row of ``y`` (series x time).

    Returns ``(level, trend, season, promo_multiplier, residual_sd, degenerate)``
    as arrays; ``season`` is indexed by ``time % period``.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("expected a (series, time) array")
    S, n = y.shape
    if period < 1:
        raise ValueError("season_period must be positive")
    if n < 2 * period:
        raise ValueError(f"history of length {n} is shorter than two seasons ({2 * period})")
    promo = np.zeros(n, dtype=bool) if promo is None else np.asarray(promo, dtype=bool)
    mult, degenerate = _promo_multiplier(y, promo)
    adj = np.where(promo[None, :], y / np.where(mult > 0, mult, 1.0)[:, None], y)

    p = period
    c1 = adj[:, :p].mean(axis=1)
    c2 = adj[:, p:2 * p].mean(axis=1)
    trend0 = (c2 - c1) / p
    level0 = c1 - trend0 * (p + 1) / 2.0
    k = np.arange(2 * p)
    fitted = level0[:, None] + (k + 1)[None, :] * trend0[:, None]
    season0 = (adj[:, :2 * p] - fitted).reshape(S, 2, p).mean(axis=1)
    shift = season0.mean(axis=1)
    season0 = season0 - shift[:, None]
    level0 = level0 + shift

    alpha, beta, gamma = smoothing
    level, trend, season, errors = kernels.hw_filter(adj, p, alpha, beta, gamma, level0, trend0, season0)
    return level, trend, season, mult, errors.std(axis=1), degenerate


def fit_forecaster(history: SeriesHistory, season_period: int, smoothing=DEFAULT_SMOOTHING) -> ForecastModel:
    """Fit level, trend, season, promotion multiplier and residual spread to one series."""
    y = np.asarray(history.values, dtype=float)[None, :]
    level, trend, season, mult, sd, degenerate = fit_many(y, season_period, history.promo_flags, smoothing)
    warning = None
    if degenerate[0]:
        warning = "regular-day mean is zero; promo multiplier set to 1"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    return ForecastModel(
        level=float(level[0]),
        trend=float(trend[0]),
        season=tuple(float(s) for s in season[0]),
        promo_multiplier=float(mult[0]),
        residual_sd=float(sd[0]),
        n_obs=y.shape[1],
        warning=warning,
    )


def _project(level, trend, season, mult, sd, n_obs, q, flags):
    """Vectorized forecast for many fitted series; returns ``(point, sd)`` of shape (S, q)."""
    h = np.arange(1, q + 1)
    p = season.shape[1]
    slots = (n_obs - 1 + h) % p
    point = np.maximum(0.0, level[:, None] + h[None, :] * trend[:, None] + season[:, slots])
    if flags is not None:
        flags = np.asarray(flags, dtype=bool)
        point = np.where(flags[None, :], point * mult[:, None], point)
    return point, sd[:, None] * np.sqrt(h)[None, :]


def forecast(model: ForecastModel, horizon: int, future_promo_flags=None) -> ForecastResult:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if future_promo_flags is not None and len(future_promo_flags) != horizon:
        raise ValueError("future_promo_flags must have one flag per forecast step")
    point, sd = _project(
        np.array([model.level]),
        np.array([model.trend]),
        np.array([model.season]),
        np.array([model.promo_multiplier]),
        np.array([model.residual_sd]),
        model.n_obs,
        horizon,
        future_promo_flags,
    )
    return ForecastResult(tuple(point[0].tolist()), tuple(sd[0].tolist()))


def forecast_order_frequency(
    daily_counts,
    horizon: int,
    sku_ids=None,
    season_period: int = 7,
    promo_flags=None,
    future_promo_flags=None,
    smoothing=DEFAULT_SMOOTHING,
) -> dict[int, float]:
    """Predicted number of orders containing each sku over the next ``horizon`` periods.

    ``daily_counts`` is (periods, skus). Skus with an all-zero history get 0.
    """
    counts = np.asarray(daily_counts, dtype=float)
    sku_ids = np.arange(counts.shape[1]) if sku_ids is None else np.asarray(sku_ids)
    level, trend, season, mult, sd, _ = fit_many(counts.T, season_period, promo_flags, smoothing)
    point, _ = _project(level, trend, season, mult, sd, counts.shape[0], horizon, future_promo_flags)
    total = point.sum(axis=1)
    total[counts.sum(axis=0) == 0] = 0.0
    return {int(s): float(v) for s, v in zip(sku_ids.tolist(), total.tolist())}


# forecasters consumed by the simulator -------------------------------------------


class Forecaster(Protocol):
    def predict(self, t: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
        """Point and sd arrays of shape ``(skus, locations, horizon)`` for periods ``t..t+horizon-1``."""

    def observe(self, t: int, demand: np.ndarray) -> None:
        """Feed realized demand ``(skus, locations)`` of period ``t``."""


class KnownDemandForecaster:
    """Forecasts taken from a known mean (and sd) path.

    ``mean`` is either stationary ``(skus, locations)`` or a ``(T, skus, locations)``
    path; beyond the end of a path the forecast is zero.
    """

    def __init__(self, mean, sd=0.0):
        self.mean = np.asarray(mean, dtype=float)
        self.sd = np.broadcast_to(np.asarray(sd, dtype=float), self.mean.shape)

    def predict(self, t, horizon):
        if self.mean.ndim == 2:
            point = np.repeat(self.mean[:, :, None], horizon, axis=2)
            sd = np.repeat(self.sd[:, :, None], horizon, axis=2)
            return point, sd
        T = self.mean.shape[0]
        idx = np.arange(t, t + horizon)
        valid = idx < T
        idx = np.minimum(idx, T - 1)
        point = np.moveaxis(self.mean[idx], 0, 2) * valid
        sd = np.moveaxis(self.sd[idx], 0, 2) * valid
        return point, sd

    def observe(self, t, demand):
        pass


class PerfectForecaster(KnownDemandForecaster):
    """Hindsight forecaster returning the realized panel demand with zero spread."""

    def __init__(self, panel):
        super().__init__(panel.demand, 0.0)


class HoltWintersForecaster:
    """Online Holt-Winters over every (sku, location) series.

    Fitted once on ``history`` ``(n, skus, locations)`` and then updated one
    observation per period, so the cost per period is O(series).
    """

    def __init__(self, history, season_period=7, promo_flags=None, history_promo=None, smoothing=DEFAULT_SMOOTHING):
        history = np.asarray(history, dtype=float)
        n, self.n_skus, self.n_locs = history.shape
        y = history.reshape(n, -1).T
        level, trend, season, mult, sd, _ = fit_many(y, season_period, history_promo, smoothing)
        self.level, self.trend, self.season, self.mult = level, trend, season, mult
        self.period = season_period
        self.smoothing = smoothing
        self.n_obs = n
        self.sse = sd**2 * n
        self.count = n
        self.promo = None if promo_flags is None else np.asarray(promo_flags, dtype=bool)

    def _flags(self, t, horizon):
        if self.promo is None:
            return None
        idx = np.arange(t, t + horizon)
        return np.where(idx < self.promo.size, self.promo[np.minimum(idx, self.promo.size - 1)], False)

    def predict(self, t, horizon):
        sd = np.sqrt(self.sse / self.count)
        point, spread = _project(self.level, self.trend, self.season, self.mult, sd, self.n_obs, horizon, self._flags(t, horizon))
        shape = (self.n_skus, self.n_locs, horizon)
        return point.reshape(shape), spread.reshape(shape)

    def observe(self, t, demand):
        alpha, beta, gamma = self.smoothing
        obs = np.asarray(demand, dtype=float).reshape(-1)
        flags = self._flags(t, 1)
        if flags is not None and flags[0]:
            obs = obs / np.where(self.mult > 0, self.mult, 1.0)
        slot = self.n_obs % self.period
        s = self.season[:, slot]
        err = obs - (self.level + self.trend + s)
        new_level = alpha * (obs - s) + (1 - alpha) * (self.level + self.trend)
        self.trend = beta * (new_level - self.level) + (1 - beta) * self.trend
        self.season[:, slot] = gamma * (obs - new_level) + (1 - gamma) * s
        self.level = new_level
        self.sse = self.sse + err**2
        self.count += 1
        self.n_obs += 1
