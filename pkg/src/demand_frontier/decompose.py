"""Additive seasonal-trend decomposition with Loess smoothing.

Classic STL: an inner loop of cycle-subseries smoothing, low-pass
filtering and trend smoothing, wrapped in an outer loop that derives
bisquare robustness weights from the remainder.  Two seasonal cycles
(daily and weekly) are separated sequentially, shortest period first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from demand_frontier import _kernels

__all__ = [
    "DecomposedSeries",
    "StlConfig",
    "loess",
    "stl",
    "multi_stl",
    "project_components",
]


@dataclass(frozen=True)
class DecomposedSeries:
    """Additive split of a series into seasonal, trend and remainder."""

    seasonal: np.ndarray
    trend: np.ndarray
    remainder: np.ndarray
    periods: tuple[int, ...]

    def __post_init__(self):
        n = self.seasonal.shape[0]
        if self.trend.shape[0] != n or self.remainder.shape[0] != n:
            raise ValueError("component lengths differ")

    def reconstruct(self) -> np.ndarray:
        return self.seasonal + self.trend + self.remainder


def _next_odd(x: float) -> int:
    k = int(math.ceil(x))
    return k if k % 2 == 1 else k + 1


def _default_trend_span(period: int, seasonal_span: int) -> int:
    # STL authors' guidance: smallest odd >= 1.5*period / (1 - 1.5/seasonal_span)
    return _next_odd(1.5 * period / (1.0 - 1.5 / seasonal_span))


@dataclass(frozen=True)
class StlConfig:
    """Smoothing parameters for one STL pass."""

    period: int
    seasonal_span: int = 25
    trend_span: int | None = None
    low_pass_span: int | None = None
    seasonal_degree: int = 1
    trend_degree: int = 1
    low_pass_degree: int = 1
    inner_iterations: int = 2
    outer_iterations: int = 1

    def __post_init__(self):
        if self.period < 2:
            raise ValueError(f"period must be >= 2, got {self.period}")
        for name in ("seasonal_span", "trend_span", "low_pass_span"):
            v = getattr(self, name)
            if v is None:
                continue
            if v < 3 or v % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 3, got {v}")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")
        if self.outer_iterations < 0:
            raise ValueError("outer_iterations must be >= 0")

    def resolved_trend_span(self) -> int:
        if self.trend_span is not None:
            return self.trend_span
        return _default_trend_span(self.period, self.seasonal_span)

    def resolved_low_pass_span(self) -> int:
        if self.low_pass_span is not None:
            return self.low_pass_span
        return _next_odd(self.period)


def loess(
    xs: np.ndarray,
    ys: np.ndarray,
    span_fraction: float,
    degree: int = 1,
    robustness_weights: np.ndarray | None = None,
) -> np.ndarray:
    """Locally weighted polynomial fit at every x, tricube weights.

    ``span_fraction`` is the fraction of points in each neighborhood;
    robustness weights multiply the tricube weights.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("xs and ys must be 1-d and the same length")
    if xs.shape[0] >= 2 and not np.all(np.diff(xs) > 0):
        raise ValueError("xs must be strictly increasing")
    if not 0.0 < span_fraction <= 1.0:
        raise ValueError(f"span_fraction must be in (0, 1], got {span_fraction}")
    if robustness_weights is None:
        robustness_weights = np.ones_like(ys)
    else:
        robustness_weights = np.asarray(robustness_weights, dtype=np.float64)
        if robustness_weights.shape != ys.shape:
            raise ValueError("robustness_weights length mismatch")
    q = max(1, int(math.ceil(span_fraction * xs.shape[0])))
    return _kernels.loess_fit(xs, ys, robustness_weights, q, degree, xs)


def _cycle_subseries_smooth(detrended, period, span, degree, rho):
    """Loess-smooth each cycle subseries, extended one cycle at both ends."""
    n = detrended.shape[0]
    out = np.empty(n + 2 * period)
    for phase in range(period):
        sub = detrended[phase::period]
        sub_rho = rho[phase::period]
        m = sub.shape[0]
        xs = np.arange(m, dtype=np.float64)
        xeval = np.arange(-1, m + 1, dtype=np.float64)
        fitted = _kernels.loess_fit(xs, sub, sub_rho, span, degree, xeval)
        out[phase::period] = fitted
    return out


def _moving_average(x, k):
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[k:] - c[:-k]) / k


def _low_pass(cycle, period, span, degree):
    sm = _moving_average(cycle, period)
    sm = _moving_average(sm, period)
    sm = _moving_average(sm, 3)
    n = sm.shape[0]
    xs = np.arange(n, dtype=np.float64)
    return _kernels.loess_fit(xs, sm, np.ones(n), span, degree, xs)


def _bisquare(residual):
    h = 6.0 * np.median(np.abs(residual))
    if h <= 0.0:
        return np.ones_like(residual)
    r = np.clip(np.abs(residual) / h, 0.0, 1.0)
    return (1.0 - r * r) ** 2


def stl(series: np.ndarray, config: StlConfig) -> DecomposedSeries:
    """Single-period STL decomposition, exact additive reconstruction."""
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("series must be 1-d")
    n = y.shape[0]
    p = config.period
    if n < 2 * p:
        raise ValueError(f"series length {n} is below 2 x period = {2 * p}")
    if not np.isfinite(y).all():
        raise ValueError("series contains non-finite values")

    trend_span = config.resolved_trend_span()
    lp_span = config.resolved_low_pass_span()
    xs = np.arange(n, dtype=np.float64)

    rho = np.ones(n)
    seasonal = np.zeros(n)
    trend = np.zeros(n)
    for outer in range(config.outer_iterations + 1):
        for _ in range(config.inner_iterations):
            detrended = y - trend
            cycle = _cycle_subseries_smooth(
                detrended, p, config.seasonal_span, config.seasonal_degree, rho
            )
            lp = _low_pass(cycle, p, lp_span, config.low_pass_degree)
            seasonal = cycle[p : p + n] - lp
            trend = _kernels.loess_fit(
                xs, y - seasonal, rho, trend_span, config.trend_degree, xs
            )
        if outer < config.outer_iterations:
            rho = _bisquare(y - seasonal - trend)
    remainder = y - seasonal - trend
    return DecomposedSeries(seasonal, trend, remainder, (p,))


_DEFAULT_SEASONAL_SPANS = {24: 25, 168: 169}


def multi_stl(
    series: np.ndarray,
    periods: tuple[int, ...] = (24, 168),
    configs: dict[int, StlConfig] | None = None,
) -> DecomposedSeries:
    """Sequential STL over several periods, shortest first.

    Each pass removes its seasonal component before the next; the combined
    seasonal is the sum and the trend comes from the final pass.
    """
    if len(periods) == 0:
        raise ValueError("periods must be non-empty")
    periods = tuple(sorted(periods))
    y = np.asarray(series, dtype=np.float64)
    if y.shape[0] < 2 * periods[-1]:
        raise ValueError(
            f"series length {y.shape[0]} is below 2 x max period = {2 * periods[-1]}"
        )
    seasonal = np.zeros_like(y)
    current = y
    result = None
    for p in periods:
        if configs is not None and p in configs:
            cfg = configs[p]
        else:
            cfg = StlConfig(period=p, seasonal_span=_DEFAULT_SEASONAL_SPANS.get(p, 25))
        result = stl(current, cfg)
        seasonal = seasonal + result.seasonal
        current = current - result.seasonal
    trend = result.trend
    remainder = y - seasonal - trend
    return DecomposedSeries(seasonal, trend, remainder, periods)


def project_components(
    decomposed: DecomposedSeries, horizon: int
) -> tuple[np.ndarray, np.ndarray]:
    """Project seasonal and trend forward.

    The seasonal forecast repeats the last full combined cycle (the least
    common multiple of the periods); the trend is held at its last value.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    cycle_len = math.lcm(*decomposed.periods)
    n = decomposed.seasonal.shape[0]
    if n < cycle_len:
        raise ValueError("decomposition shorter than one combined cycle")
    last_cycle = decomposed.seasonal[n - cycle_len :]
    reps = int(math.ceil(horizon / cycle_len))
    seasonal_fc = np.tile(last_cycle, reps)[:horizon]
    trend_fc = np.full(horizon, decomposed.trend[-1])
    return seasonal_fc, trend_fc
