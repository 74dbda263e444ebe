"""Choice between ARMA-GARCH and KDE, and threshold tuning.

The gate is a pure decision in (p-value, threshold): the conditional model
is kept when its fit-test p-value reaches the threshold for that lead
time, otherwise the unconditional KDE takes over.  Thresholds are tuned
per lead time by scanning a grid and keeping the value with the smallest
validation CRPS.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from demand_frontier import decompose, score
from demand_frontier.forecast.arma_garch import (
    ArmaGarchError,
    ArmaGarchModel,
    fit_arma_garch,
    forecast_density,
    gof_pvalue,
    select_arma_order,
)
from demand_frontier.forecast.base import DensityForecast
from demand_frontier.forecast.kde import KdeModel, fit_kde, kde_forecast

__all__ = [
    "DensityForecast",
    "ModelSelector",
    "SelectedModel",
    "compose_forecast",
    "gate_decision",
    "select_model",
    "tune_threshold",
]

logger = logging.getLogger(__name__)

DELTA_GRID = tuple(round(0.01 * i, 2) for i in range(21))


@dataclass(frozen=True)
class ModelSelector:
    """Per-lead-time gate thresholds plus fit-test configuration."""

    thresholds: Mapping[int, float] | float = 0.05
    gof_bins: int = 20
    max_p: int = 3
    max_q: int = 3

    def __post_init__(self):
        for value in self._all_thresholds():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"threshold {value} outside [0, 1]")
        if self.gof_bins < 2:
            raise ValueError("gof_bins must be >= 2")

    def _all_thresholds(self):
        if isinstance(self.thresholds, Mapping):
            return list(self.thresholds.values())
        return [self.thresholds]

    def threshold_for(self, lead_time: int) -> float:
        if isinstance(self.thresholds, Mapping):
            try:
                return float(self.thresholds[lead_time])
            except KeyError:
                raise KeyError(f"no threshold configured for lead time {lead_time}")
        return float(self.thresholds)


def gate_decision(p_value: float | None, delta: float) -> str:
    """'arma_garch' iff the fit test reached the threshold."""
    if p_value is None or not np.isfinite(p_value):
        return "kde"
    return "arma_garch" if p_value >= delta else "kde"


@dataclass(frozen=True)
class SelectedModel:
    """Outcome of the gate for one series and lead time."""

    kind: str
    model: ArmaGarchModel | KdeModel
    p_value: float | None
    lead_time: int
    arma_garch_error: str | None = None

    def forecast(self, horizon: int, n_paths: int = 1000, seed=None):
        return self.model.forecast(horizon, n_paths=n_paths, seed=seed)

    def summary(self) -> dict:
        out = self.model.summary()
        out["p_value"] = self.p_value
        out["lead_time"] = self.lead_time
        if self.arma_garch_error:
            out["arma_garch_error"] = self.arma_garch_error
        return out


@dataclass(frozen=True)
class GateCandidates:
    """Both candidate models fitted once, reusable across lead times."""

    arma_garch: ArmaGarchModel | None
    p_value: float | None
    kde: KdeModel | None
    arma_garch_error: str | None = None
    kde_error: str | None = None

    def choose(self, selector: ModelSelector, lead_time: int) -> SelectedModel:
        delta = selector.threshold_for(lead_time)
        decision = gate_decision(self.p_value, delta)
        if decision == "arma_garch" and self.arma_garch is not None:
            return SelectedModel("arma_garch", self.arma_garch, self.p_value, lead_time)
        if self.kde is None:
            raise ArmaGarchError(
                "no usable forecasting model: "
                f"arma_garch: {self.arma_garch_error}; kde: {self.kde_error}"
            )
        return SelectedModel(
            "kde", self.kde, self.p_value, lead_time, self.arma_garch_error
        )


def fit_gate_candidates(series: np.ndarray, selector: ModelSelector) -> GateCandidates:
    """Fit the conditional model and the KDE once for a training series."""
    series = np.asarray(series, dtype=np.float64)
    ag = None
    pval = None
    ag_err = None
    try:
        p, q = select_arma_order(series, selector.max_p, selector.max_q)
        ag = fit_arma_garch(series, p, q)
        pval = gof_pvalue(ag, series, n_bins=selector.gof_bins)
    except (ArmaGarchError, ValueError) as exc:
        ag = None
        pval = None
        ag_err = str(exc)
        logger.debug("arma-garch candidate failed: %s", exc)
    kde = None
    kde_err = None
    try:
        kde = fit_kde(series)
    except ValueError as exc:
        kde_err = str(exc)
        logger.debug("kde candidate failed: %s", exc)
    return GateCandidates(ag, pval, kde, ag_err, kde_err)


def select_model(
    series: np.ndarray,
    selector: ModelSelector,
    lead_time: int,
) -> SelectedModel:
    """Gate for a single lead time: conditional model when it fits, else KDE."""
    return fit_gate_candidates(series, selector).choose(selector, lead_time)


def compose_forecast(
    remainder_forecast: DensityForecast,
    seasonal_projection: np.ndarray,
    trend_projection: np.ndarray,
) -> DensityForecast:
    """Shift a remainder ensemble by the projected seasonal plus trend."""
    seasonal_projection = np.asarray(seasonal_projection, dtype=np.float64)
    trend_projection = np.asarray(trend_projection, dtype=np.float64)
    if seasonal_projection.shape != trend_projection.shape:
        raise ValueError("seasonal and trend projections differ in length")
    h = remainder_forecast.lead_time
    if h > seasonal_projection.shape[0]:
        raise ValueError(
            f"projection length {seasonal_projection.shape[0]} does not cover lead {h}"
        )
    shift = float(seasonal_projection[h - 1] + trend_projection[h - 1])
    return remainder_forecast.shifted(shift)


@dataclass(frozen=True)
class ThresholdTuneConfig:
    train_length: int = 2016
    stride: int = 509
    max_windows: int = 3
    n_paths: int = 1000
    periods: tuple[int, ...] = (24, 168)
    gof_bins: int = 20
    max_p: int = 3
    max_q: int = 3
    seed: int = 0


def tune_threshold(
    panel_values: np.ndarray,
    aggregations,
    lead_times,
    grid=DELTA_GRID,
    config: ThresholdTuneConfig = ThresholdTuneConfig(),
) -> dict[int, float]:
    """Pick the gate threshold per lead time by validation CRPS.

    Candidate models and their p-values do not depend on the threshold, so
    each (aggregation, window) pair is fitted once; every grid value then
    reuses the same per-lead CRPS of both candidates, which is exactly the
    score the gated pipeline would have produced under that threshold.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("threshold grid is empty")
    lead_times = sorted(set(int(h) for h in lead_times))
    if not lead_times:
        raise ValueError("lead_times is empty")
    values = np.asarray(panel_values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    aggregations = [np.asarray(a, dtype=np.float64) for a in aggregations]
    if not aggregations:
        raise ValueError("no candidate aggregations supplied")

    max_h = max(lead_times)
    t_total = values.shape[0]
    if t_total < config.train_length + max_h:
        raise ValueError(
            f"validation span of {t_total} hours cannot host train length "
            f"{config.train_length} plus lead {max_h}"
        )
    starts = list(range(0, t_total - config.train_length - max_h + 1, config.stride))
    starts = starts[: config.max_windows]

    selector = ModelSelector(0.0, config.gof_bins, config.max_p, config.max_q)
    cases: list[dict] = []
    for a_idx, weights in enumerate(aggregations):
        series = values @ weights
        for w_idx, s in enumerate(starts):
            train = series[s : s + config.train_length]
            future = series[s + config.train_length : s + config.train_length + max_h]
            decomp = decompose.multi_stl(train, config.periods)
            s_proj, t_proj = decompose.project_components(decomp, max_h)
            cand = fit_gate_candidates(decomp.remainder, selector)
            seed = (config.seed, a_idx, w_idx)
            case = {"p": cand.p_value, "crps": {}}
            if cand.arma_garch is not None:
                fcs = forecast_density(
                    cand.arma_garch, max_h, n_paths=config.n_paths,
                    seed=np.random.SeedSequence(seed + (0,)),
                )
                for h in lead_times:
                    comp = compose_forecast(fcs[h - 1], s_proj, t_proj)
                    case["crps"][("arma_garch", h)] = score.crps_ensemble(
                        comp.samples, future[h - 1]
                    )
            if cand.kde is not None:
                fcs = kde_forecast(
                    cand.kde, max_h, n_paths=config.n_paths,
                    seed=np.random.SeedSequence(seed + (1,)),
                )
                for h in lead_times:
                    comp = compose_forecast(fcs[h - 1], s_proj, t_proj)
                    case["crps"][("kde", h)] = score.crps_ensemble(
                        comp.samples, future[h - 1]
                    )
            cases.append(case)

    result: dict[int, float] = {}
    for h in lead_times:
        best_delta = None
        best_crps = math.inf
        for delta in grid:
            total = 0.0
            count = 0
            for case in cases:
                kind = gate_decision(case["p"], delta)
                key = (kind, h)
                if key not in case["crps"]:
                    # gate picked a model that failed to fit; fall through
                    other = ("kde", h) if kind == "arma_garch" else ("arma_garch", h)
                    if other not in case["crps"]:
                        continue
                    key = other
                total += case["crps"][key]
                count += 1
            if count == 0:
                continue
            mean_crps = total / count
            if mean_crps < best_crps:
                best_crps = mean_crps
                best_delta = delta
        if best_delta is None:
            raise ArmaGarchError(f"threshold tuning failed for lead time {h}")
        result[h] = float(best_delta)
    return result
