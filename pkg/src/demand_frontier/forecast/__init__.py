"""Density forecasting of deseasonalized demand.

ARMA-GARCH with skew-GED innovations as the primary model, unconditional
kernel density estimation as the fallback, a chi-squared fit gate deciding
between them per lead time, and composition with projected seasonal/trend
components.
"""

from demand_frontier.forecast.arma_garch import (
    ArmaGarchError,
    ArmaGarchModel,
    fit_arma_garch,
    forecast_density,
    gof_pvalue,
    select_arma_order,
)
from demand_frontier.forecast.kde import KdeModel, fit_kde, kde_forecast
from demand_frontier.forecast.selection import (
    DensityForecast,
    ModelSelector,
    SelectedModel,
    compose_forecast,
    select_model,
    tune_threshold,
)
from demand_frontier.forecast.sged import Sged, SgedParams

__all__ = [
    "ArmaGarchError",
    "ArmaGarchModel",
    "DensityForecast",
    "KdeModel",
    "ModelSelector",
    "SelectedModel",
    "Sged",
    "SgedParams",
    "compose_forecast",
    "fit_arma_garch",
    "fit_kde",
    "forecast_density",
    "gof_pvalue",
    "kde_forecast",
    "select_arma_order",
    "select_model",
    "tune_threshold",
]
