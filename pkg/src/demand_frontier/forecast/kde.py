"""Unconditional kernel density estimation of the remainder.

Gaussian kernel with the Silverman reference bandwidth
h = 0.9 * min(std, IQR/1.34) * W^(-1/5); forecasting draws from the
mixture, and because the estimate is unconditional the same ensemble
serves every lead time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from demand_frontier.forecast.base import DensityForecast

__all__ = ["KdeModel", "fit_kde", "kde_forecast"]


@dataclass(frozen=True)
class KdeModel:
    observations: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if self.observations.shape[0] < 2:
            raise ValueError("KDE window needs at least 2 observations")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")

    def density(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        z = (x[:, None] - self.observations[None, :]) / self.bandwidth
        k = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
        return k.mean(axis=1) / self.bandwidth

    def forecast(self, horizon: int, n_paths: int = 1000, seed=None):
        return kde_forecast(self, horizon, n_paths=n_paths, seed=seed)

    def summary(self) -> dict:
        return {
            "kind": "kde",
            "window": int(self.observations.shape[0]),
            "bandwidth": self.bandwidth,
        }


def fit_kde(window: np.ndarray) -> KdeModel:
    """Silverman-bandwidth Gaussian KDE over the observation window."""
    obs = np.asarray(window, dtype=np.float64)
    if obs.ndim != 1:
        raise ValueError("window must be 1-d")
    w = obs.shape[0]
    if w < 2:
        raise ValueError(f"KDE window needs at least 2 observations, got {w}")
    if not np.isfinite(obs).all():
        raise ValueError("window contains non-finite values")
    std = float(obs.std(ddof=1))
    if std == 0.0:
        raise ValueError("KDE window is constant")
    q75, q25 = np.percentile(obs, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    h = 0.9 * spread * w ** (-0.2)
    return KdeModel(observations=obs.copy(), bandwidth=h)


def kde_forecast(
    model: KdeModel,
    horizon: int,
    n_paths: int = 1000,
    seed=None,
) -> list[DensityForecast]:
    """One mixture draw reused at every lead time."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, model.observations.shape[0], size=n_paths)
    samples = model.observations[idx] + model.bandwidth * rng.standard_normal(n_paths)
    return [DensityForecast(h, samples) for h in range(1, horizon + 1)]
