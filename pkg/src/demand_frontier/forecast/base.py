"""Shared forecast containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DensityForecast"]


@dataclass(frozen=True)
class DensityForecast:
    """Predictive distribution at one lead time, as a sample ensemble."""

    lead_time: int
    samples: np.ndarray

    def __post_init__(self):
        if self.lead_time < 1:
            raise ValueError(f"lead_time must be >= 1, got {self.lead_time}")
        if self.samples.size < 1:
            raise ValueError("ensemble is empty")
        if not np.isfinite(self.samples).all():
            raise ValueError("ensemble contains non-finite values")

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    def mean(self) -> float:
        return float(self.samples.mean())

    def median(self) -> float:
        return float(np.median(self.samples))

    def quantiles(self, probs) -> np.ndarray:
        return np.quantile(self.samples, probs)

    def shifted(self, offset: float) -> "DensityForecast":
        return DensityForecast(self.lead_time, self.samples + offset)
