"""Probabilistic and deterministic forecast scores.

CRPS of a sample ensemble uses the energy form
``mean|X - y| - 0.5 * mean|X - X'|`` with the pairwise term computed from
the sorted sample in O(M log M); the closed-form Gaussian CRPS exists as
an independent oracle for tests.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["crps_ensemble", "crps_gaussian", "mae"]

_SQRT_PI = math.sqrt(math.pi)


def crps_ensemble(ensemble: np.ndarray, observation: float) -> float:
    """CRPS of a sample ensemble against a scalar observation, in kW.

    For sorted samples x_(1) <= ... <= x_(M),
    sum_{i,j} |x_i - x_j| = 2 * sum_i (2i - M - 1) x_(i)  (i = 1..M),
    which makes the pairwise term exact without the O(M^2) double sum.
    """
    x = np.asarray(ensemble, dtype=np.float64).ravel()
    m = x.shape[0]
    if m == 0:
        raise ValueError("ensemble is empty")
    if not np.isfinite(x).all() or not np.isfinite(observation):
        raise ValueError("ensemble and observation must be finite")
    term1 = np.abs(x - observation).mean()
    if m == 1:
        return float(term1)
    xs = np.sort(x)
    coeff = 2.0 * np.arange(1, m + 1) - m - 1.0
    pair_sum = 2.0 * np.dot(coeff, xs)
    return float(term1 - pair_sum / (2.0 * m * m))


def crps_gaussian(mu: float, sigma: float, observation: float) -> float:
    """Closed-form CRPS of a N(mu, sigma^2) forecast; the test oracle."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    z = (observation - mu) / sigma
    phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    cdf = 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    return float(sigma * (z * (2.0 * cdf - 1.0) + 2.0 * phi - 1.0 / _SQRT_PI))


def mae(forecasts: np.ndarray, observations: np.ndarray) -> float:
    """Mean absolute error between point forecasts and observations."""
    f = np.asarray(forecasts, dtype=np.float64).ravel()
    y = np.asarray(observations, dtype=np.float64).ravel()
    if f.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: {f.shape[0]} forecasts vs {y.shape[0]} observations")
    if f.shape[0] == 0:
        raise ValueError("mae needs at least one pair")
    return float(np.abs(f - y).mean())
