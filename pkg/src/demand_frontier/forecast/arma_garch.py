"""ARMA conditional mean with GARCH conditional variance and SGED innovations.

Order selection for the mean equation is a BIC grid search over (p, q)
using Hannan-Rissanen regressions with a Gaussian likelihood; the selected
model is then fit by maximum likelihood over all parameters at once, with
the optimizer working in an unconstrained space whose transform enforces
variance positivity and covariance stationarity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import chi2

from demand_frontier import _kernels
from demand_frontier.forecast.base import DensityForecast
from demand_frontier.forecast.sged import Sged, SgedParams

__all__ = [
    "ArmaGarchError",
    "ArmaGarchModel",
    "fit_arma_garch",
    "forecast_density",
    "gof_pvalue",
    "select_arma_order",
    "simulate_arma_garch",
]

logger = logging.getLogger(__name__)

_SHAPE_LO, _SHAPE_HI = 0.6, 8.0
_LOG_SKEW_MAX = math.log(4.0)
_MAX_PERSISTENCE = 0.9995


class ArmaGarchError(RuntimeError):
    """Fitting or simulation could not produce a valid model."""


@dataclass(frozen=True)
class ArmaGarchModel:
    """Fitted model state; immutable and safe to share across threads."""

    p: int
    q: int
    r: int
    s: int
    alpha0: float
    ar: np.ndarray
    ma: np.ndarray
    phi0: float
    phi: np.ndarray
    gamma: np.ndarray
    shape: float
    skew: float
    log_likelihood: float
    bic: float
    n_obs: int
    last_values: np.ndarray = field(repr=False)
    last_eps: np.ndarray = field(repr=False)
    last_sigma2: np.ndarray = field(repr=False)
    backcast: float = field(repr=False, default=1.0)

    def __post_init__(self):
        if self.phi0 <= 0:
            raise ValueError("phi0 must be > 0")
        if np.any(self.phi < 0) or np.any(self.gamma < 0):
            raise ValueError("phi and gamma must be non-negative")
        if self.phi.sum() + self.gamma.sum() >= 1.0:
            raise ValueError("variance recursion must be covariance stationary")

    def innovations(self) -> Sged:
        return Sged(SgedParams(0.0, 1.0, self.shape, self.skew))

    def unconditional_variance(self) -> float:
        return self.phi0 / (1.0 - self.phi.sum() - self.gamma.sum())

    def forecast(self, horizon: int, n_paths: int = 1000, seed=None):
        return forecast_density(self, horizon, n_paths=n_paths, seed=seed)

    def summary(self) -> dict:
        return {
            "kind": "arma_garch",
            "orders": [self.p, self.q, self.r, self.s],
            "alpha0": self.alpha0,
            "ar": list(map(float, self.ar)),
            "ma": list(map(float, self.ma)),
            "phi0": self.phi0,
            "phi": list(map(float, self.phi)),
            "gamma": list(map(float, self.gamma)),
            "shape": self.shape,
            "skew": self.skew,
            "log_likelihood": self.log_likelihood,
            "bic": self.bic,
            "n_obs": self.n_obs,
        }


def _sigmoid(u):
    return 1.0 / (1.0 + np.exp(-u))


class _Parametrization:
    """Maps an unconstrained vector to valid model parameters.

    Layout: [alpha0, ar(p), ma(q), log phi0, logit persistence,
    split logits (r+s-1), shape logit, skew tanh-log].
    """

    def __init__(self, p, q, r, s):
        self.p, self.q, self.r, self.s = p, q, r, s
        self.size = 1 + p + q + 2 + max(r + s - 1, 0) + 2

    def unpack(self, theta):
        p, q, r, s = self.p, self.q, self.r, self.s
        i = 0
        alpha0 = theta[i]; i += 1
        ar = np.asarray(theta[i : i + p]); i += p
        ma = np.asarray(theta[i : i + q]); i += q
        phi0 = math.exp(min(theta[i], 30.0)); i += 1
        tau = _MAX_PERSISTENCE * _sigmoid(theta[i]); i += 1
        k = r + s
        if k == 0:
            weights = np.empty(0)
        elif k == 1:
            weights = np.array([1.0])
        else:
            logits = np.concatenate([[0.0], theta[i : i + k - 1]])
            logits = logits - logits.max()
            e = np.exp(logits)
            weights = e / e.sum()
        i += max(k - 1, 0)
        coeffs = tau * weights
        phi = coeffs[:r]
        gamma = coeffs[r:]
        shape = _SHAPE_LO + (_SHAPE_HI - _SHAPE_LO) * _sigmoid(theta[i]); i += 1
        skew = math.exp(_LOG_SKEW_MAX * math.tanh(theta[i])); i += 1
        return alpha0, ar, ma, phi0, phi, gamma, shape, skew

    def pack(self, alpha0, ar, ma, phi0, phi, gamma, shape, skew):
        r, s = self.r, self.s
        tau = float(np.sum(phi) + np.sum(gamma))
        tau = min(max(tau, 1e-4), _MAX_PERSISTENCE - 1e-4)
        u_tau = math.log(tau / (_MAX_PERSISTENCE - tau))
        if r + s > 1:
            coeffs = np.concatenate([np.asarray(phi, float), np.asarray(gamma, float)])
            coeffs = np.maximum(coeffs, 1e-6)
            logw = np.log(coeffs / coeffs.sum())
            split = logw[1:] - logw[0]
        else:
            split = np.empty(0)
        sh = min(max(shape, _SHAPE_LO + 1e-3), _SHAPE_HI - 1e-3)
        u_shape = math.log((sh - _SHAPE_LO) / (_SHAPE_HI - sh))
        t = min(max(math.log(skew) / _LOG_SKEW_MAX, -0.999), 0.999)
        u_skew = math.atanh(t)
        return np.concatenate(
            [
                [alpha0],
                np.asarray(ar, float),
                np.asarray(ma, float),
                [math.log(max(phi0, 1e-12)), u_tau],
                split,
                [u_shape, u_skew],
            ]
        )


def _loglik(theta, param, y):
    alpha0, ar, ma, phi0, phi, gamma, shape, skew = param.unpack(theta)
    eps = _kernels.arma_residuals(y, alpha0, ar, ma)
    eps2 = eps * eps
    backcast = eps2.mean()
    if not backcast > 0:
        return -np.inf
    sigma2 = _kernels.garch_filter(eps2, phi0, phi, gamma, backcast)
    if not np.all(sigma2 > 0):
        return -np.inf
    sigma = np.sqrt(sigma2)
    dist = Sged(SgedParams(0.0, 1.0, shape, skew))
    ll = float(np.sum(dist.logpdf(eps / sigma)) - np.sum(np.log(sigma)))
    return ll if np.isfinite(ll) else -np.inf


def _ar_roots_stationary(ar) -> bool:
    if len(ar) == 0:
        return True
    # characteristic roots of z^p - a1 z^(p-1) - ... - ap must lie inside
    # the unit circle
    char = np.concatenate([[1.0], -np.asarray(ar)])
    return bool(np.all(np.abs(np.roots(char)) < 1.0 - 1e-8))


def _initial_point(y, p, q):
    n = y.shape[0]
    if p:
        cols = [np.ones(n - p)]
        for j in range(1, p + 1):
            cols.append(y[p - j : n - j])
        design = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(design, y[p:], rcond=None)
        alpha0 = float(coef[0])
        ar = coef[1:]
        if not _ar_roots_stationary(ar):
            ar = ar * 0.95 / max(np.sum(np.abs(ar)), 1.0)
        resid = y[p:] - design @ np.concatenate([[alpha0], ar])
        v = float(resid.var())
    else:
        alpha0 = float(y.mean())
        ar = np.empty(0)
        v = float(y.var())
    ma = np.zeros(q)
    v = max(v, 1e-12)
    return alpha0, ar, ma, v


def fit_arma_garch(
    series: np.ndarray,
    p: int,
    q: int,
    r: int = 1,
    s: int = 1,
    max_iterations: int = 500,
) -> ArmaGarchModel:
    """Maximum-likelihood fit of the full model.

    L-BFGS-B with numeric gradients in the transformed space, retried once
    with Nelder-Mead from the same start when it fails to improve; the
    returned likelihood never falls below the moment-based initial point.
    """
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("series must be 1-d")
    n = y.shape[0]
    min_len = 10 * (p + q + 4)
    if n < min_len:
        raise ArmaGarchError(f"series length {n} below required {min_len} for ARMA({p},{q})")
    if not np.isfinite(y).all():
        raise ArmaGarchError("series contains non-finite values")
    if y.std() < 1e-12 * max(1.0, abs(float(y.mean()))) or y.std() == 0.0:
        raise ArmaGarchError("series is (numerically) constant; variance model is degenerate")
    if min(p, q, r, s) < 0:
        raise ValueError("orders must be non-negative")

    param = _Parametrization(p, q, r, s)
    alpha0, ar, ma, v = _initial_point(y, p, q)
    # moment start: persistence 0.85, most of it on the variance lag(s)
    tau0 = 0.85
    phi_init = np.full(r, (0.8 * tau0) / r) if r else np.empty(0)
    gamma_init = np.full(s, (0.2 * tau0) / s) if s else np.empty(0)
    if r == 0 and s == 0:
        phi0_init = v
    else:
        phi0_init = v * (1.0 - tau0)
    theta0 = param.pack(alpha0, ar, ma, phi0_init, phi_init, gamma_init, 2.0, 1.0)

    ll0 = _loglik(theta0, param, y)
    if not np.isfinite(ll0):
        raise ArmaGarchError("initial point has non-finite likelihood")

    def nll(theta):
        return -_loglik(theta, param, y)

    best_theta, best_ll = theta0, ll0
    res = optimize.minimize(
        nll, theta0, method="L-BFGS-B", options={"maxiter": max_iterations}
    )
    if np.isfinite(res.fun) and -res.fun > best_ll:
        best_theta, best_ll = res.x, -res.fun
    if not res.success or -res.fun <= ll0:
        res2 = optimize.minimize(
            nll,
            theta0,
            method="Nelder-Mead",
            options={"maxiter": max_iterations * (param.size + 2), "xatol": 1e-6, "fatol": 1e-8},
        )
        if np.isfinite(res2.fun) and -res2.fun > best_ll:
            best_theta, best_ll = res2.x, -res2.fun

    alpha0, ar, ma, phi0, phi, gamma, shape, skew = param.unpack(best_theta)
    if not _ar_roots_stationary(ar):
        raise ArmaGarchError(f"fitted AR polynomial is non-stationary: {ar}")

    eps = _kernels.arma_residuals(y, alpha0, ar, ma)
    eps2 = eps * eps
    backcast = float(eps2.mean())
    sigma2 = _kernels.garch_filter(eps2, phi0, phi, gamma, backcast)
    if not np.all(sigma2 > 0):
        raise ArmaGarchError("fitted variance recursion produced non-positive values")

    k = p + q + r + s + 4
    bic = k * math.log(n) - 2.0 * best_ll
    lag = max(q, s, 1)
    return ArmaGarchModel(
        p=p, q=q, r=r, s=s,
        alpha0=float(alpha0), ar=np.asarray(ar, float), ma=np.asarray(ma, float),
        phi0=float(phi0), phi=np.asarray(phi, float), gamma=np.asarray(gamma, float),
        shape=float(shape), skew=float(skew),
        log_likelihood=float(best_ll), bic=float(bic), n_obs=n,
        last_values=y[n - max(p, 1):].copy(),
        last_eps=eps[n - lag:].copy(),
        last_sigma2=sigma2[n - max(r, 1):].copy(),
        backcast=backcast,
    )


class OrderSelectionError(ArmaGarchError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def select_arma_order(series: np.ndarray, max_p: int = 3, max_q: int = 3) -> tuple[int, int]:
    """Pick the (p, q) grid point with the lowest BIC.

    Hannan-Rissanen two-stage regressions give each candidate's Gaussian
    likelihood on a common sample, so BIC = k ln(n) - 2 ln(L) is comparable
    across the grid; ties break toward fewer parameters, then smaller p.
    """
    y = np.asarray(series, dtype=np.float64)
    n = y.shape[0]
    if max_p < 0 or max_q < 0:
        raise ValueError("max orders must be non-negative")
    if max_p == 0 and max_q == 0:
        return (0, 0)
    long_lag = min(max(10, 2 * (max_p + max_q)), max(n // 4, 1))
    if n < long_lag + max_q + max_p + 20:
        raise ArmaGarchError(f"series too short ({n}) for order selection")

    # stage 1: long autoregression for innovation estimates
    cols = [np.ones(n - long_lag)]
    for j in range(1, long_lag + 1):
        cols.append(y[long_lag - j : n - j])
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, y[long_lag:], rcond=None)
    ehat = np.concatenate([np.zeros(long_lag), y[long_lag:] - design @ coef])

    start = max(max_p, long_lag + max_q)
    n_eff = n - start
    best = None
    diagnostics = {}
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            try:
                cols = [np.ones(n_eff)]
                for j in range(1, p + 1):
                    cols.append(y[start - j : n - j])
                for k_ in range(1, q + 1):
                    cols.append(ehat[start - k_ : n - k_])
                design = np.column_stack(cols)
                coef, *_ = np.linalg.lstsq(design, y[start:], rcond=None)
                resid = y[start:] - design @ coef
                sig2 = max(float(resid @ resid) / n_eff, 1e-300)
                ll = -0.5 * n_eff * (math.log(2.0 * math.pi * sig2) + 1.0)
                k_params = p + q + 2
                bic = k_params * math.log(n_eff) - 2.0 * ll
                diagnostics[(p, q)] = bic
                key = (bic, p + q, p)
                if best is None or key < best[0]:
                    best = (key, (p, q))
            except Exception as exc:  # pragma: no cover - lstsq rarely fails
                diagnostics[(p, q)] = f"failed: {exc}"
    if best is None:
        raise OrderSelectionError("all order candidates failed", diagnostics)
    return best[1]


def forecast_density(
    model: ArmaGarchModel,
    horizon: int,
    n_paths: int = 1000,
    seed=None,
) -> list[DensityForecast]:
    """Monte-Carlo path simulation of the fitted recursions.

    The lead-h ensemble is the set of simulated values at step h across
    paths; reproducible for a fixed seed.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    rng = np.random.default_rng(seed)
    p, q, r, s = model.p, model.q, model.r, model.s
    dist = model.innovations()
    eta = dist.sample((horizon, n_paths), rng)

    lag_y = max(p, 1)
    lag_e = max(q, s, 1)
    lag_v = max(r, 1)
    ys = np.tile(model.last_values[-lag_y:, None], (1, n_paths))
    es = np.tile(model.last_eps[-lag_e:, None], (1, n_paths))
    vs = np.tile(model.last_sigma2[-lag_v:, None], (1, n_paths))

    out = np.empty((horizon, n_paths))
    for step in range(horizon):
        sigma2 = np.full(n_paths, model.phi0)
        for l in range(1, r + 1):
            sigma2 += model.phi[l - 1] * vs[-l]
        for m in range(1, s + 1):
            sigma2 += model.gamma[m - 1] * es[-m] ** 2
        sigma = np.sqrt(sigma2)
        eps = sigma * eta[step]
        mean = np.full(n_paths, model.alpha0)
        for j in range(1, p + 1):
            mean += model.ar[j - 1] * ys[-j]
        for k_ in range(1, q + 1):
            mean += model.ma[k_ - 1] * es[-k_]
        ynew = mean + eps
        ys = np.vstack([ys[1:], ynew])
        es = np.vstack([es[1:], eps])
        vs = np.vstack([vs[1:], sigma2])
        out[step] = ynew
    return [DensityForecast(h + 1, out[h].copy()) for h in range(horizon)]


def gof_pvalue(model: ArmaGarchModel, series: np.ndarray, n_bins: int = 20) -> float:
    """Pearson chi-squared fit test on PIT-transformed residuals.

    Standardized residuals are pushed through the fitted innovation cdf
    and binned into equiprobable cells; the statistic is referred to a
    chi-squared law with n_bins - 1 degrees of freedom.
    """
    y = np.asarray(series, dtype=np.float64)
    n = y.shape[0]
    if n < 5 * n_bins:
        raise ValueError(f"need at least {5 * n_bins} observations for {n_bins} bins, got {n}")
    eps = _kernels.arma_residuals(y, model.alpha0, model.ar, model.ma)
    eps2 = eps * eps
    sigma2 = _kernels.garch_filter(eps2, model.phi0, model.phi, model.gamma, float(eps2.mean()))
    u = model.innovations().cdf(eps / np.sqrt(sigma2))
    counts, _ = np.histogram(u, bins=np.linspace(0.0, 1.0, n_bins + 1))
    expected = n / n_bins
    stat = float(((counts - expected) ** 2 / expected).sum())
    return float(chi2.sf(stat, n_bins - 1))


def simulate_arma_garch(
    n: int,
    alpha0: float = 0.0,
    ar=(),
    ma=(),
    phi0: float = 1.0,
    phi=(),
    gamma=(),
    shape: float = 2.0,
    skew: float = 1.0,
    seed=None,
    burn: int = 200,
) -> np.ndarray:
    """Generate a sample path of the process; the test oracle's data source."""
    rng = np.random.default_rng(seed)
    ar = np.asarray(ar, dtype=np.float64)
    ma = np.asarray(ma, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    persistence = phi.sum() + gamma.sum()
    if persistence >= 1.0:
        raise ValueError("variance recursion must have persistence < 1")
    total = n + burn
    dist = Sged(SgedParams(0.0, 1.0, shape, skew))
    eta = dist.sample(total, rng)
    v0 = phi0 / (1.0 - persistence)
    p, q = ar.shape[0], ma.shape[0]
    r, s = phi.shape[0], gamma.shape[0]
    y = np.zeros(total)
    eps = np.zeros(total)
    sig2 = np.full(total, v0)
    mu = alpha0 / (1.0 - ar.sum()) if p else alpha0
    for t in range(total):
        v = phi0
        for l in range(1, r + 1):
            v += phi[l - 1] * (sig2[t - l] if t - l >= 0 else v0)
        for m in range(1, s + 1):
            v += gamma[m - 1] * (eps[t - m] ** 2 if t - m >= 0 else v0)
        sig2[t] = v
        eps[t] = math.sqrt(v) * eta[t]
        acc = alpha0 + eps[t]
        for j in range(1, p + 1):
            acc += ar[j - 1] * (y[t - j] if t - j >= 0 else mu)
        for k_ in range(1, q + 1):
            acc += ma[k_ - 1] * (eps[t - k_] if t - k_ >= 0 else 0.0)
        y[t] = acc
    return y[burn:]
