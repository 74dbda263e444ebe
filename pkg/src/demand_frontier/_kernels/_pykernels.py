"""NumPy/SciPy implementations of the hot numerical kernels.

These are the fallback used when the compiled extension is unavailable.
Both backends implement the same contracts and must agree to float
round-off; see tests/test_kernels.py.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter, lfiltic

BACKEND = "python"


def _window_starts(xs: np.ndarray, xeval: np.ndarray, q: int) -> np.ndarray:
    """Start index of the q-nearest contiguous window for each eval point.

    xs and xeval must be ascending; starts are then monotone, so a single
    two-pointer pass finds every window.
    """
    n = xs.shape[0]
    starts = np.empty(xeval.shape[0], dtype=np.intp)
    s = 0
    for i in range(xeval.shape[0]):
        x = xeval[i]
        while s + q < n and xs[s + q] - x < x - xs[s]:
            s += 1
        starts[i] = s
    return starts


def _tricube(r: np.ndarray) -> np.ndarray:
    t = 1.0 - r * r * r
    tri = t * t * t
    return np.where(r <= 0.999, np.where(r <= 0.001, 1.0, tri), 0.0)


def _grid_fastpath_ok(xs, rho, q, degree, xeval) -> bool:
    n = xs.shape[0]
    if degree > 1 or q > n or q % 2 == 0 or q < 3:
        return False
    if xeval.shape[0] != n or xeval[0] != xs[0] or xeval[-1] != xs[-1]:
        return False
    if not np.array_equal(xeval, xs):
        return False
    d = np.diff(xs)
    if d.shape[0] and not np.all(d == d[0]):
        return False
    return bool(np.all(rho == 1.0))


def loess_fit(
    xs: np.ndarray,
    ys: np.ndarray,
    rho: np.ndarray,
    q: int,
    degree: int,
    xeval: np.ndarray,
) -> np.ndarray:
    """Locally weighted polynomial regression on a sorted grid.

    Tricube neighborhood weights over the q nearest points, multiplied by
    the robustness weights ``rho``.  Follows the classic STL smoother
    conventions: bandwidth inflation for q > n, weight cutoffs at
    0.001/0.999 of the bandwidth, and degradation to the local weighted
    mean when the weighted x-spread is negligible.  Symmetric interior
    windows on a uniform grid with uniform rho collapse to a convolution.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    xeval = np.ascontiguousarray(xeval, dtype=np.float64)
    n = xs.shape[0]
    if degree not in (0, 1, 2):
        raise ValueError(f"loess degree must be 0, 1 or 2, got {degree}")
    qn = min(q, n)
    if qn < degree + 1:
        raise ValueError(
            f"loess neighborhood has {qn} points, need at least {degree + 1}"
        )

    if _grid_fastpath_ok(xs, rho, q, degree, xeval):
        h = (q - 1) // 2
        w = _tricube(np.abs(np.arange(-h, h + 1)) / float(h))
        w = w / w.sum()
        out = np.empty(n)
        out[h : n - h] = np.correlate(ys, w, mode="valid")
        if h > 0:
            edges = np.concatenate([xeval[:h], xeval[n - h :]])
            fitted = _general_loess(xs, ys, rho, qn, q, degree, edges)
            out[:h] = fitted[:h]
            out[n - h :] = fitted[h:]
        return out
    return _general_loess(xs, ys, rho, qn, q, degree, xeval)


def _general_loess(xs, ys, rho, qn, q, degree, xeval):
    n = xs.shape[0]
    xrange_ = xs[-1] - xs[0] if n > 1 else 1.0
    spacing = xrange_ / (n - 1) if n > 1 else 1.0

    starts = _window_starts(xs, xeval, qn)
    idx = starts[:, None] + np.arange(qn)[None, :]
    xw = xs[idx]
    yw = ys[idx]
    rw = rho[idx]

    dist = np.abs(xw - xeval[:, None])
    lam = np.maximum(xeval - xs[starts], xs[starts + qn - 1] - xeval)
    if q > n:
        lam = lam + (q - n) * spacing / 2.0
    lam = np.where(lam <= 0, 1.0, lam)

    w = _tricube(dist / lam[:, None]) * rw

    sw = w.sum(axis=1)
    if np.any(sw <= 0.0):
        raise ValueError("loess window has no positive weight")
    fitted = (w * yw).sum(axis=1) / sw

    if degree >= 1:
        xbar = (w * xw).sum(axis=1) / sw
        dx = xw - xbar[:, None]
        sxx = (w * dx * dx).sum(axis=1)
        ok = np.sqrt(np.maximum(sxx, 0.0)) > 0.001 * xrange_
        if degree == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                slope = (w * dx * yw).sum(axis=1) / sxx
                adj = slope * (xeval - xbar)
            fitted = fitted + np.where(ok, adj, 0.0)
        else:
            fitted = _quadratic_fit(w, xw, yw, xeval, fitted, ok)
    return fitted


def _quadratic_fit(w, xw, yw, xeval, mean_fit, ok):
    """Batched weighted quadratic solve, centered at the eval point."""
    dx = xw - xeval[:, None]
    s0 = w.sum(axis=1)
    s1 = (w * dx).sum(axis=1)
    s2 = (w * dx**2).sum(axis=1)
    s3 = (w * dx**3).sum(axis=1)
    s4 = (w * dx**4).sum(axis=1)
    b0 = (w * yw).sum(axis=1)
    b1 = (w * dx * yw).sum(axis=1)
    b2 = (w * dx**2 * yw).sum(axis=1)
    d00 = s2 * s4 - s3 * s3
    d01 = s1 * s4 - s2 * s3
    d02 = s1 * s3 - s2 * s2
    det = s0 * d00 - s1 * d01 + s2 * d02
    out = mean_fit.copy()
    sel = ok & (np.abs(det) > 1e-12 * np.maximum(s0, 1.0) ** 3)
    if np.any(sel):
        c0 = (b0 * d00 - b1 * d01 + b2 * d02)[sel] / det[sel]
        out[sel] = c0
    return out


def garch_filter(
    eps2: np.ndarray,
    phi0: float,
    phi: np.ndarray,
    gamma: np.ndarray,
    backcast: float,
) -> np.ndarray:
    """Conditional-variance recursion.

    sigma2[t] = phi0 + sum_l phi[l] * sigma2[t-1-l] + sum_m gamma[m] * eps2[t-1-m],
    with pre-sample sigma2 and eps2 both set to ``backcast``.
    """
    eps2 = np.ascontiguousarray(eps2, dtype=np.float64)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    n = eps2.shape[0]
    s = gamma.shape[0]
    r = phi.shape[0]

    u = np.full(n, phi0, dtype=np.float64)
    if s:
        pad = np.concatenate([np.full(s, backcast), eps2])
        for m in range(1, s + 1):
            u += gamma[m - 1] * pad[s - m : s - m + n]
    if r == 0:
        return u
    a = np.concatenate([[1.0], -phi])
    zi = lfiltic([1.0], a, y=np.full(r, backcast))
    sigma2, _ = lfilter([1.0], a, u, zi=zi)
    return sigma2


def arma_residuals(
    y: np.ndarray,
    alpha0: float,
    ar: np.ndarray,
    ma: np.ndarray,
) -> np.ndarray:
    """Innovations implied by an ARMA mean equation.

    eps[t] = y[t] - alpha0 - sum_j ar[j] * y[t-1-j] - sum_k ma[k] * eps[t-1-k].
    Pre-sample y is replaced by the sample mean, pre-sample eps by zero, so
    the residual series has the same length for every order.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    ar = np.ascontiguousarray(ar, dtype=np.float64)
    ma = np.ascontiguousarray(ma, dtype=np.float64)
    n = y.shape[0]
    p = ar.shape[0]
    ybar = y.mean() if p else 0.0

    z = y - alpha0
    if p:
        pad = np.concatenate([np.full(p, ybar), y])
        for j in range(1, p + 1):
            z = z - ar[j - 1] * pad[p - j : p - j + n]
    if ma.shape[0] == 0:
        return z
    eps = lfilter([1.0], np.concatenate([[1.0], ma]), z)
    return eps
