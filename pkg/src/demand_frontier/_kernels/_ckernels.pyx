# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot numerical kernels.

Same contracts as _pykernels; selected at import by demand_frontier._kernels.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND = "compiled"


cdef inline double _tricube(double r) nogil:
    cdef double t
    if r <= 0.999:
        if r <= 0.001:
            return 1.0
        t = 1.0 - r * r * r
        return t * t * t
    return 0.0


cdef bint _grid_fastpath_ok(double[::1] xs, double[::1] rho, int q, int degree,
                            double[::1] xe):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i
    cdef double d0
    if degree > 1 or q > n or q % 2 == 0 or q < 3:
        return False
    if xe.shape[0] != n:
        return False
    for i in range(n):
        if xe[i] != xs[i]:
            return False
    if n > 1:
        d0 = xs[1] - xs[0]
        for i in range(2, n):
            if xs[i] - xs[i - 1] != d0:
                return False
    for i in range(n):
        if rho[i] != 1.0:
            return False
    return True


def loess_fit(xs, ys, rho, int q, int degree, xeval):
    cdef double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef double[::1] rw = np.ascontiguousarray(rho, dtype=np.float64)
    cdef double[::1] xe = np.ascontiguousarray(xeval, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    if degree < 0 or degree > 2:
        raise ValueError(f"loess degree must be 0, 1 or 2, got {degree}")
    cdef int qn = q if q < n else <int> n
    if qn < degree + 1:
        raise ValueError(
            f"loess neighborhood has {qn} points, need at least {degree + 1}"
        )

    cdef Py_ssize_t h, i, j
    cdef double acc
    if _grid_fastpath_ok(x, rw, q, degree, xe):
        h = (q - 1) // 2
        w_arr = np.empty(q, dtype=np.float64)
        wv = w_arr
        acc = 0.0
        for j in range(q):
            w_arr[j] = _tricube(fabs(<double> (j - h)) / (<double> h))
            acc += w_arr[j]
        w_arr /= acc
        out_arr = np.empty(n, dtype=np.float64)
        _convolve_interior(out_arr, y, w_arr, h)
        if h > 0:
            edges = np.concatenate([np.asarray(xe)[:h], np.asarray(xe)[n - h:]])
            fitted = _general_loess(x, y, rw, qn, q, degree, edges)
            out_arr[:h] = fitted[:h]
            out_arr[n - h:] = fitted[h:]
        return out_arr
    return _general_loess(x, y, rw, qn, q, degree,
                          np.ascontiguousarray(xe, dtype=np.float64))


cdef void _convolve_interior(double[::1] out, double[::1] y, double[::1] w,
                             Py_ssize_t h) nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t q = w.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(h, n - h):
        acc = 0.0
        for j in range(q):
            acc += w[j] * y[i - h + j]
        out[i] = acc


cdef _general_loess(double[::1] x, double[::1] y, double[::1] rw,
                    int qn, int q, int degree, double[::1] xe):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = xe.shape[0]
    cdef double xrange_ = x[n - 1] - x[0] if n > 1 else 1.0
    cdef double spacing = xrange_ / (n - 1) if n > 1 else 1.0
    cdef double infl = (q - n) * spacing / 2.0 if q > n else 0.0

    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef Py_ssize_t s = 0, i, j
    cdef double xv, lam, wj, dx, yj
    cdef double m0, m1, m2, m3, m4, my, mxy, mx2y
    cdef double sxx_c, sxy_c, slope
    cdef double d00, d01, d02, det, c0

    for i in range(m):
        xv = xe[i]
        while s + qn < n and x[s + qn] - xv < xv - x[s]:
            s += 1
        lam = xv - x[s]
        if x[s + qn - 1] - xv > lam:
            lam = x[s + qn - 1] - xv
        lam += infl
        if lam <= 0.0:
            lam = 1.0

        m0 = 0.0; m1 = 0.0; m2 = 0.0; m3 = 0.0; m4 = 0.0
        my = 0.0; mxy = 0.0; mx2y = 0.0
        for j in range(qn):
            dx = x[s + j] - xv
            wj = _tricube(fabs(dx) / lam) * rw[s + j]
            if wj == 0.0:
                continue
            yj = y[s + j]
            m0 += wj
            my += wj * yj
            if degree >= 1:
                m1 += wj * dx
                m2 += wj * dx * dx
                mxy += wj * dx * yj
            if degree == 2:
                m3 += wj * dx * dx * dx
                m4 += wj * dx * dx * dx * dx
                mx2y += wj * dx * dx * yj
        if m0 <= 0.0:
            raise ValueError("loess window has no positive weight")
        out[i] = my / m0

        if degree >= 1:
            sxx_c = m2 - m1 * m1 / m0
            if sxx_c < 0.0:
                sxx_c = 0.0
            if sqrt(sxx_c) > 0.001 * xrange_:
                if degree == 1:
                    sxy_c = mxy - m1 * my / m0
                    slope = sxy_c / sxx_c
                    out[i] = my / m0 - slope * (m1 / m0)
                else:
                    d00 = m2 * m4 - m3 * m3
                    d01 = m1 * m4 - m2 * m3
                    d02 = m1 * m3 - m2 * m2
                    det = m0 * d00 - m1 * d01 + m2 * d02
                    if fabs(det) > 1e-12 * (m0 if m0 > 1.0 else 1.0) ** 3:
                        c0 = (my * d00 - mxy * d01 + mx2y * d02) / det
                        out[i] = c0
    return out_arr


def garch_filter(eps2, double phi0, phi, gamma, double backcast):
    cdef double[::1] e2 = np.ascontiguousarray(eps2, dtype=np.float64)
    cdef double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[::1] gm = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = e2.shape[0]
    cdef Py_ssize_t r = ph.shape[0]
    cdef Py_ssize_t sq = gm.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t t, l, mm
    cdef double acc
    for t in range(n):
        acc = phi0
        for l in range(1, r + 1):
            acc += ph[l - 1] * (out[t - l] if t - l >= 0 else backcast)
        for mm in range(1, sq + 1):
            acc += gm[mm - 1] * (e2[t - mm] if t - mm >= 0 else backcast)
        out[t] = acc
    return out_arr


def arma_residuals(y, double alpha0, ar, ma):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] arv = np.ascontiguousarray(ar, dtype=np.float64)
    cdef double[::1] mav = np.ascontiguousarray(ma, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    cdef Py_ssize_t p = arv.shape[0]
    cdef Py_ssize_t q = mav.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] eps = out_arr
    cdef double ybar = 0.0
    cdef Py_ssize_t t, j, k
    cdef double acc
    if p:
        for t in range(n):
            ybar += yv[t]
        ybar /= n
    for t in range(n):
        acc = yv[t] - alpha0
        for j in range(1, p + 1):
            acc -= arv[j - 1] * (yv[t - j] if t - j >= 0 else ybar)
        for k in range(1, q + 1):
            acc -= mav[k - 1] * (eps[t - k] if t - k >= 0 else 0.0)
        eps[t] = acc
    return out_arr
