# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, log, exp, pow, isinf, INFINITY

cnp.import_array()

cdef double STALL_TOL = 1e-14
cdef int PATIENCE = 25
cdef double MIN_STEP = 1e-12


cdef inline double _sign(double v) nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef double _lr_norm(const double[:] x, double r, const double[:] w) nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double m = 0.0, a, acc = 0.0
    if n == 0:
        return 0.0
    if isinf(r):
        for i in range(n):
            a = w[i] * fabs(x[i])
            if a > m:
                m = a
        return m
    if r == 1.0:
        for i in range(n):
            acc += w[i] * fabs(x[i])
        return acc
    for i in range(n):
        a = fabs(x[i])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    for i in range(n):
        acc += w[i] * pow(fabs(x[i]) / m, r)
    return m * pow(acc, 1.0 / r)


cdef void _norming(const double[:] x, double r, const double[:] w, double[:] out) nogil:
    cdef Py_ssize_t i, j = 0, n = x.shape[0]
    cdef double a, best = -1.0, nrm
    for i in range(n):
        out[i] = 0.0
    if isinf(r):
        for i in range(n):
            a = w[i] * fabs(x[i])
            if a > best:
                best = a
                j = i
        if best > 0.0:
            out[j] = w[j] * _sign(x[j])
        return
    if r == 1.0:
        for i in range(n):
            out[i] = w[i] * _sign(x[i])
        return
    nrm = _lr_norm(x, r, w)
    if nrm == 0.0:
        return
    for i in range(n):
        out[i] = w[i] * _sign(x[i]) * pow(fabs(x[i]) / nrm, r - 1.0)


cdef void _retract(double[:] x, double r, const double[:] w) nogil:
    cdef Py_ssize_t i
    cdef double nrm = _lr_norm(x, r, w)
    if nrm > 1.0:
        for i in range(x.shape[0]):
            x[i] = x[i] / nrm


cdef double _log_power_sum(const double[:, :] X, const double[:] logc, double theta,
                           const double[:] xp, double[:] work) nogil:
    cdef Py_ssize_t i, j, k = X.shape[0], d = X.shape[1]
    cdef double t, m = -INFINITY, acc = 0.0
    for i in range(k):
        if theta == 0.0:
            work[i] = logc[i]
        else:
            t = 0.0
            for j in range(d):
                t += X[i, j] * xp[j]
            t = fabs(t)
            if t == 0.0:
                work[i] = -INFINITY
            else:
                work[i] = logc[i] + theta * log(t)
        if work[i] > m:
            m = work[i]
    if isinf(m):
        return m
    for i in range(k):
        acc += exp(work[i] - m)
    return m + log(acc)


cdef double _power_sum_grad(const double[:, :] X, const double[:] logc, double theta,
                            const double[:] xp, double eps, double[:] tbuf,
                            double[:] work, double[:] g) nogil:
    """Fill g with the smoothed gradient direction; return its Euclidean norm."""
    cdef Py_ssize_t i, j, k = X.shape[0], d = X.shape[1]
    cdef double t, s2, m = -INFINITY, c, gn = 0.0
    for j in range(d):
        g[j] = 0.0
    if theta == 0.0:
        return 0.0
    for i in range(k):
        t = 0.0
        for j in range(d):
            t += X[i, j] * xp[j]
        tbuf[i] = t
        s2 = t * t + eps * eps
        if s2 == 0.0:
            work[i] = -INFINITY
        else:
            work[i] = logc[i] + (0.5 * theta - 1.0) * log(s2)
        if work[i] > m:
            m = work[i]
    if isinf(m):
        return 0.0
    for i in range(k):
        c = theta * tbuf[i] * exp(work[i] - m)
        for j in range(d):
            g[j] += c * X[i, j]
    for j in range(d):
        gn += g[j] * g[j]
    return sqrt(gn)


def lr_norm(x, double r, w):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:] wv = np.ascontiguousarray(w, dtype=np.float64)
    return _lr_norm(xv, r, wv)


def norming(x, double r, w):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:] wv = np.ascontiguousarray(w, dtype=np.float64)
    out = np.zeros(xv.shape[0])
    cdef double[:] ov = out
    _norming(xv, r, wv, ov)
    return out


def retract(x, double r, w):
    out = np.array(x, dtype=np.float64)
    cdef double[:] ov = out
    cdef const double[:] wv = np.ascontiguousarray(w, dtype=np.float64)
    _retract(ov, r, wv)
    return out


def log_power_sum(X, logc, double theta, xp):
    cdef const double[:, :] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:] cv = np.ascontiguousarray(logc, dtype=np.float64)
    cdef const double[:] pv = np.ascontiguousarray(xp, dtype=np.float64)
    cdef double[:] work = np.empty(Xv.shape[0])
    return _log_power_sum(Xv, cv, theta, pv, work)


def power_sum_grad(X, logc, double theta, xp, double eps):
    cdef const double[:, :] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:] cv = np.ascontiguousarray(logc, dtype=np.float64)
    cdef const double[:] pv = np.ascontiguousarray(xp, dtype=np.float64)
    cdef double[:] tbuf = np.empty(Xv.shape[0])
    cdef double[:] work = np.empty(Xv.shape[0])
    g = np.zeros(Xv.shape[1])
    cdef double[:] gv = g
    _power_sum_grad(Xv, cv, theta, pv, eps, tbuf, work, gv)
    return g


def vertex_log_power_sums(X, logc, double theta, V):
    cdef const double[:, :] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:] cv = np.ascontiguousarray(logc, dtype=np.float64)
    cdef const double[:, :] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef double[:] work = np.empty(Xv.shape[0])
    out = np.empty(Vv.shape[0])
    cdef double[:] ov = out
    cdef Py_ssize_t v
    with nogil:
        for v in range(Vv.shape[0]):
            ov[v] = _log_power_sum(Xv, cv, theta, Vv[v], work)
    return out


def ascend_power_sum(X, logc, double theta, double dr, dw, double pr, pw, x0,
                     int iters, double step0, double decay, double eps):
    cdef const double[:, :] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:] cv = np.ascontiguousarray(logc, dtype=np.float64)
    cdef const double[:] dwv = np.ascontiguousarray(dw, dtype=np.float64)
    cdef const double[:] pwv = np.ascontiguousarray(pw, dtype=np.float64)
    cdef Py_ssize_t k = Xv.shape[0], d = Xv.shape[1], j
    x_arr = np.array(x0, dtype=np.float64)
    cdef double[:] x = x_arr
    cdef double[:] g = np.empty(d)
    cdef double[:] y = np.empty(d)
    cdef double[:] z = np.empty(d)
    cdef double[:] work = np.empty(k)
    cdef double[:] tbuf = np.empty(k)
    cdef double cur, vy, vz, vbest, gn, gain, step = step0
    cdef long evals = 1
    cdef int it, stall = 0
    cdef bint take_z
    with nogil:
        _retract(x, dr, dwv)
        cur = _log_power_sum(Xv, cv, theta, x, work)
        for it in range(iters):
            gn = _power_sum_grad(Xv, cv, theta, x, eps, tbuf, work, g)
            if gn == 0.0 or gn != gn or isinf(gn):
                break
            _norming(g, pr, pwv, y)
            vy = _log_power_sum(Xv, cv, theta, y, work)
            for j in range(d):
                z[j] = x[j] + (step / gn) * g[j]
            _retract(z, dr, dwv)
            vz = _log_power_sum(Xv, cv, theta, z, work)
            evals += 2
            take_z = vz > vy
            vbest = vz if take_z else vy
            if vbest > cur:
                gain = vbest - cur
                for j in range(d):
                    x[j] = z[j] if take_z else y[j]
                cur = vbest
                if gain > STALL_TOL:
                    stall = 0
                else:
                    stall += 1
            else:
                step *= decay
                stall += 1
            if stall >= PATIENCE or step < MIN_STEP:
                break
    return cur, x_arr, evals


def min_norm_weights(M, int iters):
    cdef const double[:, :] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t n = Mv.shape[0], a, i, j
    lam_arr = np.zeros(n)
    cdef double[:] lam = lam_arr
    cdef double[:] Ml = np.empty(n)
    cdef double xx, best, worst, curv, t
    cdef int it
    with nogil:
        j = 0
        for a in range(1, n):
            if Mv[a, a] < Mv[j, j]:
                j = a
        lam[j] = 1.0
        for a in range(n):
            Ml[a] = Mv[a, j]
        for it in range(iters):
            xx = 0.0
            i = 0
            for a in range(n):
                xx += lam[a] * Ml[a]
                if Ml[a] < Ml[i]:
                    i = a
            if xx - Ml[i] <= 1e-15 * (xx if xx > 1e-300 else 1e-300):
                break
            j = -1
            for a in range(n):
                if lam[a] > 0.0 and (j < 0 or Ml[a] > Ml[j]):
                    j = a
            curv = Mv[i, i] - 2.0 * Mv[i, j] + Mv[j, j]
            if curv <= 0.0:
                t = lam[j]
            else:
                t = (Ml[j] - Ml[i]) / curv
                if t > lam[j]:
                    t = lam[j]
            lam[i] += t
            lam[j] -= t
            for a in range(n):
                Ml[a] += t * (Mv[a, i] - Mv[a, j])
    return lam_arr
