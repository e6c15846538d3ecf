"""Pure numpy implementations of the numerical kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop for loop.
Exponents are passed as floats with ``numpy.inf`` standing for the sup norm.
"""
import numpy as np

_NEG_INF = -np.inf

# improvements below this (in log value) count as a stall
STALL_TOL = 1e-14
PATIENCE = 25
MIN_STEP = 1e-12


def lr_norm(x, r, w):
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return 0.0
    if np.isinf(r):
        return float(np.max(w * a))
    if r == 1.0:
        return float(np.dot(w, a))
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * float(np.dot(w, (a / m) ** r)) ** (1.0 / r)


def norming(x, r, w):
    """Dual coordinates x' with <x, x'> = |x| and unit dual norm (zeros for x = 0)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if np.isinf(r):
        a = w * np.abs(x)
        j = int(np.argmax(a))
        if a[j] > 0.0:
            out[j] = w[j] * np.sign(x[j])
        return out
    if r == 1.0:
        return w * np.sign(x)
    nrm = lr_norm(x, r, w)
    if nrm == 0.0:
        return out
    return w * np.sign(x) * (np.abs(x) / nrm) ** (r - 1.0)


def retract(x, r, w):
    nrm = lr_norm(x, r, w)
    if nrm > 1.0:
        return x / nrm
    return x


def _logsumexp(a):
    m = np.max(a)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(a - m))))


def log_power_sum(X, logc, theta, xp):
    """log of sum_i c_i |<X_i, xp>|^theta."""
    t = np.abs(X @ xp)
    if theta == 0.0:
        return _logsumexp(logc)
    with np.errstate(divide="ignore"):
        a = logc + theta * np.log(t)
    return _logsumexp(a)


def power_sum_grad(X, logc, theta, xp, eps):
    """Gradient of the eps-smoothed power sum, up to a positive factor."""
    t = X @ xp
    s2 = t * t + eps * eps
    if theta == 0.0:
        return np.zeros_like(xp)
    with np.errstate(divide="ignore"):
        lw = logc + (0.5 * theta - 1.0) * np.log(s2)
    m = np.max(lw)
    if not np.isfinite(m):
        return np.zeros_like(xp)
    coef = theta * t * np.exp(lw - m)
    return coef @ X


def vertex_log_power_sums(X, logc, theta, V):
    T = np.abs(V @ X.T)
    with np.errstate(divide="ignore"):
        A = logc[None, :] + theta * np.log(T) if theta != 0.0 else np.broadcast_to(logc, T.shape)
    m = np.max(A, axis=1)
    out = np.full(V.shape[0], _NEG_INF)
    ok = np.isfinite(m)
    out[ok] = m[ok] + np.log(np.sum(np.exp(A[ok] - m[ok, None]), axis=1))
    return out


def ascend_power_sum(X, logc, theta, dr, dw, pr, pw, x0, iters, step0, decay, eps):
    """Monotone ascent of the power sum over the unit ball of (dr, dw).

    Each iteration proposes the linear-maximization vertex of the smoothed
    gradient (the norming vector in the predual (pr, pw)) and a retracted
    gradient step; the better one is kept if it improves. Returns
    (log value, point, evaluations).
    """
    x = retract(np.array(x0, dtype=float), dr, dw)
    cur = log_power_sum(X, logc, theta, x)
    evals = 1
    step = step0
    stall = 0
    for _ in range(iters):
        g = power_sum_grad(X, logc, theta, x, eps)
        gn = float(np.sqrt(np.dot(g, g)))
        if gn == 0.0 or not np.isfinite(gn):
            break
        y = norming(g, pr, pw)
        vy = log_power_sum(X, logc, theta, y)
        z = retract(x + (step / gn) * g, dr, dw)
        vz = log_power_sum(X, logc, theta, z)
        evals += 2
        if vz > vy:
            vbest, best = vz, z
        else:
            vbest, best = vy, y
        if vbest > cur:
            gain = vbest - cur
            x, cur = best, vbest
            if gain > STALL_TOL:
                stall = 0
            else:
                stall += 1
        else:
            step *= decay
            stall += 1
        if stall >= PATIENCE or step < MIN_STEP:
            break
    return cur, x, evals


def min_norm_weights(M, iters):
    """Convex weights of the minimum-norm point, given the Gram matrix ``M``.

    Pairwise Frank-Wolfe: mass moves from the worst support atom to the best
    vertex with an exact line search, until the duality gap is at rounding level.
    """
    n = M.shape[0]
    lam = np.zeros(n)
    j = int(np.argmin(np.diag(M)))
    lam[j] = 1.0
    Ml = np.array(M[:, j], dtype=float)
    for _ in range(iters):
        xx = float(lam @ Ml)
        i = int(np.argmin(Ml))
        if xx - Ml[i] <= 1e-15 * max(xx, 1e-300):
            break
        j = int(np.argmax(np.where(lam > 0.0, Ml, -np.inf)))
        curv = M[i, i] - 2.0 * M[i, j] + M[j, j]
        t = lam[j] if curv <= 0 else min((Ml[j] - Ml[i]) / curv, lam[j])
        lam[i] += t
        lam[j] -= t
        Ml += t * (M[:, i] - M[:, j])
    return lam
