"""Power-sum functionals of finite vector families and their gradients.

Two shapes cover every summing-type quantity in the package:

* image sums   L(F) = sum_i w_i |u x_i|^s
* dual sups    H(F) = sup_{x'} sum_i w_i |x_i|^alpha |<x_i, x'>|^theta

Everything is carried in log space so that exponents such as
q / (1 - sigma) cannot overflow. Gradients with respect to the family use the
maximizing x' of the dual sup (Danskin), with |t| smoothed by eps. Where
the sup is a max over the vertices of a polyhedral ball, every vertex that is
nearly active contributes a gradient, and searches step along the
minimum-norm convex combination of the resulting directions.
"""
import math

import numpy as np

from . import kernels
from .optim import VERTEX_LIMIT, PowerSumObjective, SearchConfig, maximize_over_ball
from .spaces import NormedSpace, Operator, row_norms


def logsumexp(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(a - m))))


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def power_mean(logw, values, s) -> float:
    """(sum_i w_i |values_i|^s)^(1/s) evaluated in log space."""
    lv = logsumexp(np.asarray(logw) + s * _log(np.abs(values)))
    return 0.0 if lv == -math.inf else math.exp(lv / s)


def image_log_sum(u: Operator, F, logw, s):
    N = row_norms(u.codomain, u.apply_rows(F))
    return logsumexp(logw + s * _log(N))


def image_log_sum_grad(u: Operator, F, logw, s):
    """log L and its gradient with respect to the rows of F."""
    Y = u.codomain
    Z = u.apply_rows(F)
    N = row_norms(Y, Z)
    logL = logsumexp(logw + s * _log(N))
    G = np.zeros_like(F, dtype=float)
    if logL == -math.inf:
        return logL, G
    live = N > 0
    if np.any(live):
        coef = s * np.exp(logw[live] + s * np.log(N[live]) - logL) / N[live]
        D = np.array([kernels.norming(z, Y.r, Y.weights) for z in Z[live]])
        G[live] = coef[:, None] * (D @ u.matrix)
    return logL, G


def dual_objective(space: NormedSpace, F, logw, alpha, theta, outer=1.0) -> PowerSumObjective:
    n = row_norms(space, F)
    if alpha == 0.0:
        logc = np.array(logw, dtype=float)
    else:
        logc = logw + alpha * _log(n)
    return PowerSumObjective(F, logc, theta, outer)


def member_starts(space: NormedSpace, F):
    return [kernels.norming(x, space.r, space.weights) for x in F if np.any(x)]


def dual_sup(space: NormedSpace, F, logw, alpha, theta, config: SearchConfig, outer=1.0):
    """Search the dual ball of ``space``; returns (log H, maximizer, report)."""
    obj = dual_objective(space, F, logw, alpha, theta, outer)
    rep = maximize_over_ball(obj, space.dual, config, starts=member_starts(space, F))
    return obj.log_value(rep.witness), rep.witness, rep


def dual_sup_grad(space: NormedSpace, F, logw, alpha, theta, xp, logH, eps):
    """Gradient of log H in F at a fixed maximizer xp."""
    F = np.asarray(F, dtype=float)
    G = np.zeros_like(F)
    if logH == -math.inf:
        return G
    n = row_norms(space, F)
    live = n > 0
    if not np.any(live):
        return G
    Fl = F[live]
    t = Fl @ xp
    s2 = t * t + eps * eps
    lw = logw[live] + alpha * np.log(n[live]) + 0.5 * theta * _log(s2) - logH
    c = np.exp(lw)
    part = np.zeros_like(Fl)
    if alpha != 0.0:
        E = np.array([kernels.norming(x, space.r, space.weights) for x in Fl])
        part += (alpha / n[live])[:, None] * E
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = np.where(s2 > 0, theta * t / s2, 0.0)
    part += tt[:, None] * xp[None, :]
    G[live] = c[:, None] * part
    return G


# vertices whose log-value is within this gap of the best count as active
ACTIVE_GAP = 1e-3


def _vertex_sup(space: NormedSpace, obj: PowerSumObjective):
    """(vertices, log values) when the dual sup is an exact max over vertices, else None."""
    D = space.dual
    if not (obj.convex and D.is_polyhedral and D.vertex_count(symmetric=True) <= VERTEX_LIMIT):
        return None
    V = D.vertices(symmetric=True)
    return V, kernels.vertex_log_power_sums(obj.X, obj.logc, obj.theta, V)


def dual_sup_pieces(space: NormedSpace, F, logw, alpha, theta, config: SearchConfig, eps, gap=ACTIVE_GAP):
    """(log H, gradients of log H at each nearly active maximizer), best maximizer first.

    Off polyhedral balls there is a single searched maximizer.
    """
    obj = dual_objective(space, F, logw, alpha, theta)
    vs = _vertex_sup(space, obj)
    if vs is None:
        logH, xp, _ = dual_sup(space, F, logw, alpha, theta, config)
        if logH == -math.inf:
            return logH, []
        return logH, [dual_sup_grad(space, F, logw, alpha, theta, xp, logH, eps)]
    V, lv = vs
    j = int(np.argmax(lv))
    logH = float(lv[j])
    if logH == -math.inf:
        return logH, []
    order = [j] + [i for i in np.flatnonzero(lv >= logH - gap) if i != j]
    return logH, [dual_sup_grad(space, F, logw, alpha, theta, V[i], logH, eps) for i in order]


def min_norm_combination(dirs, iters: int = 500):
    """Minimum-norm point of the convex hull of ``dirs`` (pairwise Frank-Wolfe)."""
    if len(dirs) == 1:
        return dirs[0]
    shape = dirs[0].shape
    A = np.stack([d.ravel() for d in dirs])
    if len(dirs) == 2:
        a, b = A
        dd = float(np.dot(a - b, a - b))
        lam = 0.0 if dd == 0.0 else min(max(float(np.dot(b, b - a)) / dd, 0.0), 1.0)
        return (lam * a + (1.0 - lam) * b).reshape(shape)
    lam = kernels.min_norm_weights(A @ A.T, iters)
    return (lam @ A).reshape(shape)


def ratio_direction(GL, outer, pieces):
    """Ascent direction for log L - outer * log H when H is a max of the given pieces."""
    return min_norm_combination([GL - outer * G for G in pieces])
