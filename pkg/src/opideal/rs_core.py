"""Abstract RS-summing constants over a finite atomic measure.

An RS system bundles a size functional ``S(u, f)`` (one real per atom), an
input functional ``R(f, k)`` tested against parameters ``k`` from a set ``K``,
and the measure. A map u is (q, p)-RS summing when

    (sum_w nu_w |S(u, g(w) f)(w)|^q)^(1/q)
        <= C sup_k (sum_w nu_w |R(g(w) f, k)(w)|^p)^(1/p)

for all f and all scalar g. ``K`` is either an explicit point list or the
unit ball of a dual space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from ._family import dual_sup_pieces, image_log_sum_grad, ratio_direction
from .errors import DegenerateFamilyError, EstimationError, InputError, ParameterError
from .measures import AtomicMeasure, ScalarWeighting, embedding_constant, lp_norm
from .optim import EstimateReport, SearchConfig, maximize_family_ratio, maximize_over_ball
from .spaces import NormedSpace, Operator, norming_vector, row_norms
from .vvfun import SimpleFunction, phi_search


@dataclass(frozen=True)
class DualBall:
    space: NormedSpace


@dataclass(frozen=True, eq=False)
class FinitePoints:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.array(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise InputError("K needs at least one point")
        object.__setattr__(self, "points", pts)


def _never(p):
    return False


@dataclass(frozen=True, eq=False)
class RsSystem:
    S: Callable[[Operator, np.ndarray], np.ndarray]
    R: Callable[[np.ndarray, np.ndarray], np.ndarray]
    K: DualBall | FinitePoints
    measure: AtomicMeasure
    space: NormedSpace
    # tells the ball search that k -> sum |R|^p is convex for this p
    convex_in_k: Callable[[float], bool] = field(default=_never)
    name: str = "custom"
    # optional closed-form route to the sup over K: (f, g, p, config) -> EstimateReport
    rhs_sup: Callable | None = None
    # optional analytic search direction: (u, q, p, config) -> (Z -> (ratio, direction))
    ratio_grad: Callable | None = None


@dataclass
class RsWitness:
    f: SimpleFunction
    g: ScalarWeighting
    ratio: float
    q: float
    p: float
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {
            "f": self.f.to_dict(),
            "g": [float(v) for v in self.g.values],
            "ratio": self.ratio,
            "q": self.q,
            "p": self.p,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


def _check(system: RsSystem, f: SimpleFunction, g):
    if f.measure != system.measure:
        raise InputError("function lives on a different measure")
    if f.codomain.dim != system.space.dim:
        raise InputError("function values have the wrong dimension")
    g = g.values if isinstance(g, ScalarWeighting) else np.asarray(g, dtype=float).reshape(-1)
    if g.size != len(system.measure):
        raise InputError(f"g has {g.size} values for {len(system.measure)} atoms")
    return g


def _atomwise(fn, values, g):
    """out[i] = fn(g[i] * values)[i], calling fn once per distinct g value."""
    out = np.empty(g.size)
    cache = {}
    for i, gi in enumerate(g):
        key = float(gi)
        if key not in cache:
            cache[key] = np.asarray(fn(key * values), dtype=float)
        out[i] = cache[key][i]
    return out


def s_values(system: RsSystem, u: Operator, f: SimpleFunction, g) -> np.ndarray:
    g = _check(system, f, g)
    return _atomwise(lambda vals: system.S(u, vals), f.values, g)


def rs_lhs(system: RsSystem, u: Operator, f: SimpleFunction, g, q: float) -> float:
    return lp_norm(system.measure, s_values(system, u, f, g), q)


def _rhs_objective(system: RsSystem, f: SimpleFunction, g, p: float):
    g = _check(system, f, g)
    if not (1.0 <= p < math.inf):
        raise ParameterError(f"p must lie in [1, inf), got {p}")
    measure = system.measure

    def objective(k):
        return lp_norm(measure, _atomwise(lambda vals: system.R(vals, k), f.values, g), p)

    return objective


def rs_rhs_search(system: RsSystem, f: SimpleFunction, g, p: float, config: SearchConfig) -> EstimateReport:
    objective = _rhs_objective(system, f, g, p)
    K = system.K
    if system.rhs_sup is not None:
        return system.rhs_sup(f, _check(system, f, g), p, config)
    if isinstance(K, FinitePoints):
        vals = [objective(k) for k in K.points]
        j = int(np.argmax(vals))
        return EstimateReport(float(vals[j]), K.points[j].copy(), evaluations=len(vals),
                              seed=config.seed, telemetry={"method": "finite"})
    return maximize_over_ball(objective, K.space, config, convex=system.convex_in_k(p))


def rs_rhs(system: RsSystem, f: SimpleFunction, g, p: float, config: SearchConfig) -> float:
    return rs_rhs_search(system, f, g, p, config).value


def rs_ratio(system, u, f, g, q, p, config) -> float:
    rhs = rs_rhs(system, f, g, p, config)
    if rhs == 0.0:
        raise DegenerateFamilyError("right-hand side vanishes")
    return rs_lhs(system, u, f, g, q) / rhs


def _to_float_fraction(v, name):
    v = float(v)
    if not math.isfinite(v) or v < 1.0:
        raise ParameterError(f"{name} must be a finite real >= 1, got {v}")
    return Fraction(v)


def inclusion_condition(p1: float, p2: float, q1: float, q2: float) -> bool:
    """Gate of the inclusion RS(q1, p1) in RS(q2, p2), decided in exact arithmetic."""
    P1, P2 = _to_float_fraction(p1, "p1"), _to_float_fraction(p2, "p2")
    Q1, Q2 = _to_float_fraction(q1, "q1"), _to_float_fraction(q2, "q2")
    return P1 <= P2 and Q1 <= Q2 and (1 / P1 - 1 / P2) <= (1 / Q1 - 1 / Q2)


def inclusion_bound(measure: AtomicMeasure, c1: float, p1, p2, q1, q2) -> float:
    """Constant C1 * C_{p,q} bounding the (q2, p2) constant, 1/p = 1/p1 - 1/p2, 1/q = 1/q1 - 1/q2."""
    if not inclusion_condition(p1, p2, q1, q2):
        raise ParameterError("inclusion condition fails")
    inv_p = Fraction(1) / Fraction(p1) - Fraction(1) / Fraction(p2)
    inv_q = Fraction(1) / Fraction(q1) - Fraction(1) / Fraction(q2)
    if inv_p == inv_q:
        return float(c1)
    wmin = float(measure.weights.min())
    if inv_p == 0:
        # sup norm against L_q
        return float(c1) * wmin ** (-float(inv_q))
    return float(c1) * embedding_constant(measure, 1.0 / float(inv_p), 1.0 / float(inv_q))


def amplification_exponent(q1: float, q2: float) -> float:
    """q2 / q with 1/q = 1/q1 - 1/q2."""
    if q1 == q2:
        raise ParameterError("q1 = q2 leaves the amplification exponent undefined")
    if not q1 < q2:
        raise ParameterError("amplification needs q1 < q2")
    return q2 / q1 - 1.0


def amplification_weights(system: RsSystem, u: Operator, f: SimpleFunction, g, q1, q2) -> np.ndarray:
    expo = amplification_exponent(q1, q2)
    S = np.abs(s_values(system, u, f, g))
    lam = np.zeros_like(S)
    live = S > 0
    lam[live] = S[live] ** expo
    return lam


def amplification_sides(system: RsSystem, u: Operator, f: SimpleFunction, g, q1, q2):
    """(sum nu |S(u, lam g f)|^q1, sum nu |S(u, g f)|^q2): equal by homogeneity of S."""
    g = _check(system, f, g)
    lam = amplification_weights(system, u, f, g, q1, q2)
    w = system.measure.weights
    left = float(np.dot(w, np.abs(s_values(system, u, f, lam * g)) ** q1))
    right = float(np.dot(w, np.abs(s_values(system, u, f, g)) ** q2))
    return left, right


def amplify_witness(system: RsSystem, u: Operator, w: RsWitness, q1, q2, p1, p2,
                    config: SearchConfig | None = None) -> RsWitness:
    """Reweight g by lam = |S(u, g f)|^(q2/q); evaluates the result at exponents (q1, p1)."""
    if q1 == q2:
        raise ParameterError("q1 = q2 leaves the amplification exponent undefined")
    if not (q1 < q2 and inclusion_condition(p1, p2, q1, q2)):
        raise ParameterError("amplification needs q1 < q2 and the inclusion condition")
    if not w.rhs > 0:
        raise InputError("witness has a vanishing right-hand side")
    config = config or SearchConfig()
    lam = amplification_weights(system, u, w.f, w.g.values, q1, q2)
    g_new = ScalarWeighting(lam * w.g.values, system.measure)
    lhs = rs_lhs(system, u, w.f, g_new, q1)
    rhs = rs_rhs(system, w.f, g_new, p1, config)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return RsWitness(w.f, g_new, ratio, q1, p1, lhs, rhs)


def rs_constant_lb(system: RsSystem, u: Operator, q: float, p: float, k_max: int,
                   config: SearchConfig | None = None) -> EstimateReport:
    """Lower bound on the least RS constant by joint search over (f, g).

    For support size k the unknowns are f on the first k atoms and g there,
    packed as a (k, dim + 1) array whose last column is g.
    """
    config = config or SearchConfig()
    if not (q >= 1 and p >= 1):
        raise ParameterError("q and p must be at least 1")
    X = system.space
    d, m = X.dim, len(system.measure)
    k_max = min(int(k_max), m)
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    light = config.light()

    rows = [r for r in np.asarray(u.matrix) if np.any(r)]
    rows.sort(key=lambda r: -X.dual.norm(r))
    guesses = [norming_vector(X, r) for r in rows]

    best, per_k, all_values, evals = None, {}, [], 0
    for k in range(1, k_max + 1):
        def normalize(Z):
            fn = float(np.max(row_norms(X, Z[:, :d])))
            gn = float(np.max(np.abs(Z[:, d])))
            if fn == 0 or gn == 0 or not (math.isfinite(fn) and math.isfinite(gn)):
                return None
            out = Z.copy()
            out[:, :d] /= fn
            out[:, d] /= gn
            return out

        def ratio(Z, cfg=light):
            f, g = _unpack(system, Z)
            return rs_ratio(system, u, f, g, q, p, cfg)

        def certify(Z):
            f, g = _unpack(system, Z)
            return rs_ratio(system, u, f, g, q, p, config)

        starts = []
        if guesses:
            Z0 = np.ones((k, d + 1))
            for i in range(k):
                Z0[i, :d] = guesses[i % len(guesses)]
            starts.append(Z0)
        try:
            vg = None if system.ratio_grad is None else system.ratio_grad(u, q, p, light)
            rep = maximize_family_ratio(ratio, X, k, config, value_and_grad=vg, starts=starts,
                                        normalize=normalize, certify=certify, shape=(k, d + 1))
        except EstimationError:
            per_k[k] = None
            continue
        evals += rep.evaluations
        per_k[k] = rep.value
        all_values.extend(rep.telemetry["restart_values"])
        if best is None or rep.value > best[0].value:
            best = (rep, k)
    if best is None:
        raise EstimationError("every restart degenerated for every support size")
    rep, k = best
    f, g = _unpack(system, rep.witness)
    lhs = rs_lhs(system, u, f, g, q)
    rhs = rs_rhs(system, f, g, p, config)
    witness = RsWitness(f, ScalarWeighting(g, system.measure), lhs / rhs, q, p, lhs, rhs)
    return EstimateReport(
        witness.ratio, witness, evaluations=evals, seed=config.seed,
        telemetry={"best_support": k, "values_by_support": per_k, "restart_values": all_values},
    )


def _unpack(system: RsSystem, Z):
    k, d = Z.shape[0], system.space.dim
    m = len(system.measure)
    vals = np.zeros((m, d))
    vals[:k] = Z[:, :d]
    g = np.zeros(m)
    g[:k] = Z[:, d]
    return SimpleFunction(vals, system.measure, system.space), g


def sigma_system(domain: NormedSpace, sigma: float, atoms: int) -> RsSystem:
    """Counting-measure instantiation with S(u, f)(i) = |u f(i)| and
    R(f, x')(i) = |<f(i), x'>|^(1 - sigma) |f(i)|^sigma."""
    if not 0.0 <= sigma < 1.0:
        raise ParameterError("sigma must lie in [0, 1)")

    def S(u, vals):
        return row_norms(u.codomain, u.apply_rows(vals))

    def R(vals, xp):
        t = np.abs(vals @ xp)
        return t ** (1.0 - sigma) * row_norms(domain, vals) ** sigma

    def rhs_sup(f, g, p, config):
        # R is 1-homogeneous in f, so the sup is Phi_{p,sigma} of g f
        return phi_search(f.with_values(g[:, None] * f.values), p, sigma, config)

    def ratio_grad(u, q, p, config):
        d = domain.dim

        def value_and_grad(Z):
            F, g = Z[:, :d], Z[:, d]
            H = g[:, None] * F
            logw = np.zeros(len(H))
            logL, GL = image_log_sum_grad(u, H, logw, q)
            if logL == -math.inf:
                return 0.0, np.zeros_like(Z)
            logH, pieces = dual_sup_pieces(domain, H, logw, sigma * p, (1.0 - sigma) * p, config, config.epsilon)
            if logH == -math.inf:
                raise DegenerateFamilyError("right-hand side vanishes")
            D = ratio_direction(GL / q, 1.0 / p, pieces)
            # chain rule through H = g f
            G = np.empty_like(Z)
            G[:, :d] = g[:, None] * D
            G[:, d] = np.sum(D * F, axis=1)
            return math.exp(logL / q - logH / p), G

        return value_and_grad

    return RsSystem(
        S, R, DualBall(domain.dual), AtomicMeasure.counting(atoms), domain,
        convex_in_k=lambda p: (1.0 - sigma) * p >= 1.0, name="sigma",
        rhs_sup=rhs_sup, ratio_grad=ratio_grad,
    )


def finite_toy_system(space: NormedSpace, points, measure: AtomicMeasure) -> RsSystem:
    """S(u, f)(i) = |u f(i)|, R(f, k)(i) = |<f(i), k>| with K an explicit point list."""

    def S(u, vals):
        return row_norms(u.codomain, u.apply_rows(vals))

    def R(vals, k):
        return np.abs(vals @ k)

    return RsSystem(S, R, FinitePoints(points), measure, space, name="finite-toy")
