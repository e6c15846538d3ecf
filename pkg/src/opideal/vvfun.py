"""Vector-valued simple functions on atomic measures and their seminorms.

For f with values f(i) on atoms of weight w_i:

    Phi_{p,s}(f) = sup_{x' in B_{X*}} (sum_i w_i (|<f(i), x'>|^(1-s) |f(i)|^s)^p)^(1/p)
    |f|_{p,s}    = inf { sum_j Phi_{p,s}(f_j) : f = sum_j f_j }
    Bochner      = (sum_i w_i |f(i)|^r)^(1/r)

and for an operator u the composition f -> u o f is measured from
(|.|_{p,s}, p = 1/(1-s)) to the Bochner norm with the same exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._family import (
    dual_sup,
    dual_sup_grad,
    image_log_sum_grad,
    power_mean,
)
from .errors import DegenerateFamilyError, InputError, ParameterError
from .measures import AtomicMeasure
from .optim import EstimateReport, Oracle, SearchConfig, maximize_family_ratio
from .oracles import rank_one_oracle
from .spaces import NormedSpace, Operator, norming_vector, row_norms

MAX_SIGMA = 0.95


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    values: np.ndarray
    measure: AtomicMeasure
    codomain: NormedSpace

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1 and self.codomain.dim == 1:
            v = v[:, None]
        if v.shape != (len(self.measure), self.codomain.dim):
            raise InputError(
                f"values have shape {v.shape}, expected ({len(self.measure)}, {self.codomain.dim})"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: SimpleFunction) -> SimpleFunction:
        return SimpleFunction(self.values + other.values, self.measure, self.codomain)

    def __sub__(self, other: SimpleFunction) -> SimpleFunction:
        return SimpleFunction(self.values - other.values, self.measure, self.codomain)

    def __mul__(self, alpha: float) -> SimpleFunction:
        return SimpleFunction(alpha * self.values, self.measure, self.codomain)

    __rmul__ = __mul__

    def with_values(self, values) -> SimpleFunction:
        return SimpleFunction(values, self.measure, self.codomain)

    def compose(self, u: Operator) -> SimpleFunction:
        if u.domain != self.codomain:
            raise InputError("operator domain does not match the function's codomain")
        return SimpleFunction(u.apply_rows(self.values), self.measure, u.codomain)

    def refine(self, levels: int = 1) -> SimpleFunction:
        return SimpleFunction(np.repeat(self.values, 2**levels, axis=0), self.measure.refine(levels), self.codomain)

    @classmethod
    def constant(cls, x, measure: AtomicMeasure, codomain: NormedSpace) -> SimpleFunction:
        return cls(np.tile(np.asarray(x, dtype=float), (len(measure), 1)), measure, codomain)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure.to_dict(),
            "values": self.values.tolist(),
            "codomain": self.codomain.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, codomain: NormedSpace | None = None) -> SimpleFunction:
        cod = codomain if codomain is not None else NormedSpace.from_dict(d["codomain"])
        return cls(d["values"], AtomicMeasure.from_dict(d["measure"]), cod)


@dataclass(frozen=True)
class Decomposition:
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise InputError("a decomposition needs at least one part")
        first = self.parts[0]
        for h in self.parts[1:]:
            if h.measure != first.measure or h.codomain != first.codomain:
                raise InputError("parts must share measure and codomain")

    def total(self) -> SimpleFunction:
        return self.parts[0].with_values(sum(h.values for h in self.parts))

    def check(self, f: SimpleFunction, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.total().values, f.values, rtol=0.0, atol=atol))


def _check_p_sigma(p, sigma, allow_one=True):
    if not (1.0 <= p < math.inf):
        raise ParameterError(f"p must lie in [1, inf), got {p}")
    hi_ok = sigma <= 1.0 if allow_one else sigma < 1.0
    if not (0.0 <= sigma and hi_ok):
        raise ParameterError(f"sigma out of range: {sigma}")
    if MAX_SIGMA < sigma < 1.0:
        raise ParameterError(f"sigma > {MAX_SIGMA} is refused (exponents too large for double precision)")


def bochner_norm(f: SimpleFunction, r: float) -> float:
    if not (1.0 <= r < math.inf):
        raise ParameterError(f"r must lie in [1, inf), got {r}")
    n = row_norms(f.codomain, f.values)
    with np.errstate(divide="ignore"):
        return power_mean(np.log(f.measure.weights), n, r)


def _phi_shape(f: SimpleFunction, p, sigma):
    """(log weights, alpha, theta) of the power sum inside Phi_{p,sigma}."""
    return np.log(f.measure.weights), sigma * p, (1.0 - sigma) * p


def phi_search(f: SimpleFunction, p: float, sigma: float, config: SearchConfig) -> EstimateReport:
    """Phi_{p,sigma}(f) with the maximizing functional as witness."""
    _check_p_sigma(p, sigma)
    if sigma == 1.0:
        return EstimateReport(bochner_norm(f, p), None, seed=config.seed, telemetry={"method": "bochner"})
    logw, alpha, theta = _phi_shape(f, p, sigma)
    _, _, rep = dual_sup(f.codomain, f.values, logw, alpha, theta, config, outer=1.0 / p)
    return rep


def phi_seminorm(f: SimpleFunction, p: float, sigma: float, config: SearchConfig | None = None) -> float:
    config = config or SearchConfig()
    _check_p_sigma(p, sigma)
    if sigma == 1.0:
        # the pairing factor carries exponent 0
        return bochner_norm(f, p)
    if not np.any(f.values):
        return 0.0
    return phi_search(f, p, sigma, config).value


def phi_value_grad(X: NormedSpace, F, logw, p, sigma, config: SearchConfig):
    """(Phi, dPhi/dF) for values F, gradient via the maximizing functional."""
    if not np.any(F):
        return 0.0, np.zeros_like(F)
    alpha, theta = sigma * p, (1.0 - sigma) * p
    logH, xp, _ = dual_sup(X, F, logw, alpha, theta, config)
    if logH == -math.inf:
        return 0.0, np.zeros_like(F)
    val = math.exp(logH / p)
    G = dual_sup_grad(X, F, logw, alpha, theta, xp, logH, config.epsilon)
    return val, (val / p) * G


def convex_seminorm_search(f: SimpleFunction, p: float, sigma: float, m: int,
                           config: SearchConfig | None = None):
    """Upper bound on |f|_{p,sigma} over decompositions into at most m parts.

    Part counts 1..m are searched in turn; the search at m parts starts from
    the best (m-1)-part decomposition padded with a zero part, so the bound
    never increases with m. Each candidate's parts are re-evaluated with the
    full ``config`` before it is compared. Returns (value, Decomposition).
    """
    config = config or SearchConfig()
    _check_p_sigma(p, sigma)
    if int(m) != m or m < 1:
        raise ParameterError("number of parts must be a positive integer")
    best = phi_seminorm(f, p, sigma, config)
    best_parts = [f.values]
    if m == 1 or best == 0.0:
        return best, Decomposition(tuple(f.with_values(v) for v in best_parts))

    X = f.codomain
    logw = np.log(f.measure.weights)
    c = float(np.max(row_norms(X, f.values)))
    fs = f.values / c
    light = config.light()

    for mm in range(2, int(m) + 1):
        def split(P):
            return list(P) + [fs - P.sum(axis=0)]

        # maximizing -J reuses the family-search engine; no rescaling here
        def neg_total(P):
            total, grads = 0.0, []
            for h in split(P):
                v, G = phi_value_grad(X, h, logw, p, sigma, light)
                total += v
                grads.append(G)
            return -total, -(np.stack(grads[:-1]) - grads[-1][None])

        def certified(P):
            return -sum(phi_seminorm(f.with_values(h), p, sigma, config) for h in split(P))

        start = np.stack([v / c for v in best_parts])
        rep = maximize_family_ratio(
            None, X, mm - 1, config,
            value_and_grad=neg_total, starts=[start],
            normalize=lambda P: P, certify=certified, shape=(mm - 1,) + fs.shape,
        )
        cand = -rep.value * c
        if cand < best:
            best = cand
            best_parts = [h * c for h in split(rep.witness)]
        else:
            best_parts = best_parts + [np.zeros_like(fs)]
    return best, Decomposition(tuple(f.with_values(v) for v in best_parts))


def convex_seminorm_ub(f: SimpleFunction, p: float, sigma: float, m: int,
                       config: SearchConfig | None = None) -> float:
    return convex_seminorm_search(f, p, sigma, m, config)[0]


def subadditivity_gap(f1: SimpleFunction, f2: SimpleFunction, p, sigma, config=None) -> float:
    """Phi(f1) + Phi(f2) - Phi(f1 + f2); negative means Phi is not subadditive there."""
    config = config or SearchConfig()
    return (phi_seminorm(f1, p, sigma, config) + phi_seminorm(f2, p, sigma, config)
            - phi_seminorm(f1 + f2, p, sigma, config))


def search_subadditivity_violation(codomain: NormedSpace, measure: AtomicMeasure, p, sigma,
                                   trials: int, config: SearchConfig | None = None) -> dict:
    """Random search for a pair with Phi(f1 + f2) > Phi(f1) + Phi(f2).

    Phi values are search estimates, so a reported violation is a candidate
    to be confirmed, not a proof.
    """
    config = config or SearchConfig()
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5AB]))
    shape = (len(measure), codomain.dim)
    worst = None
    for _ in range(int(trials)):
        f1 = SimpleFunction(rng.standard_normal(shape), measure, codomain)
        f2 = SimpleFunction(rng.standard_normal(shape), measure, codomain)
        gap = subadditivity_gap(f1, f2, p, sigma, config)
        if worst is None or gap < worst["gap"]:
            worst = {"gap": gap, "f1": f1.values.tolist(), "f2": f2.values.tolist()}
    worst["violation"] = worst["gap"] < -1e-9 if worst else False
    return worst


def composition_ratio(u: Operator, f: SimpleFunction, sigma: float, m_parts: int,
                      config: SearchConfig | None = None) -> float:
    """|u o f|_{B_s} / (upper bound on |f|_{s,sigma}), s = 1/(1 - sigma)."""
    config = config or SearchConfig()
    s = 1.0 / (1.0 - sigma)
    den = convex_seminorm_ub(f, s, sigma, m_parts, config)
    if den == 0.0:
        raise DegenerateFamilyError("zero function")
    return bochner_norm(f.compose(u), s) / den


def composition_norm_lb(u: Operator, sigma: float, measure: AtomicMeasure, m_parts: int = 2,
                        config: SearchConfig | None = None) -> EstimateReport:
    """Lower bound on the norm of f -> u o f from (|.|_{s,sigma}) to Bochner L_s, s = 1/(1-sigma).

    The search maximizes |u o f| / Phi(f); the best function is then scored
    against the decomposition bound on |f|_{s,sigma}, which is never larger
    than Phi(f), so the final ratio is still a lower bound.
    """
    config = config or SearchConfig()
    _check_p_sigma(1.0, sigma, allow_one=False)
    X = u.domain
    s = 1.0 / (1.0 - sigma)
    logw = np.log(measure.weights)
    light = config.light()
    n = len(measure)

    def value_and_grad(F):
        logB, GB = image_log_sum_grad(u, F, logw, s)
        if logB == -math.inf:
            return 0.0, np.zeros_like(F)
        alpha, theta = sigma * s, 1.0
        logH, xp, _ = dual_sup(X, F, logw, alpha, theta, light)
        if logH == -math.inf:
            raise DegenerateFamilyError("zero function")
        GH = dual_sup_grad(X, F, logw, alpha, theta, xp, logH, config.epsilon)
        return math.exp(logB / s - logH / s), GB / s - GH / s

    def phi_ratio(F):
        f = SimpleFunction(F, measure, X)
        den = phi_seminorm(f, s, sigma, config)
        if den == 0.0:
            raise DegenerateFamilyError("zero function")
        return bochner_norm(f.compose(u), s) / den

    starts = []
    rows = [r for r in u.matrix if np.any(r)]
    if rows:
        top = max(rows, key=lambda r: u.domain.dual.norm(r))
        starts.append(np.tile(norming_vector(X, top), (n, 1)))

    rep = maximize_family_ratio(None, X, n, config, value_and_grad=value_and_grad,
                                starts=starts, certify=phi_ratio)
    f = SimpleFunction(rep.witness, measure, X)
    value = composition_ratio(u, f, sigma, m_parts, config)
    r1 = rank_one_oracle(u)
    oracle = Oracle(r1, "rank-one |a| |y| (= pi_1^sigma)") if r1 is not None else None
    if not np.any(u.matrix):
        oracle = Oracle(0.0, "zero operator")
    tel = dict(rep.telemetry)
    tel.update({"phi_ratio": rep.value, "m_parts": m_parts, "exponent": s})
    return EstimateReport(value, f, oracle=oracle, evaluations=rep.evaluations,
                          seed=config.seed, telemetry=tel)
