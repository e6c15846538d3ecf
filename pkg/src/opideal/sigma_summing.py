"""(q, p, sigma)-absolutely continuous norms of operators between l_r^n spaces.

For a family x_1..x_n the defining ratio is

    (sum |u x_i|^(q/(1-sigma)))^((1-sigma)/q)
    / sup_{x' in B_{X*}} (sum (|<x_i, x'>|^(1-sigma) |x_i|^sigma)^(p/(1-sigma)))^((1-sigma)/p)

and the norm is its sup over all finite families. The inner term simplifies to
|x_i|^(sigma p/(1-sigma)) |<x_i, x'>|^p, a convex function of x' since p >= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._family import (
    dual_objective,
    dual_sup,
    dual_sup_pieces,
    image_log_sum,
    image_log_sum_grad,
    ratio_direction,
)
from .errors import DegenerateFamilyError, InputError, ParameterError
from .measures import AtomicMeasure
from .optim import EstimateReport, SearchConfig, maximize_family_ratio, restart_rng
from .oracles import known_oracle, pi1_upper_oracle, rank_one_oracle  # noqa: F401
from .rs_core import inclusion_bound, inclusion_condition
from .spaces import NormedSpace, Operator, norming_vector

MAX_SIGMA = 0.95

VERDICTS = ("CONSISTENT", "INCONCLUSIVE", "VIOLATION", "NOT-APPLICABLE")


@dataclass(frozen=True)
class SummingParams:
    q: float
    p: float
    sigma: float = 0.0

    def __post_init__(self):
        q, p, s = float(self.q), float(self.p), float(self.sigma)
        if not (1.0 <= p <= q < math.inf):
            raise ParameterError(f"need 1 <= p <= q < inf, got q={q}, p={p}")
        if not (0.0 <= s < 1.0):
            raise ParameterError(f"need 0 <= sigma < 1, got {s}")
        if s > MAX_SIGMA:
            raise ParameterError(f"sigma > {MAX_SIGMA} is refused (exponents too large for double precision)")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", s)

    @property
    def lhs_exponent(self) -> float:
        return self.q / (1.0 - self.sigma)

    @property
    def rhs_exponent(self) -> float:
        return self.p / (1.0 - self.sigma)

    def to_dict(self) -> dict:
        return {"q": self.q, "p": self.p, "sigma": self.sigma}


def _family(space: NormedSpace, family) -> np.ndarray:
    F = np.atleast_2d(np.asarray(family, dtype=float))
    if F.shape[0] == 0 or F.size == 0:
        raise InputError("the family must be nonempty")
    if F.shape[1] != space.dim:
        raise InputError(f"family vectors must have length {space.dim}, got {F.shape[1]}")
    return F


def _rhs_shape(params: SummingParams):
    """(alpha, theta, outer) of the dual-ball power sum."""
    return params.sigma * params.p / (1.0 - params.sigma), params.p, (1.0 - params.sigma) / params.p


def sigma_lhs(u: Operator, family, params: SummingParams) -> float:
    F = _family(u.domain, family)
    s = params.lhs_exponent
    lv = image_log_sum(u, F, np.zeros(F.shape[0]), s)
    return 0.0 if lv == -math.inf else math.exp(lv / s)


def sigma_rhs_search(domain: NormedSpace, family, params: SummingParams,
                     config: SearchConfig | None = None) -> EstimateReport:
    config = config or SearchConfig()
    F = _family(domain, family)
    alpha, theta, outer = _rhs_shape(params)
    return dual_sup(domain, F, np.zeros(F.shape[0]), alpha, theta, config, outer)[2]


def sigma_rhs(domain: NormedSpace, family, params: SummingParams,
              config: SearchConfig | None = None) -> float:
    return sigma_rhs_search(domain, family, params, config).value


def sigma_rhs_at(domain: NormedSpace, family, params: SummingParams, xp) -> float:
    """The right-hand quantity evaluated at one functional xp instead of the sup."""
    F = _family(domain, family)
    alpha, theta, outer = _rhs_shape(params)
    return dual_objective(domain, F, np.zeros(F.shape[0]), alpha, theta, outer)(xp)


def sigma_ratio(u: Operator, family, params: SummingParams, config: SearchConfig | None = None) -> float:
    rhs = sigma_rhs(u.domain, family, params, config)
    if rhs == 0.0:
        raise DegenerateFamilyError("the family is identically zero")
    return sigma_lhs(u, family, params) / rhs


def _search_value_and_grad(u: Operator, params: SummingParams, config: SearchConfig):
    X = u.domain
    s = params.lhs_exponent
    alpha, theta, outer = _rhs_shape(params)

    def value_and_grad(F):
        logw = np.zeros(F.shape[0])
        logL, GL = image_log_sum_grad(u, F, logw, s)
        if logL == -math.inf:
            return 0.0, np.zeros_like(F)
        logH, pieces = dual_sup_pieces(X, F, logw, alpha, theta, config, config.epsilon)
        if logH == -math.inf:
            raise DegenerateFamilyError("the family is identically zero")
        return math.exp(logL / s - outer * logH), ratio_direction(GL / s, outer, pieces)

    return value_and_grad


def _structured_start(u: Operator, k: int, seed: int) -> np.ndarray | None:
    """Unit vectors on which the rows of u attain their norms, largest rows first."""
    X = u.domain
    rows = [r for r in u.matrix if np.any(r)]
    if not rows:
        return None
    rows.sort(key=lambda r: -X.dual.norm(r))
    vecs = [norming_vector(X, r) for r in rows[:k]]
    F = np.array(vecs)
    if k > len(vecs):
        pad = 0.1 * restart_rng(seed, (1 << 32) + k).standard_normal((k - len(vecs), X.dim))
        F = np.vstack([F, pad])
    return F


def default_k_max(u: Operator) -> int:
    return 2 * max(u.domain.dim, u.codomain.dim)


def pi_norm_lb(u: Operator, params: SummingParams, k_max: int | None = None,
               config: SearchConfig | None = None) -> EstimateReport:
    """Lower bound on the (q, p, sigma) norm of u over families of size 1..k_max.

    Searches run with a cheap inner sup; each run's final family is scored
    with the full-effort sup, and only scored values are reported.
    """
    config = config or SearchConfig()
    k_max = default_k_max(u) if k_max is None else int(k_max)
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    vg = _search_value_and_grad(u, params, config.light())

    def certify(F):
        return sigma_ratio(u, F, params, config)

    best, by_k, all_values, evals = None, {}, [], 0
    for k in range(1, k_max + 1):
        start = _structured_start(u, k, config.seed)
        rep = maximize_family_ratio(None, u.domain, k, config, value_and_grad=vg,
                                    starts=[] if start is None else [start], certify=certify)
        by_k[k] = rep.value
        all_values.extend(rep.telemetry["restart_values"])
        evals += rep.evaluations
        if best is None or rep.value > best.value:
            best = rep
    return EstimateReport(
        best.value, best.witness, oracle=known_oracle(u, params.q, params.p, params.sigma),
        evaluations=evals, seed=config.seed,
        telemetry={
            "best_family_size": best.telemetry["family_size"],
            "values_by_family_size": by_k,
            "restart_values": all_values,
        },
    )


@dataclass
class InclusionReport:
    params1: SummingParams
    params2: SummingParams
    gate: bool
    estimate1: EstimateReport
    estimate2: EstimateReport
    verdict: str
    tolerance: float
    # bound on the (q2, p2) norm implied by side 1 through the inclusion theorem
    implied_bound: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params1": self.params1.to_dict(),
            "params2": self.params2.to_dict(),
            "gate": self.gate,
            "estimate1": self.estimate1.to_dict(),
            "estimate2": self.estimate2.to_dict(),
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "implied_bound": self.implied_bound,
            "notes": list(self.notes),
        }


def inclusion_verdict(e1: EstimateReport, e2: EstimateReport, params1: SummingParams,
                      params2: SummingParams, tolerance: float = 1e-6):
    """(verdict, implied bound) for two estimates of the same operator.

    CONSISTENT      side 2 stays below side 1 (oracle if known, else estimate)
    INCONCLUSIVE    no oracle and estimate 2 exceeds estimate 1
    VIOLATION       estimate 2 exceeds a validated oracle of side 1
    NOT-APPLICABLE  the parameter gate fails
    """
    if params1.sigma != params2.sigma:
        raise ParameterError("both parameter sets must share sigma")
    if not inclusion_condition(params1.p, params2.p, params1.q, params2.q):
        return "NOT-APPLICABLE", None
    side1 = e1.oracle.value if e1.oracle is not None else e1.value
    # counting measure, so the embedding factor is 1; scaling all four
    # exponents by 1/(1 - sigma) does not change the gate
    implied = inclusion_bound(AtomicMeasure.counting(1), side1, params1.p, params2.p, params1.q, params2.q)
    if e2.value <= implied * (1.0 + tolerance):
        return "CONSISTENT", implied
    return ("VIOLATION" if e1.oracle is not None else "INCONCLUSIVE"), implied


def corollary_inclusion_check(u: Operator, params1: SummingParams, params2: SummingParams,
                              k_max: int | None = None, config: SearchConfig | None = None,
                              tolerance: float = 1e-6) -> InclusionReport:
    """Estimate both norms and compare them against the inclusion of the (q1, p1) class in the (q2, p2) class."""
    if params1.sigma != params2.sigma:
        raise ParameterError("both parameter sets must share sigma")
    config = config or SearchConfig()
    gate = inclusion_condition(params1.p, params2.p, params1.q, params2.q)
    e1 = pi_norm_lb(u, params1, k_max, config)
    e2 = pi_norm_lb(u, params2, k_max, config)
    verdict, implied = inclusion_verdict(e1, e2, params1, params2, tolerance)
    notes = []
    if gate and e1.oracle is not None:
        notes.append(f"side 1 oracle: {e1.oracle.label} ({e1.oracle.kind})")
    return InclusionReport(params1, params2, gate, e1, e2, verdict, tolerance, implied, notes)
