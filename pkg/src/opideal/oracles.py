"""Closed-form values of summing norms on special operators.

rank one      u = a (x) y:   every (q, p, sigma) norm equals |a|_{X*} |y|_Y
l_inf domain  unit weights:  pi_1 = sum_j |u e_j|, an upper bound for every
                             (q, p, sigma) with p <= q
Hilbert       l_2 -> l_2:    pi_2 = Hilbert-Schmidt norm

Each is re-derived numerically by brute force in ``opideal.validation``.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .optim import Oracle
from .spaces import Operator, norm


def rank_one_factors(u: Operator, rtol: float = 1e-12):
    """(a, y) with u = y a^T, or None when u has rank other than one."""
    U, s, Vt = np.linalg.svd(u.matrix)
    if s.size == 0 or s[0] == 0.0:
        return None
    if s.size > 1 and s[1] > rtol * s[0]:
        return None
    return Vt[0].copy(), s[0] * U[:, 0]


def rank_one_oracle(u: Operator) -> float | None:
    fac = rank_one_factors(u)
    if fac is None:
        return None
    a, y = fac
    return norm(u.domain.dual, a) * norm(u.codomain, y)


def pi1_upper_oracle(u: Operator) -> float:
    """sum_j |u e_j| for u defined on l_inf^n with unit weights."""
    X = u.domain
    if not (math.isinf(X.r) and X.unit_weights):
        raise ParameterError("pi1_upper_oracle needs an l_inf domain with unit weights")
    return float(sum(norm(u.codomain, col) for col in u.matrix.T))


def hilbert_schmidt_oracle(u: Operator) -> float:
    for sp in (u.domain, u.codomain):
        if sp.r != 2.0 or not sp.unit_weights:
            raise ParameterError("Hilbert-Schmidt oracle needs unweighted l_2 spaces")
    return float(np.linalg.norm(u.matrix))


def known_oracle(u: Operator, q: float, p: float, sigma: float) -> Oracle | None:
    """Best available exact value or upper bound for the (q, p, sigma) norm of u."""
    if not np.any(u.matrix):
        return Oracle(0.0, "zero operator")
    r1 = rank_one_oracle(u)
    if r1 is not None:
        return Oracle(r1, "rank-one |a| |y|")
    X, Y = u.domain, u.codomain
    if (q, p, sigma) == (2.0, 2.0, 0.0) and all(s.r == 2.0 and s.unit_weights for s in (X, Y)):
        return Oracle(hilbert_schmidt_oracle(u), "Hilbert-Schmidt")
    if math.isinf(X.r) and X.unit_weights:
        kind = "exact" if (q, p, sigma) == (1.0, 1.0, 0.0) else "upper"
        return Oracle(pi1_upper_oracle(u), "l_inf column sum", kind)
    return None
