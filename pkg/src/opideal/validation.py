"""Brute-force checks of the closed-form oracles.

Every check here recomputes the summing ratio from scratch with plain numpy:
sups over a two-dimensional dual ball are taken over a dense sample of its
boundary, and families are enumerated or drawn at random. Nothing in this
module calls the ascent engines, so agreement is an independent confirmation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import AtomicMeasure, embedding_constant
from .oracles import hilbert_schmidt_oracle, pi1_upper_oracle, rank_one_oracle
from .optim import restart_rng
from .spaces import NormedSpace, Operator

GRID = 20000


@dataclass(frozen=True)
class OracleCheck:
    name: str
    oracle: float
    brute: float
    rel_error: float
    passed: bool
    mode: str  # "attained": brute must match; "cap": brute may only fall short

    def to_dict(self) -> dict:
        return {
            "name": self.name, "oracle": self.oracle, "brute": self.brute,
            "rel_error": self.rel_error, "passed": self.passed, "mode": self.mode,
        }


def _lr(X, r, w):
    A = np.abs(np.atleast_2d(X))
    if math.isinf(r):
        return np.max(w * A, axis=-1)
    return np.sum(w * A ** r, axis=-1) ** (1.0 / r)


def dual_ball_boundary(space: NormedSpace, n: int = GRID) -> np.ndarray:
    """n points on the unit sphere of the dual of a 2-dimensional space."""
    if space.dim != 2:
        raise ValueError("boundary sampling is implemented for dimension 2")
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    V = np.column_stack([np.cos(t), np.sin(t)])
    D = space.dual
    V = V / _lr(V, D.r, D.weights)[:, None]
    # the vertices of a polyhedral ball are not on an angular grid
    if D.is_polyhedral:
        V = np.vstack([V, D.vertices()])
    return V


def brute_ratio(u: Operator, F, q, p, sigma, boundary) -> float:
    """The (q, p, sigma) ratio with the dual sup taken over sampled boundary points."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    X, Y = u.domain, u.codomain
    s_lhs = q / (1.0 - sigma)
    s_rhs = p / (1.0 - sigma)
    lhs = np.sum(_lr(F @ u.matrix.T, Y.r, Y.weights) ** s_lhs) ** (1.0 / s_lhs)
    xn = _lr(F, X.r, X.weights)
    pair = np.abs(boundary @ F.T)
    rhs = np.max(np.sum((pair ** (1.0 - sigma) * xn ** sigma) ** s_rhs, axis=1)) ** (1.0 / s_rhs)
    return float(lhs / rhs)


def _check(name, oracle, brute, tol, mode) -> OracleCheck:
    rel = abs(brute - oracle) / oracle if oracle else abs(brute)
    if mode == "cap":
        passed = brute <= oracle * (1.0 + tol)
    else:
        passed = rel <= tol
    return OracleCheck(name, float(oracle), float(brute), float(rel), bool(passed), mode)


def _random_families(rng, dim, sizes, per_size):
    for k in sizes:
        for _ in range(per_size):
            yield rng.standard_normal((k, dim))


PARAM_GRID = ((1.0, 1.0, 0.0), (2.0, 1.0, 0.3), (2.0, 2.0, 0.0), (4.0, 2.0, 0.7))


def check_rank_one(seed: int = 0, tol: float = 1e-3, instances: int = 4) -> list[OracleCheck]:
    """Rank-one value at k = 1 by line search over directions, and the cap at k = 2, 3."""
    out = []
    t = np.linspace(0.0, np.pi, GRID, endpoint=False)
    dirs = np.column_stack([np.cos(t), np.sin(t)])
    exps = [(1.0, 2.0), (2.0, 1.0), (math.inf, 2.0), (2.0, math.inf), (3.0, 1.5)]
    for j in range(instances):
        rng = restart_rng(seed, j)
        r1, r2 = exps[j % len(exps)]
        X, Y = NormedSpace(2, r1), NormedSpace(2, r2)
        u = Operator.rank_one(rng.standard_normal(2), rng.standard_normal(2), X, Y)
        oracle = rank_one_oracle(u)
        bnd = dual_ball_boundary(X)
        for q, p, sigma in PARAM_GRID:
            tag = f"rank-one #{j} l_{r1:g}->l_{r2:g} (q,p,s)=({q:g},{p:g},{sigma:g})"
            best = max(brute_ratio(u, d, q, p, sigma, bnd) for d in dirs[::20])
            out.append(_check(tag + " k=1", oracle, best, tol, "attained"))
            cap = max(brute_ratio(u, F, q, p, sigma, bnd)
                      for F in _random_families(rng, 2, (2, 3), 40))
            out.append(_check(tag + " k<=3 cap", oracle, cap, tol, "cap"))
    return out


def check_hilbert_schmidt(seed: int = 0, tol: float = 1e-3) -> list[OracleCheck]:
    """Identity on l_2^2 at (2, 2, 0): orthonormal families attain, random ones stay below."""
    X = NormedSpace(2, 2.0)
    u = Operator.identity(X)
    oracle = hilbert_schmidt_oracle(u)
    bnd = dual_ball_boundary(X)
    t = np.linspace(0.0, np.pi / 2, 200)
    best = max(
        brute_ratio(u, [[math.cos(a), math.sin(a)], [-math.sin(a), math.cos(a)]], 2, 2, 0, bnd)
        for a in t
    )
    rng = restart_rng(seed, 0)
    cap = max(brute_ratio(u, F, 2, 2, 0, bnd) for F in _random_families(rng, 2, (1, 2, 3, 4), 100))
    return [
        _check("Hilbert-Schmidt n=2 orthonormal", oracle, best, tol, "attained"),
        _check("Hilbert-Schmidt n=2 random families cap", oracle, cap, tol, "cap"),
    ]


def check_pi1_column_sum(seed: int = 0, tol: float = 1e-3) -> list[OracleCheck]:
    """l_inf^2 domain: the unit vectors attain the column sum; random families stay below it."""
    X = NormedSpace(2, math.inf)
    cases = [
        ("identity l_inf^2", Operator.identity(X)),
        ("diag(1,2) l_inf^2 -> l_2^2", Operator(np.diag([1.0, 2.0]), X, NormedSpace(2, 2.0))),
    ]
    rng = restart_rng(seed, 1)
    A = rng.standard_normal((2, 2))
    cases.append(("random l_inf^2 -> l_1^2", Operator(A, X, NormedSpace(2, 1.0))))
    bnd = dual_ball_boundary(X)
    out = []
    for name, u in cases:
        oracle = pi1_upper_oracle(u)
        attained = brute_ratio(u, np.eye(2), 1, 1, 0, bnd)
        out.append(_check(f"pi_1 {name} unit vectors", oracle, attained, tol, "attained"))
        for q, p, sigma in PARAM_GRID:
            cap = max(brute_ratio(u, F, q, p, sigma, bnd)
                      for F in _random_families(rng, 2, (1, 2, 3), 40))
            out.append(_check(f"pi_1 {name} cap (q,p,s)=({q:g},{p:g},{sigma:g})", oracle, cap, tol, "cap"))
    return out


def embedding_sample_sup(measure: AtomicMeasure, s: float, r: float, samples: int, rng) -> tuple[float, int]:
    """Largest |g|_s / |g|_r over random g of every support size plus all atom indicators.

    Returns the sup and the index of the sample attaining it (indicators come first).
    """
    w = measure.weights
    n = len(w)
    G = rng.standard_normal((samples, n))
    # sparsify: each row keeps a random number of atoms
    keep = rng.random((samples, n)) < rng.random((samples, 1))
    G = np.where(keep, G, 0.0)
    G = np.vstack([np.eye(n), G])
    G = G[np.any(G != 0.0, axis=1)]
    ns = np.sum(w * np.abs(G) ** s, axis=1) ** (1.0 / s)
    nr = np.sum(w * np.abs(G) ** r, axis=1) ** (1.0 / r)
    ratios = ns / nr
    i = int(np.argmax(ratios))
    return float(ratios[i]), i


def check_embedding(seed: int = 0, tol: float = 1e-3, measures: int = 5,
                    samples: int = 20000) -> list[OracleCheck]:
    out = []
    for j in range(measures):
        rng = restart_rng(seed, 1000 + j)
        n = int(rng.integers(1, 6))
        mu = AtomicMeasure(np.exp(rng.uniform(-2.0, 2.0, n)))
        r = float(rng.uniform(1.0, 3.0))
        s = r + float(rng.uniform(0.1, 3.0))
        sup, _ = embedding_sample_sup(mu, s, r, samples, rng)
        out.append(_check(f"embedding C_(s,r) measure #{j} n={n}", embedding_constant(mu, s, r), sup, tol, "attained"))
    return out


def validate_oracles(seed: int = 0, tol: float = 1e-3) -> list[OracleCheck]:
    return (
        check_rank_one(seed, tol)
        + check_hilbert_schmidt(seed, tol)
        + check_pi1_column_sum(seed, tol)
        + check_embedding(seed, tol)
    )
