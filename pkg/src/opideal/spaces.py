"""Weighted sequence spaces l_r^n, their duals, and linear maps between them."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import InputError, ParameterError

FEASIBILITY_SLACK = 1e-12


def _parse_exponent(r) -> float:
    if isinstance(r, str):
        if r.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        r = float(r)
    r = float(r)
    if math.isnan(r) or r < 1.0:
        raise ParameterError(f"exponent must lie in [1, inf], got {r}")
    return r


def conjugate_exponent(r: float) -> float:
    if math.isinf(r):
        return 1.0
    if r == 1.0:
        return math.inf
    return 1.0 / (1.0 - 1.0 / r)


@dataclass(frozen=True, eq=False)
class NormedSpace:
    """l_r^n with norm (sum w_i |x_i|^r)^(1/r), or max w_i |x_i| for r = inf."""

    dim: int
    r: float = 2.0
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "r", _parse_exponent(self.r))
        w = np.ones(self.dim) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != (self.dim,):
            raise InputError(f"weights must have length {self.dim}, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ParameterError("weights must be finite and positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, NormedSpace):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.r == other.r
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.dim, self.r, self.weights.tobytes()))

    def __repr__(self):
        r = "inf" if math.isinf(self.r) else f"{self.r:g}"
        tag = "" if self.unit_weights else ", weighted"
        return f"NormedSpace(l_{r}^{self.dim}{tag})"

    @property
    def unit_weights(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    @property
    def is_polyhedral(self) -> bool:
        return self.r == 1.0 or math.isinf(self.r)

    @cached_property
    def dual(self) -> NormedSpace:
        if math.isinf(self.r):
            d = NormedSpace(self.dim, 1.0, 1.0 / self.weights)
        elif self.r == 1.0:
            d = NormedSpace(self.dim, math.inf, 1.0 / self.weights)
        else:
            d = NormedSpace(self.dim, conjugate_exponent(self.r), self.weights ** (-1.0 / (self.r - 1.0)))
        # so that dual(dual(X)) is X exactly
        d.__dict__["dual"] = self
        return d

    def norm(self, x) -> float:
        return norm(self, x)

    def vertex_count(self, symmetric: bool = False) -> int:
        if self.r == 1.0:
            return self.dim if symmetric else 2 * self.dim
        if math.isinf(self.r):
            return 2 ** (self.dim - 1) if symmetric else 2**self.dim
        raise ParameterError(f"{self!r} is not polyhedral")

    def vertices(self, symmetric: bool = False) -> np.ndarray:
        """Extreme points of the unit ball (one of each +/- pair if ``symmetric``)."""
        n = self.dim
        if self.r == 1.0:
            base = np.diag(1.0 / self.weights)
            return base if symmetric else np.vstack([base, -base])
        if math.isinf(self.r):
            first = [1.0] if symmetric else [1.0, -1.0]
            signs = [
                (s0,) + rest
                for s0 in first
                for rest in itertools.product([1.0, -1.0], repeat=n - 1)
            ]
            return np.array(signs, dtype=float) / self.weights
        raise ParameterError(f"{self!r} is not polyhedral")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "r": "inf" if math.isinf(self.r) else self.r,
            "weights": [float(v) for v in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> NormedSpace:
        return cls(d["dim"], d.get("r", 2.0), d.get("weights"))


@dataclass(frozen=True, eq=False)
class DualPoint:
    coordinates: np.ndarray
    host: NormedSpace

    def __post_init__(self):
        c = np.asarray(self.coordinates, dtype=float)
        if c.shape != (self.host.dim,):
            raise InputError("dual point has wrong dimension")
        if norm(self.host, c) > 1.0 + FEASIBILITY_SLACK:
            raise InputError("dual point lies outside the dual unit ball")
        object.__setattr__(self, "coordinates", c)

    def pair(self, x) -> float:
        return float(np.dot(np.asarray(x, dtype=float), self.coordinates))


def _as_vector(space: NormedSpace, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dim,):
        raise InputError(f"expected a vector of length {space.dim}, got shape {x.shape}")
    return x


def norm(space: NormedSpace, x) -> float:
    return kernels.lr_norm(_as_vector(space, x), space.r, space.weights)


def row_norms(space: NormedSpace, F) -> np.ndarray:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    return np.array([kernels.lr_norm(row, space.r, space.weights) for row in F])


def dual(space: NormedSpace) -> NormedSpace:
    return space.dual


def norming_functional(space: NormedSpace, x) -> DualPoint:
    """Unit dual vector x' with <x, x'> = |x|; sup-norm ties go to the lowest index."""
    x = _as_vector(space, x)
    if not np.any(x):
        raise InputError("the zero vector has no norming functional")
    return DualPoint(kernels.norming(x, space.r, space.weights), space.dual)


def norming_vector(space: NormedSpace, functional) -> np.ndarray:
    """Unit vector of ``space`` on which ``functional`` (dual coordinates) attains its norm."""
    return kernels.norming(np.asarray(functional, dtype=float), space.dual.r, space.dual.weights)


def retract_to_ball(space: NormedSpace, x) -> np.ndarray:
    x = _as_vector(space, x)
    return kernels.retract(x, space.r, space.weights)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense real matrix u : domain -> codomain, shape (codomain.dim, domain.dim)."""

    matrix: np.ndarray
    domain: NormedSpace
    codomain: NormedSpace

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape != (self.codomain.dim, self.domain.dim):
            raise InputError(
                f"matrix shape {m.shape} does not match "
                f"(codomain.dim, domain.dim) = ({self.codomain.dim}, {self.domain.dim})"
            )
        if not np.all(np.isfinite(m)):
            raise InputError("operator matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def apply_rows(self, F) -> np.ndarray:
        """Images of the rows of F."""
        return np.asarray(F, dtype=float) @ self.matrix.T

    def scaled(self, alpha: float) -> Operator:
        return Operator(alpha * self.matrix, self.domain, self.codomain)

    @classmethod
    def identity(cls, space: NormedSpace, codomain: NormedSpace | None = None) -> Operator:
        return cls(np.eye(space.dim), space, codomain or space)

    @classmethod
    def rank_one(cls, a, y, domain: NormedSpace, codomain: NormedSpace) -> Operator:
        """x -> <a, x> y, with a given in dual coordinates."""
        return cls(np.outer(np.asarray(y, float), np.asarray(a, float)), domain, codomain)

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "domain": self.domain.to_dict(),
            "codomain": self.codomain.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Operator:
        return cls(d["matrix"], NormedSpace.from_dict(d["domain"]), NormedSpace.from_dict(d["codomain"]))
