"""Finite atomic measures, scalar L_p norms on them, and embedding constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise InputError("a measure needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ParameterError("atom weights must be finite and positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    def __repr__(self):
        return f"AtomicMeasure(atoms={len(self)}, total={self.total:g})"

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def counting(cls, n: int) -> AtomicMeasure:
        return cls(np.ones(n))

    @classmethod
    def uniform(cls, n: int, total: float = 1.0) -> AtomicMeasure:
        return cls(np.full(n, total / n))

    def refine(self, levels: int = 1) -> AtomicMeasure:
        """Split every atom into 2**levels atoms of equal weight."""
        k = 2**levels
        return AtomicMeasure(np.repeat(self.weights / k, k))

    def to_dict(self) -> dict:
        return {"weights": [float(v) for v in self.weights]}

    @classmethod
    def from_dict(cls, d: dict) -> AtomicMeasure:
        return cls(d["weights"])


@dataclass(frozen=True, eq=False)
class ScalarWeighting:
    values: np.ndarray
    host: AtomicMeasure

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != len(self.host):
            raise InputError(f"weighting has {v.size} values for {len(self.host)} atoms")
        object.__setattr__(self, "values", v)


def _values(measure: AtomicMeasure, g) -> np.ndarray:
    if isinstance(g, ScalarWeighting):
        if g.host != measure:
            raise InputError("weighting lives on a different measure")
        return g.values
    v = np.asarray(g, dtype=float).reshape(-1)
    if v.size != len(measure):
        raise InputError(f"expected {len(measure)} values, got {v.size}")
    return v


def lp_norm(measure: AtomicMeasure, g, p: float) -> float:
    """(sum_i w_i |g_i|^p)^(1/p)."""
    if not (1.0 <= p < math.inf):
        raise ParameterError(f"p must lie in [1, inf), got {p}")
    a = np.abs(_values(measure, g))
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * float(np.dot(measure.weights, (a / m) ** p)) ** (1.0 / p)


def embedding_constant(measure: AtomicMeasure, s: float, r: float) -> float:
    """Smallest C with |g|_{L_s} <= C |g|_{L_r} for every g, 1 <= r < s < inf.

    The extremal g is the indicator of a lightest atom, giving
    (min weight)^(1/s - 1/r).
    """
    if not (1.0 <= r < s < math.inf):
        raise ParameterError(f"need 1 <= r < s < inf, got r={r}, s={s}")
    wmin = float(measure.weights.min())
    return wmin ** (1.0 / s - 1.0 / r)
