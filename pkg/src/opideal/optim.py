"""Deterministic multi-start maximization over unit balls and over vector families.

Restart ``k`` always draws from a generator seeded by ``(seed, k)``, so the
restarts of a shorter run are a prefix of those of a longer run and the result
does not depend on the order in which restarts are evaluated.
"""
from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .errors import DegenerateFamilyError, EstimationError, ParameterError, SearchError
from .spaces import NormedSpace, row_norms

VERTEX_LIMIT = 4096
MIN_STEP = 1e-10
PATIENCE = 25
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 64
    iterations: int = 500
    step: float = 0.5
    decay: float = 0.97
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise ParameterError("restarts must be a positive integer")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ParameterError("iterations must be a positive integer")
        if not self.step > 0:
            raise ParameterError("initial step must be positive")
        if not 0.0 < self.decay < 1.0:
            raise ParameterError("step decay must lie in (0, 1)")
        if not self.epsilon >= 0:
            raise ParameterError("smoothing epsilon must be nonnegative")
        object.__setattr__(self, "seed", int(self.seed) & _SEED_MASK)

    def replace(self, **changes) -> SearchConfig:
        return SearchConfig(**{**asdict(self), **changes})

    def light(self) -> SearchConfig:
        """Cheap variant used for inner sups while an outer search is moving."""
        return self.replace(restarts=min(self.restarts, 2), iterations=min(self.iterations, 100))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SearchConfig:
        known = {k: d[k] for k in ("restarts", "iterations", "step", "decay", "epsilon", "seed") if k in d}
        return cls(**known)


def restart_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, int(k)]))


@dataclass(frozen=True)
class Oracle:
    value: float
    label: str
    # "exact" or "upper"
    kind: str = "exact"

    def to_dict(self) -> dict:
        return {"value": self.value, "label": self.label, "kind": self.kind}


def _jsonable(v):
    if hasattr(v, "to_dict"):
        return v.to_dict()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class EstimateReport:
    """Certified lower bound on a sup together with the point that attains it."""

    value: float
    witness: Any
    oracle: Oracle | None = None
    evaluations: int = 0
    seed: int = 0
    telemetry: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "witness": _jsonable(self.witness),
            "oracle": None if self.oracle is None else self.oracle.to_dict(),
            "evaluations": self.evaluations,
            "seed": self.seed,
            "telemetry": _jsonable(self.telemetry),
        }


@dataclass(frozen=True, eq=False)
class PowerSumObjective:
    """x' -> (sum_i exp(logc_i) |<X_i, x'>|^theta) ** outer.

    Every dual-ball sup in this package has this form; it is convex in x'
    whenever theta >= 1, and searches over it run in the compiled kernels.
    """

    X: np.ndarray
    logc: np.ndarray
    theta: float
    outer: float = 1.0

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        logc = np.ascontiguousarray(self.logc, dtype=float)
        if X.ndim != 2 or logc.shape != (X.shape[0],):
            raise ParameterError("power sum needs a (k, d) matrix and k log-coefficients")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "logc", logc)

    @property
    def convex(self) -> bool:
        return self.theta >= 1.0

    def log_value(self, xp) -> float:
        return kernels.log_power_sum(self.X, self.logc, self.theta, np.asarray(xp, dtype=float))

    def __call__(self, xp) -> float:
        lv = self.log_value(xp)
        if lv == -math.inf:
            return 0.0
        return math.exp(self.outer * lv)

    def gradient(self, xp, eps: float = 0.0) -> np.ndarray:
        return kernels.power_sum_grad(self.X, self.logc, self.theta, np.asarray(xp, dtype=float), eps)


def _check_finite(value, point):
    if not math.isfinite(value):
        raise SearchError(f"objective returned {value!r}", point=np.array(point, copy=True))


def _fd_gradient(f, x, h_rel=1e-6):
    x = np.asarray(x, dtype=float)
    h = h_rel * max(1.0, float(np.max(np.abs(x))))
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f(x)
        flat[i] = old - h
        fm = f(x)
        flat[i] = old
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def _random_sphere_point(space: NormedSpace, rng) -> np.ndarray:
    while True:
        x = rng.standard_normal(space.dim)
        n = kernels.lr_norm(x, space.r, space.weights)
        if n > 0:
            return x / n


@functools.lru_cache(maxsize=4096)
def _sphere_start(space: NormedSpace, seed: int, k: int) -> np.ndarray:
    # inner sups re-run the same seeded starts thousands of times
    x = _random_sphere_point(space, restart_rng(seed, k))
    x.setflags(write=False)
    return x


def _ascend_generic(f, grad, space: NormedSpace, x0, config: SearchConfig):
    pre = space.dual
    x = kernels.retract(np.asarray(x0, dtype=float), space.r, space.weights)
    cur = f(x)
    _check_finite(cur, x)
    evals = 1
    step = config.step
    stall = 0
    for _ in range(config.iterations):
        g = grad(x)
        evals += 2 * x.size if grad is not None and getattr(grad, "_fd", False) else 0
        gn = float(np.sqrt(np.dot(g, g)))
        if gn == 0.0 or not math.isfinite(gn):
            break
        y = kernels.norming(g, pre.r, pre.weights)
        vy = f(y)
        z = kernels.retract(x + (step / gn) * g, space.r, space.weights)
        vz = f(z)
        _check_finite(vy, y)
        _check_finite(vz, z)
        evals += 2
        best, vbest = (z, vz) if vz > vy else (y, vy)
        if vbest > cur:
            gain = vbest - cur
            x, cur = best, vbest
            stall = 0 if gain > 1e-14 * max(abs(cur), 1e-300) else stall + 1
        else:
            step *= config.decay
            stall += 1
        if stall >= PATIENCE or step < MIN_STEP:
            break
    return cur, x, evals


def maximize_over_ball(
    objective: Callable[[np.ndarray], float],
    space: NormedSpace,
    config: SearchConfig,
    *,
    starts: Sequence[np.ndarray] = (),
    convex: bool | None = None,
) -> EstimateReport:
    """Maximize ``objective`` over the closed unit ball of ``space``.

    Each run alternates two proposals, the ball vertex maximizing the
    linearized objective and a gradient step pulled back into the ball, and
    keeps whichever improves. Gradients come from ``objective.gradient`` with
    |t| smoothed to sqrt(t^2 + eps^2) when available, finite differences
    otherwise. ``starts`` are run first, then ``config.restarts`` seeded random
    starts.

    A convex objective on a polyhedral ball of at most ``VERTEX_LIMIT``
    vertices is maximized exactly by evaluating every vertex.
    """
    fast = isinstance(objective, PowerSumObjective)
    if convex is None:
        convex = bool(getattr(objective, "convex", False))

    if convex and space.is_polyhedral and space.vertex_count(symmetric=fast) <= VERTEX_LIMIT:
        V = space.vertices(symmetric=fast)
        if fast:
            lv = kernels.vertex_log_power_sums(objective.X, objective.logc, objective.theta, V)
            if np.any(np.isnan(lv)):
                j = int(np.argmax(np.isnan(lv)))
                raise SearchError("objective returned nan", point=V[j].copy())
            j = int(np.argmax(lv))
        else:
            vals = np.array([objective(v) for v in V])
            for v, x in zip(vals, V):
                _check_finite(v, x)
            j = int(np.argmax(vals))
        witness = V[j].copy()
        value = float(objective(witness))
        _check_finite(value, witness)
        return EstimateReport(
            value, witness, evaluations=len(V), seed=config.seed,
            telemetry={"method": "vertices", "vertices": len(V)},
        )

    if fast:
        pre = space.dual
    elif hasattr(objective, "gradient"):
        grad = lambda x: objective.gradient(x, config.epsilon)  # noqa: E731
    else:
        grad = lambda x: _fd_gradient(objective, x)  # noqa: E731
        grad._fd = True

    runs = [np.asarray(s, dtype=float) for s in starts]
    runs += [_sphere_start(space, config.seed, k) for k in range(config.restarts)]

    best_val, best_x, evals = -math.inf, None, 0
    values = []
    for x0 in runs:
        if fast:
            _, x, ev = kernels.ascend_power_sum(
                objective.X, objective.logc, objective.theta,
                space.r, space.weights, pre.r, pre.weights,
                x0, config.iterations, config.step, config.decay, config.epsilon,
            )
            val = objective(x)
            _check_finite(val, x)
        else:
            val, x, ev = _ascend_generic(objective, grad, space, x0, config)
        evals += ev
        values.append(val)
        # strict comparison: ties keep the lowest restart index
        if val > best_val:
            best_val, best_x = val, x
    return EstimateReport(
        float(best_val), np.asarray(best_x), evaluations=evals, seed=config.seed,
        telemetry={"method": "ascent", "runs": len(runs), "restart_values": values},
    )


def max_row_normalizer(space: NormedSpace):
    def normalize(F):
        m = float(np.max(row_norms(space, F)))
        if m == 0.0 or not math.isfinite(m):
            return None
        return F / m

    return normalize


def maximize_family_ratio(
    ratio: Callable[[np.ndarray], float],
    space: NormedSpace,
    k: int,
    config: SearchConfig,
    *,
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]] | None = None,
    starts: Sequence[np.ndarray] = (),
    normalize: Callable[[np.ndarray], np.ndarray | None] | None = None,
    certify: Callable[[np.ndarray], float] | None = None,
    shape: tuple[int, ...] | None = None,
) -> EstimateReport:
    """Maximize a scale-invariant ratio over families of ``k`` vectors.

    The family is a ``(k, space.dim)`` array (or ``shape``) rescaled after
    every step by ``normalize`` (default: largest member has norm 1). The
    search runs on ``ratio``; ``certify`` is applied to each run's final
    family and it is the certified values that are compared and reported.
    A run whose family degenerates is skipped and counted.
    """
    if k < 1:
        raise ParameterError("family size must be at least 1")
    shape = tuple(shape) if shape is not None else (k, space.dim)
    normalize = normalize or max_row_normalizer(space)

    def evaluate(F):
        if value_and_grad is not None:
            v, G = value_and_grad(F)
        else:
            v = ratio(F)
            _check_finite(v, F)
            G = _fd_gradient(ratio, F)
        _check_finite(v, F)
        return float(v), G

    runs = [np.asarray(s, dtype=float).reshape(shape) for s in starts]
    runs += [restart_rng(config.seed, j).standard_normal(shape) for j in range(config.restarts)]

    best_val, best_F = -math.inf, None
    values, skipped, evals = [], 0, 0
    for F0 in runs:
        F = normalize(F0)
        if F is None:
            skipped += 1
            continue
        try:
            v, G = evaluate(F)
        except DegenerateFamilyError:
            skipped += 1
            continue
        evals += 1
        # backtracking under a cap that follows the configured decay schedule
        cap = step = config.step
        stall = 0
        for _ in range(config.iterations):
            gn = float(np.linalg.norm(G))
            if gn == 0.0 or not math.isfinite(gn):
                break
            cand = normalize(F + (step * float(np.linalg.norm(F)) / gn) * G)
            vc = -math.inf
            if cand is not None:
                try:
                    vc, Gc = evaluate(cand)
                    evals += 1
                except DegenerateFamilyError:
                    pass
            if vc > v:
                stall = 0 if vc - v > 1e-13 * max(abs(v), 1e-300) else stall + 1
                F, v, G = cand, vc, Gc
                step = min(2.0 * step, cap)
            else:
                step *= 0.5
                stall += 1
            cap *= config.decay
            if step < MIN_STEP or stall >= PATIENCE:
                break
        cv = float(certify(F)) if certify is not None else v
        _check_finite(cv, F)
        values.append(cv)
        if cv > best_val:
            best_val, best_F = cv, F
    if best_F is None:
        raise EstimationError(f"all {len(runs)} restarts degenerated")
    return EstimateReport(
        best_val, best_F, evaluations=evals, seed=config.seed,
        telemetry={"family_size": k, "restart_values": values, "skipped": skipped},
    )
