"""Scalar models, their gradients, and the baseline characteristic function.

Every model maps ``R^m -> R`` and accepts either a single point ``(m,)`` or a
batch ``(n, m)``.  Declarative kinds (linear, logistic-linear,
additive-logistic, composed) have exact gradients; :class:`CallableModel`
wraps an arbitrary user function and falls back to central differences.

Indices are 0-based here.  Serialised documents use 1-based indices.
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Sequence

import numpy as np

from . import transforms as tr

FD_STEP = np.cbrt(np.finfo(float).eps)
DEFAULT_BOX = (-10.0, 10.0)
GRID_POINTS = 17
MONOTONE_TOL = 1e-9


class ModelError(ValueError):
    pass


class DimensionError(ModelError):
    pass


class NonFiniteInputError(ModelError):
    pass


class MonotonicityError(ModelError):
    pass


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=float)))


def sigmoid_prime(z):
    z = np.asarray(z, dtype=float)
    return sigmoid(z) * sigmoid(-z)


def as_feature_vector(x, m: int) -> np.ndarray:
    """Validate a single point of length ``m`` with finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != m:
        raise DimensionError(f"expected a vector of length {m}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"non-finite entries in {arr.tolist()}")
    return arr


class Model:
    """Common metadata and shape handling.

    Subclasses implement ``_eval`` and (optionally) ``_grad`` on 2-D batches.
    """

    kind = "abstract"

    def __init__(self, n_features: int, domain=None, monotone_increasing=(), strong_pairs=()):
        self.n_features = int(n_features)
        if domain is None:
            domain = [DEFAULT_BOX] * self.n_features
        self.domain = np.asarray(domain, dtype=float).reshape(self.n_features, 2)
        self.monotone_increasing = frozenset(int(i) for i in monotone_increasing)
        self.strong_pairs = tuple((int(i), int(j)) for i, j in strong_pairs)
        for i in self.monotone_increasing | {k for p in self.strong_pairs for k in p}:
            if not 0 <= i < self.n_features:
                raise DimensionError(f"declared index {i} outside 0..{self.n_features - 1}")

    def _batch(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.ndim != 2 or X2.shape[1] != self.n_features:
            raise DimensionError(f"expected {self.n_features} features, got shape {X.shape}")
        if not np.all(np.isfinite(X2)):
            raise NonFiniteInputError("non-finite model input")
        return X2, single

    def evaluate(self, X):
        X2, single = self._batch(X)
        out = self._eval(X2)
        return float(out[0]) if single else out

    __call__ = evaluate

    def grad(self, X):
        X2, single = self._batch(X)
        G = self._grad(X2)
        return G[0] if single else G

    def _eval(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _grad(self, X: np.ndarray) -> np.ndarray:
        return finite_difference_gradient(self._eval, X)

    def path_breakpoints(self, start, end) -> np.ndarray:
        """Interior ``t`` in ``(0, 1)`` where the gradient along ``start -> end`` may jump.

        Quadrature splits the path there.  Smooth models return nothing.
        """
        return np.empty(0)

    def _meta(self) -> dict:
        return {
            "n_features": self.n_features,
            "domain": self.domain.tolist(),
            "monotone_increasing": sorted(i + 1 for i in self.monotone_increasing),
            "strong_pairs": [[i + 1, j + 1] for i, j in self.strong_pairs],
        }

    def to_dict(self) -> dict:
        raise ModelError(f"{type(self).__name__} is not serialisable")


def finite_difference_gradient(fn: Callable[[np.ndarray], np.ndarray], X: np.ndarray) -> np.ndarray:
    """Central differences with step ``cbrt(eps) * max(1, |x_i|)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = np.empty_like(X)
    for k in range(X.shape[1]):
        h = FD_STEP * np.maximum(1.0, np.abs(X[:, k]))
        up = X.copy()
        dn = X.copy()
        up[:, k] += h
        dn[:, k] -= h
        G[:, k] = (fn(up) - fn(dn)) / (2.0 * h)
    return G


class LinearModel(Model):
    kind = "linear"

    def __init__(self, bias: float, coefficients: Sequence[float], **meta):
        self.bias = float(bias)
        self.coefficients = np.asarray(coefficients, dtype=float)
        super().__init__(len(self.coefficients), **meta)

    def _eval(self, X):
        # row-wise sum, not BLAS: batch and single-point results must match bitwise
        return self.bias + (X * self.coefficients).sum(axis=1)

    def _grad(self, X):
        return np.broadcast_to(self.coefficients, X.shape).copy()

    def to_dict(self):
        return {"kind": self.kind, "bias": self.bias, "coefficients": self.coefficients.tolist(), **self._meta()}


class LogisticLinearModel(LinearModel):
    """``sigma(bias + <w, x>)`` with ``sigma(z) = e^z / (1 + e^z)``."""

    kind = "logistic-linear"

    def logit(self, X):
        return self.bias + (np.atleast_2d(np.asarray(X, dtype=float)) * self.coefficients).sum(axis=1)

    def _eval(self, X):
        return sigmoid(self.logit(X))

    def _grad(self, X):
        return sigmoid_prime(self.logit(X))[:, None] * self.coefficients


class PiecewiseLinear:
    """Linear interpolation through knots, extended linearly past both ends.

    The derivative at a knot is the slope of the segment to its right (the
    last segment at and beyond the final knot).
    """

    def __init__(self, knots: Sequence[float], values: Sequence[float]):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.knots.ndim != 1 or len(self.knots) < 2 or self.knots.shape != self.values.shape:
            raise ModelError("shape function needs matching knot/value arrays with >= 2 entries")
        if np.any(np.diff(self.knots) <= 0):
            raise ModelError(f"knots must be strictly increasing: {self.knots.tolist()}")
        self.slopes = np.diff(self.values) / np.diff(self.knots)

    def _segment(self, x):
        return np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, len(self.knots) - 2)

    def __call__(self, x):
        idx = self._segment(x)
        return self.values[idx] + self.slopes[idx] * (x - self.knots[idx])

    def derivative(self, x):
        return self.slopes[self._segment(x)]

    def crossings(self, a: float, b: float) -> np.ndarray:
        """Fractions ``t`` in ``(0, 1)`` at which ``a + t (b - a)`` meets an inner knot."""
        if a == b:
            return np.empty(0)
        t = (self.knots[1:-1] - a) / (b - a)
        return t[(t > 0.0) & (t < 1.0)]

    def to_dict(self):
        return {"knots": self.knots.tolist(), "values": self.values.tolist()}


class AdditiveLogisticModel(Model):
    """``sigma(bias + sum_i phi_i(x_i))`` with piecewise-linear ``phi_i``."""

    kind = "additive-logistic"

    def __init__(self, bias: float, shape_functions: Sequence[PiecewiseLinear], **meta):
        self.bias = float(bias)
        self.shape_functions = [
            s if isinstance(s, PiecewiseLinear) else PiecewiseLinear(s["knots"], s["values"])
            for s in shape_functions
        ]
        super().__init__(len(self.shape_functions), **meta)

    def logit(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = np.full(X.shape[0], self.bias)
        for k, phi in enumerate(self.shape_functions):
            z = z + phi(X[:, k])
        return z

    def _eval(self, X):
        return sigmoid(self.logit(X))

    def _grad(self, X):
        d = np.column_stack([phi.derivative(X[:, k]) for k, phi in enumerate(self.shape_functions)])
        return sigmoid_prime(self.logit(X))[:, None] * d

    def path_breakpoints(self, start, end):
        ts = [phi.crossings(start[k], end[k]) for k, phi in enumerate(self.shape_functions)]
        return np.unique(np.concatenate(ts)) if ts else np.empty(0)

    def to_dict(self):
        return {
            "kind": self.kind,
            "bias": self.bias,
            "shape_functions": [s.to_dict() for s in self.shape_functions],
            **self._meta(),
        }


class ComposedModel(Model):
    """``g = inner o T^-1``: the model seen through a recoding ``T`` of its inputs.

    Monotonicity declarations are not carried over; the recoded features
    generally lose them.
    """

    kind = "composed"

    def __init__(self, inner: Model, transform, domain=None):
        self.inner = inner
        self.transform = transform
        self.inverse = transform.inverse()
        super().__init__(inner.n_features, domain=domain)

    def _eval(self, X):
        return self.inner._eval(self.inverse.apply(X))

    def _grad(self, X):
        Z = self.inverse.apply(X)
        return self.inverse.vjp(X, self.inner._grad(Z))

    def path_breakpoints(self, start, end):
        # an affine inverse keeps the path straight; other recodings bend it
        if not isinstance(self.inverse, tr.GroupAffineTransform):
            return np.empty(0)
        return self.inner.path_breakpoints(self.inverse.apply(start), self.inverse.apply(end))

    def to_dict(self):
        return {
            "kind": self.kind,
            "inner": self.inner.to_dict(),
            "transform": self.transform.to_dict(),
            "n_features": self.n_features,
            "domain": self.domain.tolist(),
        }


class CallableModel(Model):
    """Opaque evaluator: ``fn`` maps one point ``(m,)`` to a float.

    ``grad_fn`` is optional; without it gradients are central differences.
    ``vectorized=True`` means ``fn`` already accepts ``(n, m)`` batches.
    """

    kind = "callable"

    def __init__(self, fn, n_features: int, grad_fn=None, vectorized: bool = False, **meta):
        self.fn = fn
        self.grad_fn = grad_fn
        self.vectorized = vectorized
        super().__init__(n_features, **meta)

    def _eval(self, X):
        if self.vectorized:
            return np.asarray(self.fn(X), dtype=float).reshape(X.shape[0])
        return np.array([float(self.fn(row)) for row in X])

    def _grad(self, X):
        if self.grad_fn is None:
            return finite_difference_gradient(self._eval, X)
        return np.array([np.asarray(self.grad_fn(row), dtype=float) for row in X])


class CombinedModel(Model):
    """``sum_k alpha_k f_k``; used to exercise linearity."""

    kind = "combination"

    def __init__(self, terms: Sequence[tuple[float, Model]]):
        self.terms = [(float(a), f) for a, f in terms]
        m = {f.n_features for _, f in self.terms}
        if len(m) != 1:
            raise DimensionError(f"combined models disagree on feature count: {sorted(m)}")
        super().__init__(m.pop())

    def _eval(self, X):
        return sum(a * f._eval(X) for a, f in self.terms)

    def _grad(self, X):
        return sum(a * f._grad(X) for a, f in self.terms)

    def path_breakpoints(self, start, end):
        return np.unique(np.concatenate([np.empty(0)] + [f.path_breakpoints(start, end) for _, f in self.terms]))

    def to_dict(self):
        return {
            "kind": self.kind,
            "terms": [{"weight": a, "model": f.to_dict()} for a, f in self.terms],
            "n_features": self.n_features,
        }


def evaluate(model: Model, x) -> float:
    return model.evaluate(as_feature_vector(x, model.n_features))


def gradient(model: Model, x) -> np.ndarray:
    return model.grad(as_feature_vector(x, model.n_features))


def compose_with_inverse(model: Model, transform) -> ComposedModel:
    """The model expressed in recoded features: ``g(T(x)) = f(x)``."""
    if not transform.verified:
        raise tr.UnverifiedInverseError(
            f"inverse round-trip error {transform.check.max_error:.3g} exceeds {transform.check.tolerance:g}"
        )
    return ComposedModel(model, transform)


class CoalitionValueCache:
    """Memoised ``v(S) = f(xbar_S ; x'_rest)`` keyed by coalition bit-set.

    Not shared between threads; build one per worker.  ``evaluations`` counts
    model evaluations actually performed (cache misses).
    """

    def __init__(self, model: Model, explicand, baseline):
        self.model = model
        self.explicand = as_feature_vector(explicand, model.n_features)
        self.baseline = as_feature_vector(baseline, model.n_features)
        self.entries: dict[int, float] = {}
        self.evaluations = 0

    def point(self, mask: int) -> np.ndarray:
        present = [(mask >> k) & 1 for k in range(self.model.n_features)]
        return np.where(present, self.explicand, self.baseline)

    def value(self, mask: int) -> float:
        hit = self.entries.get(mask)
        if hit is not None:
            return hit
        self.fill([mask])
        return self.entries[mask]

    def fill(self, masks: Iterable[int]) -> None:
        """Evaluate every missing coalition in one batched model call."""
        todo = sorted({m for m in masks if m not in self.entries})
        if not todo:
            return
        X = np.array([self.point(m) for m in todo])
        vals = self.model.evaluate(X)
        self.evaluations += len(todo)
        for m, v in zip(todo, np.atleast_1d(vals)):
            self.entries[m] = float(v)

    def values(self, masks: Sequence[int]) -> np.ndarray:
        self.fill(masks)
        return np.array([self.entries[m] for m in masks])


def coalition_value(model: Model, explicand, baseline, S, cache: CoalitionValueCache | None = None) -> float:
    """``f(xbar_S ; x'_{M \\ S})``.  ``S`` is a bit-set or an iterable of indices."""
    if cache is None:
        cache = CoalitionValueCache(model, explicand, baseline)
    if not isinstance(S, (int, np.integer)):
        mask = 0
        for i in S:
            if not 0 <= i < model.n_features:
                raise DimensionError(f"coalition index {i} outside 0..{model.n_features - 1}")
            mask |= 1 << int(i)
        S = mask
    return cache.value(int(S))


# --- monotonicity scans ---------------------------------------------------


def _base_points(model: Model, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = model.domain[:, 0], model.domain[:, 1]
    pts = rng.uniform(lo, hi, size=(n, model.n_features))
    return np.vstack([(lo + hi) / 2, lo, hi, pts])


def scan_individual(model: Model, i: int, bases: int = 32, seed: int = 0) -> float:
    """Most negative step along a 17-point grid on axis ``i`` (>= 0 if monotone)."""
    P = _base_points(model, bases, seed)
    grid = np.linspace(model.domain[i, 0], model.domain[i, 1], GRID_POINTS)
    X = np.repeat(P, GRID_POINTS, axis=0)
    X[:, i] = np.tile(grid, P.shape[0])
    f = model.evaluate(X).reshape(P.shape[0], GRID_POINTS)
    return float(np.min(np.diff(f, axis=1)))


def scan_strong_pair(model: Model, i: int, j: int, bases: int = 32, seed: int = 0) -> float:
    """Most negative ``f(x_i + c, x_j) - f(x_i, x_j + c)`` on a grid of shifts."""
    P = _base_points(model, bases, seed)
    width = min(np.ptp(model.domain[i]), np.ptp(model.domain[j]))
    shifts = np.linspace(0.0, width, GRID_POINTS)[1:]
    worst = np.inf
    for c in shifts:
        ok = (P[:, i] + c <= model.domain[i, 1]) & (P[:, j] + c <= model.domain[j, 1])
        if not np.any(ok):
            continue
        Q = P[ok]
        strong = Q.copy()
        strong[:, i] += c
        weak = Q.copy()
        weak[:, j] += c
        worst = min(worst, float(np.min(model.evaluate(strong) - model.evaluate(weak))))
    return worst


def validate_monotonicity(model: Model, bases: int = 32, seed: int = 0) -> None:
    """Raise :class:`MonotonicityError` if a declaration fails its grid scan."""
    for i in sorted(model.monotone_increasing):
        worst = scan_individual(model, i, bases, seed)
        if worst < -MONOTONE_TOL:
            raise MonotonicityError(f"feature {i + 1} declared increasing but drops by {-worst:.3g}")
    for i, j in model.strong_pairs:
        worst = scan_strong_pair(model, i, j, bases, seed)
        if worst < -MONOTONE_TOL:
            raise MonotonicityError(
                f"pair ({i + 1} over {j + 1}) declared strongly monotone but violates by {-worst:.3g}"
            )


# --- serialisation ----------------------------------------------------------


def _meta_from(d: dict) -> dict:
    return {
        "domain": d.get("domain"),
        "monotone_increasing": [int(i) - 1 for i in d.get("monotone_increasing", [])],
        "strong_pairs": [(int(i) - 1, int(j) - 1) for i, j in d.get("strong_pairs", [])],
    }


def model_from_dict(d: dict) -> Model:
    kind = d.get("kind")
    if kind == "linear":
        return LinearModel(d["bias"], d["coefficients"], **_meta_from(d))
    if kind == "logistic-linear":
        return LogisticLinearModel(d["bias"], d["coefficients"], **_meta_from(d))
    if kind == "additive-logistic":
        return AdditiveLogisticModel(d["bias"], d["shape_functions"], **_meta_from(d))
    if kind == "composed":
        inner = model_from_dict(d["inner"])
        return ComposedModel(inner, tr.transform_from_dict(d["transform"]), domain=d.get("domain"))
    if kind == "combination":
        return CombinedModel([(t["weight"], model_from_dict(t["model"])) for t in d["terms"]])
    raise ModelError(f"unknown model kind {kind!r}")


def dumps(model: Model) -> str:
    return json.dumps(model.to_dict(), indent=2)


def loads(text: str) -> Model:
    return model_from_dict(json.loads(text))
