"""Baseline Shapley, Integrated Gradients, group Shapley and Owen values.

All coalition-based methods read the characteristic function through a
:class:`~groupattr.model.CoalitionValueCache`, so several methods run on the
same ``(model, explicand, baseline)`` share model evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import CoalitionValueCache, Model, as_feature_vector
from .partition import (
    MAX_GROUPS,
    MAX_PLAYERS,
    EnumerationBoundError,
    GroupStructure,
    enumerate_subsets,
    expand_mask,
    owen_weight,
    shapley_weight,
)

METHODS = ("bshap", "ig", "gshap", "owen")
OWEN_MAX_GROUPS = 12
OWEN_MAX_BLOCK = 12
STEP_CAP = 2**20
CHUNK = 1 << 16


class AttributionError(ValueError):
    pass


@dataclass(frozen=True)
class MethodOptions:
    mode: str = "exact"
    permutations: int = 1000
    seed: int = 0
    quadrature: str = "gauss-legendre"
    steps: int = 64
    completeness_tolerance: float = 1e-6
    step_cap: int = STEP_CAP
    use_cache: bool = True

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise AttributionError(f"unknown mode {self.mode!r}")
        if self.quadrature not in ("gauss-legendre", "trapezoid-adaptive"):
            raise AttributionError(f"unknown quadrature {self.quadrature!r}")
        if self.permutations < 1:
            raise AttributionError("permutations must be >= 1")
        if self.steps < 2:
            raise AttributionError("steps must be >= 2")
        if not self.completeness_tolerance > 0:
            raise AttributionError("completeness_tolerance must be positive")

    @classmethod
    def from_dict(cls, d: dict | None) -> "MethodOptions":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise AttributionError(f"unknown option(s) {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class AttributionResult:
    method: str
    per_feature: np.ndarray | None
    per_group: np.ndarray | None
    f_explicand: float
    f_baseline: float
    completeness_gap: float
    evaluations: int
    seed: int | None = None
    quadrature_steps: int | None = None
    flagged: bool = False
    structure: GroupStructure | None = field(default=None, repr=False)

    @property
    def delta(self) -> float:
        return self.f_explicand - self.f_baseline

    def group_value(self, g: int) -> float:
        if self.per_group is None:
            raise AttributionError("result carries no group attributions")
        return float(self.per_group[g])

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "per_feature": None if self.per_feature is None else [float(v) for v in self.per_feature],
            "per_group": None if self.per_group is None else [float(v) for v in self.per_group],
            "f_explicand": self.f_explicand,
            "f_baseline": self.f_baseline,
            "completeness_gap": self.completeness_gap,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "quadrature_steps": self.quadrature_steps,
            "flagged": self.flagged,
        }


class _Uncached(CoalitionValueCache):
    """Same interface as the cache but every lookup re-evaluates the model."""

    def value(self, mask: int) -> float:
        self.evaluations += 1
        return float(self.model.evaluate(self.point(mask)))

    def values(self, masks):
        return np.array([self.value(m) for m in masks])

    def fill(self, masks):
        pass


def make_cache(model: Model, explicand, baseline, options: MethodOptions | None = None) -> CoalitionValueCache:
    if options is not None and not options.use_cache:
        return _Uncached(model, explicand, baseline)
    return CoalitionValueCache(model, explicand, baseline)


def _cache_for(model, explicand, baseline, options, cache):
    if cache is None:
        return make_cache(model, explicand, baseline, options)
    if cache.model is not model or not (
        np.array_equal(cache.explicand, explicand) and np.array_equal(cache.baseline, baseline)
    ):
        raise AttributionError("cache belongs to a different (model, explicand, baseline)")
    return cache


def _popcounts(n: int) -> np.ndarray:
    codes = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        counts += (codes >> k) & 1
    return counts


@lru_cache(maxsize=None)
def _float_weights(n: int) -> tuple[float, ...]:
    return tuple(float(shapley_weight(s, n)) for s in range(n))


def shapley_from_values(values: np.ndarray, n: int) -> np.ndarray:
    """Exact Shapley values of a game given ``values[code]`` for all ``2^n`` codes.

    Marginal contributions are summed per coalition size first, then the
    ``n`` size buckets are combined with their exact weights (converted to
    float once).  The order of all reductions is fixed.
    """
    codes = np.arange(1 << n, dtype=np.int64)
    sizes = _popcounts(n)
    weights = _float_weights(n)
    out = np.empty(n)
    for i in range(n):
        without = codes[((codes >> i) & 1) == 0]
        diff = values[without | (1 << i)] - values[without]
        buckets = np.bincount(sizes[without], weights=diff, minlength=n)
        out[i] = math.fsum(w * b for w, b in zip(weights, buckets))
    return out


def _dense_values(cache: CoalitionValueCache, player_masks: Sequence[int]) -> np.ndarray:
    """``v`` for every coalition of the given players, indexed by player code."""
    n = len(player_masks)
    feature_masks = []
    for code in range(1 << n):
        mask = 0
        k = 0
        c = code
        while c:
            if c & 1:
                mask |= player_masks[k]
            c >>= 1
            k += 1
        feature_masks.append(mask)
    out = np.empty(len(feature_masks))
    for start in range(0, len(feature_masks), CHUNK):
        block = feature_masks[start : start + CHUNK]
        out[start : start + len(block)] = cache.values(block)
    return out


def _sampled_shapley(cache: CoalitionValueCache, player_masks: Sequence[int], permutations: int, seed: int) -> np.ndarray:
    """Average marginal contributions over seeded uniform random orderings."""
    n = len(player_masks)
    rng = np.random.default_rng(seed)
    perms = np.array([rng.permutation(n) for _ in range(permutations)])
    pm = np.array(player_masks, dtype=object)
    prefix = np.cumsum(pm[perms], axis=1)  # blocks are disjoint, so sum == union
    flat = [int(v) for v in prefix.ravel()]
    uniq = sorted(set(flat) | {0})
    lookup = dict(zip(uniq, cache.values(uniq)))
    vals = np.array([lookup[v] for v in flat]).reshape(prefix.shape)
    prev = np.concatenate([np.full((permutations, 1), lookup[0]), vals[:, :-1]], axis=1)
    marg = vals - prev
    totals = np.bincount(perms.ravel(), weights=marg.ravel(), minlength=n)
    return totals / permutations


def _finish(method, cache, start_evals, per_feature, per_group, options, structure, seed=None, steps=None, flagged=False):
    f_x = cache.value((1 << cache.model.n_features) - 1)
    f_b = cache.value(0)
    total = per_group if per_feature is None else per_feature
    gap = abs(math.fsum(total) - (f_x - f_b))
    return AttributionResult(
        method=method,
        per_feature=per_feature,
        per_group=per_group,
        f_explicand=f_x,
        f_baseline=f_b,
        completeness_gap=gap,
        evaluations=cache.evaluations - start_evals,
        seed=seed,
        quadrature_steps=steps,
        flagged=flagged,
        structure=structure,
    )


def _group_sums(per_feature: np.ndarray, structure: GroupStructure) -> np.ndarray:
    return np.array([math.fsum(per_feature[list(b)]) for b in structure.blocks])


def bshap(model: Model, explicand, baseline, options: MethodOptions | None = None,
          structure: GroupStructure | None = None, cache: CoalitionValueCache | None = None) -> AttributionResult:
    """Baseline Shapley: Shapley value of ``v(S) = f(xbar_S; x'_rest)``."""
    options = options or MethodOptions()
    m = model.n_features
    explicand = as_feature_vector(explicand, m)
    baseline = as_feature_vector(baseline, m)
    cache = _cache_for(model, explicand, baseline, options, cache)
    start = cache.evaluations
    players = [1 << i for i in range(m)]
    if options.mode == "exact":
        if m > MAX_PLAYERS:
            raise EnumerationBoundError(
                f"exact BShap over {m} features exceeds {MAX_PLAYERS}; use mode='sampled'"
            )
        phi = shapley_from_values(_dense_values(cache, players), m)
        seed = None
    else:
        phi = _sampled_shapley(cache, players, options.permutations, options.seed)
        seed = options.seed
    per_group = _group_sums(phi, structure) if structure is not None else None
    return _finish("bshap", cache, start, phi, per_group, options, structure, seed=seed)


def gshap(model: Model, explicand, baseline, structure: GroupStructure, options: MethodOptions | None = None,
          cache: CoalitionValueCache | None = None) -> AttributionResult:
    """Shapley value of the induced game whose players are the blocks."""
    options = options or MethodOptions()
    m = model.n_features
    if structure.m != m:
        raise AttributionError(f"group structure covers {structure.m} features, model has {m}")
    explicand = as_feature_vector(explicand, m)
    baseline = as_feature_vector(baseline, m)
    cache = _cache_for(model, explicand, baseline, options, cache)
    start = cache.evaluations
    players = list(structure.masks)
    if options.mode == "exact":
        if structure.l > MAX_GROUPS:
            raise EnumerationBoundError(
                f"exact GShap over {structure.l} groups exceeds {MAX_GROUPS}; use mode='sampled'"
            )
        phi = shapley_from_values(_dense_values(cache, players), structure.l)
        seed = None
    else:
        phi = _sampled_shapley(cache, players, options.permutations, options.seed)
        seed = options.seed
    return _finish("gshap", cache, start, None, phi, options, structure, seed=seed)


def owen(model: Model, explicand, baseline, structure: GroupStructure, options: MethodOptions | None = None,
         cache: CoalitionValueCache | None = None) -> AttributionResult:
    """Owen value: Shapley across blocks, then Shapley within each block."""
    options = options or MethodOptions()
    m = model.n_features
    if structure.m != m:
        raise AttributionError(f"group structure covers {structure.m} features, model has {m}")
    if options.mode != "exact":
        raise AttributionError("Owen values are exact-only")
    l = structure.l
    biggest = max(len(b) for b in structure.blocks)
    if l > OWEN_MAX_GROUPS or biggest > OWEN_MAX_BLOCK:
        raise EnumerationBoundError(
            f"exact Owen needs <= {OWEN_MAX_GROUPS} groups and blocks of <= {OWEN_MAX_BLOCK}; "
            f"got {l} groups, largest block {biggest}"
        )
    explicand = as_feature_vector(explicand, m)
    baseline = as_feature_vector(baseline, m)
    cache = _cache_for(model, explicand, baseline, options, cache)
    start = cache.evaluations
    phi = np.zeros(m)
    for i, block in enumerate(structure.blocks):
        others = [g for g in range(l) if g != i]
        outer = [(bin(t).count("1"), expand_mask(t, structure)) for t in enumerate_subsets(others)]
        b = len(block)
        for j in block:
            inner = [(bin(s).count("1"), s) for s in enumerate_subsets([k for k in block if k != j])]
            with_j, without_j, wts = [], [], []
            for t, q in outer:
                for s, smask in inner:
                    without_j.append(q | smask)
                    with_j.append(q | smask | (1 << j))
                    wts.append(float(owen_weight(t, l, s, b)))
            diff = cache.values(with_j) - cache.values(without_j)
            phi[j] = math.fsum(np.asarray(wts) * diff)
    return _finish("owen", cache, start, phi, _group_sums(phi, structure), options, structure)


# --- integrated gradients -----------------------------------------------------


@lru_cache(maxsize=32)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of ``n``-point Gauss-Legendre on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _path_gradients(model: Model, baseline, delta, ts) -> np.ndarray:
    pts = baseline + np.outer(ts, delta)
    return model.grad(pts)


@dataclass
class _Quad:
    integral: np.ndarray
    steps: int
    gap: float
    flagged: bool
    gradient_evals: int


def _gauss(model, baseline, delta, n, target) -> _Quad:
    """``n``-point Gauss-Legendre on each smooth piece of the path."""
    t, w = gauss_legendre_unit(n)
    cuts = model.path_breakpoints(baseline, baseline + delta)
    edges = np.concatenate([[0.0], cuts, [1.0]])
    widths = np.diff(edges)
    ts = (edges[:-1, None] + widths[:, None] * t[None, :]).ravel()
    ws = (widths[:, None] * w[None, :]).ravel()
    integral = ws @ _path_gradients(model, baseline, delta, ts)
    gap = abs(math.fsum(integral * delta) - target)
    return _Quad(integral, n, gap, False, len(ts))


def trapezoid_sequence(model, baseline, delta, start: int, cap: int, target: float, tol: float | None):
    """Successive trapezoid estimates with the step count doubled each time.

    Yields ``(steps, integral, gap)``; only the new midpoints are evaluated at
    each refinement.  Stops once ``gap < tol`` (if ``tol`` is given) or the
    step cap is reached.
    """
    n = start
    ts = np.linspace(0.0, 1.0, n + 1)
    G = _path_gradients(model, baseline, delta, ts)
    total = 0.5 * (G[0] + G[-1]) + G[1:-1].sum(axis=0)
    evals = n + 1
    while True:
        integral = total / n
        gap = abs(math.fsum(integral * delta) - target)
        yield n, integral, gap, evals
        if (tol is not None and gap < tol) or n >= cap:
            return
        mids = (np.arange(n) + 0.5) / n
        total = total + _path_gradients(model, baseline, delta, mids).sum(axis=0)
        evals += n
        n *= 2


def _trapezoid(model, baseline, delta, start, cap, target, tol, prior_evals=0) -> _Quad:
    for n, integral, gap, evals in trapezoid_sequence(model, baseline, delta, start, cap, target, tol):
        pass
    return _Quad(integral, n, gap, not gap < tol, prior_evals + evals)


def integrated_gradients(model: Model, explicand, baseline, options: MethodOptions | None = None,
                         structure: GroupStructure | None = None) -> AttributionResult:
    """Path integral of the gradient along the straight line from baseline.

    Gauss-Legendre of order ``options.steps`` is tried first (when selected);
    if the completeness gap is not below tolerance the trapezoid rule is
    refined by step doubling up to ``options.step_cap``.  Hitting the cap
    leaves ``flagged=True`` on the result.
    """
    options = options or MethodOptions()
    m = model.n_features
    explicand = as_feature_vector(explicand, m)
    baseline = as_feature_vector(baseline, m)
    delta = explicand - baseline
    f_x = float(model.evaluate(explicand))
    f_b = float(model.evaluate(baseline))
    target = f_x - f_b
    tol = options.completeness_tolerance
    if not np.any(delta):
        phi = np.zeros(m)
        quad = _Quad(np.zeros(m), 0, 0.0, False, 0)
    else:
        quad = None
        if options.quadrature == "gauss-legendre":
            quad = _gauss(model, baseline, delta, options.steps, target)
            if not quad.gap < tol:
                quad = _trapezoid(model, baseline, delta, options.steps, options.step_cap, target, tol, quad.gradient_evals)
        else:
            quad = _trapezoid(model, baseline, delta, options.steps, options.step_cap, target, tol)
        phi = delta * quad.integral
    per_group = _group_sums(phi, structure) if structure is not None else None
    return AttributionResult(
        method="ig",
        per_feature=phi,
        per_group=per_group,
        f_explicand=f_x,
        f_baseline=f_b,
        completeness_gap=abs(math.fsum(phi) - target),
        evaluations=quad.gradient_evals + 2,
        quadrature_steps=quad.steps,
        flagged=quad.flagged,
        structure=structure,
    )


def aggregate_by_group(result: AttributionResult, structure: GroupStructure) -> AttributionResult:
    """Group attributions as block sums of the per-feature ones."""
    if result.per_feature is None:
        raise AttributionError(f"{result.method} result has no per-feature attributions to aggregate")
    if structure.m != len(result.per_feature):
        raise AttributionError("group structure does not match the attribution length")
    return replace(result, per_group=_group_sums(result.per_feature, structure), structure=structure)


def attribute(method: str, model: Model, explicand, baseline, structure: GroupStructure | None = None,
              options: MethodOptions | None = None, cache: CoalitionValueCache | None = None) -> AttributionResult:
    """Dispatch by method name.  ``gshap`` and ``owen`` need a structure."""
    if method == "bshap":
        return bshap(model, explicand, baseline, options, structure=structure, cache=cache)
    if method == "ig":
        return integrated_gradients(model, explicand, baseline, options, structure=structure)
    if method in ("gshap", "owen"):
        if structure is None:
            structure = GroupStructure.singletons(model.n_features)
        fn = gshap if method == "gshap" else owen
        return fn(model, explicand, baseline, structure, options, cache=cache)
    raise AttributionError(f"unknown method {method!r}; expected one of {METHODS}")


def attribute_all(methods: Sequence[str], model: Model, explicand, baseline, structure: GroupStructure | None = None,
                  options: MethodOptions | None = None) -> dict[str, AttributionResult]:
    """Run several methods on one shared coalition cache."""
    options = options or MethodOptions()
    cache = make_cache(model, as_feature_vector(explicand, model.n_features),
                       as_feature_vector(baseline, model.n_features), options)
    return {m: attribute(m, model, explicand, baseline, structure, options, cache=cache) for m in methods}
