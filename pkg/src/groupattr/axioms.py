"""Axiom checkers for attribution methods and the preservation matrix.

A check compares two attribution quantities ("sides") and returns a verdict.
Universal quantifiers ("for all c > 0", "for every transform") are covered
by seeded sampling plus explicit witnesses, so a ``pass`` only means that no
violation was found.

Every check carries the worst comparison it saw as a :class:`Witness`, and
:func:`recompute` re-derives the gap from the witness alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import counterexamples as cx
from .attribution import MethodOptions, attribute
from .model import (
    AdditiveLogisticModel,
    CombinedModel,
    LogisticLinearModel,
    Model,
    MonotonicityError,
    PiecewiseLinear,
    compose_with_inverse,
    validate_monotonicity,
)
from .partition import GroupStructure, validate
from .transforms import (
    DomainError,
    GroupAffineTransform,
    LinearFractionalTransform,
    single_feature_affine,
)

CLASSIC = ("completeness", "linearity", "dummy", "symmetry", "asi", "dim")
GROUP = ("gasi", "glfi", "gdim", "gspm")
AXIOMS = CLASSIC + GROUP
MATRIX_AXIOMS = ("asi", "dim", "gasi", "glfi", "gdim", "gspm")
MATRIX_METHODS = ("bshap", "ig", "gshap")
EXPECTED_MATRIX = {
    "bshap": dict(zip(MATRIX_AXIOMS, (True, True, False, False, False, False))),
    "ig": dict(zip(MATRIX_AXIOMS, (True, False, True, False, False, False))),
    "gshap": dict(zip(MATRIX_AXIOMS, (True,) * 6)),
}
# classic axioms outside the matrix hold for all three methods
for _row in EXPECTED_MATRIX.values():
    _row.update({"completeness": True, "linearity": True, "dummy": True, "symmetry": True})

DEFAULT_INCREMENTS = (0.25, 0.5, 1.0, 2.0, 4.0)
PRESERVED = "preserved-in-tests"
VIOLATED = "violation-found"


class AxiomPreconditionError(ValueError):
    """The model or inputs do not meet an axiom's hypotheses."""


def default_tolerance(method: str, axiom: str) -> float:
    if method == "ig":
        return 1e-6 if axiom in ("completeness", "linearity") else 1e-5
    return 1e-9


# --- sides and witnesses ------------------------------------------------------


@dataclass
class Side:
    """One attribution quantity: ``sum_k coef_k * A_target(model_k)``.

    ``target`` is ``("feature", i)``, ``("group", g)``, ``("total",)`` (sum
    of all attributions) or ``("delta",)`` (``f(xbar) - f(x')``).  An empty
    ``terms`` list stands for the constant 0.
    """

    terms: list[tuple[float, Model]]
    explicand: np.ndarray
    baseline: np.ndarray
    target: tuple

    def value(self, method: str, structure: GroupStructure | None, options: MethodOptions | None) -> float:
        return math.fsum(
            coef * _target_value(method, model, self.explicand, self.baseline, structure, self.target, options)
            for coef, model in self.terms
        )

    def to_dict(self) -> dict:
        target = list(self.target)
        if len(target) == 2:
            target[1] += 1
        return {
            "explicand": [float(v) for v in self.explicand],
            "baseline": [float(v) for v in self.baseline],
            "target": target,
            "terms": [{"weight": c, "model": _describe(m)} for c, m in self.terms],
        }


def _describe(model: Model):
    try:
        return model.to_dict()
    except Exception:
        return {"kind": model.kind}


def _target_value(method, model, explicand, baseline, structure, target, options) -> float:
    kind = target[0]
    if kind == "delta":
        return float(model.evaluate(explicand)) - float(model.evaluate(baseline))
    s = structure if structure is not None else GroupStructure.singletons(model.n_features)
    res = attribute(method, model, explicand, baseline, s, options)
    if kind == "total":
        vec = res.per_feature if res.per_feature is not None else res.per_group
        return math.fsum(vec)
    if kind == "group":
        return res.group_value(target[1])
    if kind == "feature":
        if res.per_feature is None:
            return res.group_value(s.group_of(target[1]))
        return float(res.per_feature[target[1]])
    raise ValueError(f"unknown target {target!r}")


@dataclass
class Witness:
    """Two sides and the relation they should satisfy.

    ``relation`` is ``"eq"`` (gap = |left - right|) or ``"le"``
    (gap = left - right, violated when positive beyond tolerance).
    """

    method: str
    left: Side
    right: Side
    relation: str
    left_value: float
    right_value: float
    gap: float
    structure: GroupStructure | None = None
    options: MethodOptions | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "relation": self.relation,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
            "left_value": self.left_value,
            "right_value": self.right_value,
            "gap": self.gap,
            "groups": None if self.structure is None else self.structure.to_one_based(),
            "note": self.note,
        }


def _gap(relation: str, left: float, right: float) -> float:
    return abs(left - right) if relation == "eq" else left - right


def compare(method, left: Side, right: Side, relation, structure=None, options=None, note="") -> Witness:
    lv = left.value(method, structure, options)
    rv = right.value(method, structure, options)
    return Witness(method, left, right, relation, lv, rv, _gap(relation, lv, rv), structure, options, note)


def recompute(witness: Witness) -> float:
    """Gap re-derived from the witness's stored inputs."""
    lv = witness.left.value(witness.method, witness.structure, witness.options)
    rv = witness.right.value(witness.method, witness.structure, witness.options)
    return _gap(witness.relation, lv, rv)


@dataclass
class AxiomCheck:
    axiom: str
    method: str
    verdict: str
    tolerance: float
    witness: Witness | None = None
    fixture: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "method": self.method,
            "fixture": self.fixture,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def _verdict(axiom, method, witnesses: Sequence[Witness], tol) -> AxiomCheck:
    worst = max(witnesses, key=lambda w: w.gap)
    return AxiomCheck(axiom, method, "violation" if worst.gap > tol else "pass", tol, worst)


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _single(model, x, xp, target) -> Side:
    return Side([(1.0, model)], _vec(x), _vec(xp), target)


# --- classic axioms -----------------------------------------------------------


def _probe_points(model: Model, n: int = 64, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(model.domain[:, 0], model.domain[:, 1], size=(n, model.n_features))


def _require_monotone(model: Model, i: int) -> None:
    if i not in model.monotone_increasing:
        raise AxiomPreconditionError(f"feature {i + 1} is not declared monotone increasing")
    try:
        validate_monotonicity(model)
    except MonotonicityError as exc:
        raise AxiomPreconditionError(str(exc)) from exc


def _increments(model: Model, i: int, x: np.ndarray, increments) -> list[float]:
    if increments is None:
        width = float(np.ptp(model.domain[i]))
        increments = [c * width / 10.0 for c in DEFAULT_INCREMENTS]
    keep = [float(c) for c in increments if c > 0 and x[i] + c <= model.domain[i, 1] + 1e-12]
    if not keep:
        raise AxiomPreconditionError(f"no positive increment keeps feature {i + 1} inside its domain")
    return keep


def check_classic(
    method: str,
    model: Model,
    explicand,
    baseline,
    axiom: str,
    tol: float | None = None,
    *,
    feature: int | None = None,
    other_feature: int | None = None,
    other_model: Model | None = None,
    alpha: float = 2.0,
    beta: float = -0.5,
    scale: float = 2.0,
    shift: float = 1.0,
    increments: Sequence[float] | None = None,
    structure: GroupStructure | None = None,
    options: MethodOptions | None = None,
) -> AxiomCheck:
    """Completeness, linearity, dummy, symmetry, ASI or DIM for one method.

    For ``gshap`` the attribution of feature ``i`` is that of its block in
    ``structure`` (all singletons by default).
    """
    if axiom not in CLASSIC:
        raise ValueError(f"{axiom!r} is not a classic axiom; expected one of {CLASSIC}")
    tol = default_tolerance(method, axiom) if tol is None else tol
    x, xp = _vec(explicand), _vec(baseline)
    s = structure

    if axiom == "completeness":
        w = compare(method, _single(model, x, xp, ("total",)), _single(model, x, xp, ("delta",)), "eq", s, options)
        return _verdict(axiom, method, [w], tol)

    if axiom == "linearity":
        if other_model is None:
            raise AxiomPreconditionError("linearity needs a second model")
        combo = CombinedModel([(alpha, model), (beta, other_model)])
        witnesses = []
        for k in range(model.n_features):
            left = _single(combo, x, xp, ("feature", k))
            right = Side([(alpha, model), (beta, other_model)], x, xp, ("feature", k))
            witnesses.append(compare(method, left, right, "eq", s, options))
        return _verdict(axiom, method, witnesses, tol)

    if feature is None:
        raise AxiomPreconditionError(f"{axiom} needs a feature index")
    i = feature

    if axiom == "dummy":
        P = _probe_points(model)
        Q = P.copy()
        Q[:, i] = P[::-1, i]
        if np.max(np.abs(model.evaluate(P) - model.evaluate(Q))) > 0:
            raise AxiomPreconditionError(f"feature {i + 1} is not a dummy of this model")
        w = compare(method, _single(model, x, xp, ("feature", i)), Side([], x, xp, ("feature", i)), "eq", s, options)
        return _verdict(axiom, method, [w], tol)

    if axiom == "symmetry":
        j = other_feature
        if j is None:
            raise AxiomPreconditionError("symmetry needs a second feature index")
        if x[i] != x[j] or xp[i] != xp[j]:
            raise AxiomPreconditionError("symmetry needs equal explicand and baseline values at i and j")
        P = _probe_points(model)
        Q = P.copy()
        Q[:, [i, j]] = P[:, [j, i]]
        if np.max(np.abs(model.evaluate(P) - model.evaluate(Q))) > 1e-12:
            raise AxiomPreconditionError(f"model is not symmetric in features {i + 1} and {j + 1}")
        w = compare(method, _single(model, x, xp, ("feature", i)), _single(model, x, xp, ("feature", j)), "eq", s, options)
        return _verdict(axiom, method, [w], tol)

    if axiom == "asi":
        h = single_feature_affine(i, scale, shift)
        g = compose_with_inverse(model, h)
        w = compare(
            method,
            _single(model, x, xp, ("feature", i)),
            _single(g, h.apply(x), h.apply(xp), ("feature", i)),
            "eq", s, options,
        )
        return _verdict(axiom, method, [w], tol)

    # dim
    _require_monotone(model, i)
    witnesses = []
    for c in _increments(model, i, x, increments):
        up = x.copy()
        up[i] += c
        witnesses.append(
            compare(method, _single(model, x, xp, ("feature", i)), _single(model, up, xp, ("feature", i)), "le", s, options, note=f"c={c:g}")
        )
    return _verdict(axiom, method, witnesses, tol)


# --- group axioms -------------------------------------------------------------


def _block_of(transform, structure: GroupStructure) -> int:
    groups = {structure.group_of(i) for i in transform.indices}
    if len(groups) != 1:
        raise AxiomPreconditionError("transform mixes features from several blocks")
    return groups.pop()


def _check_invariance(axiom, method, model, structure, transform, explicand, baseline, tol, options, transformed_baseline=None):
    if not transform.verified:
        raise AxiomPreconditionError("transform inverse failed verification")
    g_idx = _block_of(transform, structure)
    x, xp = _vec(explicand), _vec(baseline)
    g = compose_with_inverse(model, transform)
    tx = transform.apply(x)
    if transformed_baseline is None:
        try:
            txp = transform.apply(xp)
        except DomainError as exc:
            raise AxiomPreconditionError(f"baseline outside the transform's domain: {exc}") from exc
    else:
        txp = _vec(transformed_baseline)
        back = transform.inverse().apply(txp)
        if np.max(np.abs(back - xp)) > 1e-9:
            raise AxiomPreconditionError("supplied recoded baseline does not map back to the baseline")
    tol = default_tolerance(method, axiom) if tol is None else tol
    w = compare(method, _single(model, x, xp, ("group", g_idx)), _single(g, tx, txp, ("group", g_idx)), "eq", structure, options)
    return _verdict(axiom, method, [w], tol)


def check_gasi(method, model, structure, transform, explicand, baseline, tol=None, options=None) -> AxiomCheck:
    """Group attribution unchanged under an invertible affine recoding of its block."""
    if not isinstance(transform, GroupAffineTransform):
        raise AxiomPreconditionError("GASI needs a group affine transform")
    return _check_invariance("gasi", method, model, structure, transform, explicand, baseline, tol, options)


def check_glfi(method, model, structure, transform, explicand, baseline, tol=None, options=None,
               transformed_baseline=None) -> AxiomCheck:
    """As :func:`check_gasi`, for a linear-fractional recoding.

    When the baseline sits on a zero denominator, ``transformed_baseline``
    may name its recoded image explicitly; it must map back to the baseline.
    """
    if not isinstance(transform, LinearFractionalTransform):
        raise AxiomPreconditionError("GLFI needs a linear-fractional transform")
    return _check_invariance("glfi", method, model, structure, transform, explicand, baseline, tol, options, transformed_baseline)


def check_gdim(method, model, structure, feature, explicand, baseline, increments=None, tol=None, options=None) -> AxiomCheck:
    """Raising a monotone feature never lowers its block's attribution."""
    _require_monotone(model, feature)
    tol = default_tolerance(method, "gdim") if tol is None else tol
    x, xp = _vec(explicand), _vec(baseline)
    g = structure.group_of(feature)
    witnesses = []
    for c in _increments(model, feature, x, increments):
        up = x.copy()
        up[feature] += c
        witnesses.append(
            compare(method, _single(model, x, xp, ("group", g)), _single(model, up, xp, ("group", g)), "le", structure, options, note=f"c={c:g}")
        )
    return _verdict("gdim", method, witnesses, tol)


def check_gspm(method, model, structure, pair, explicand, baseline, shifts=None, tol=None, options=None) -> AxiomCheck:
    """Moving mass from the weaker to the stronger feature never lowers the block.

    ``pair = (i, j)`` with ``i`` the stronger feature.  Compares
    ``(x_i, x_j + c)`` against ``(x_i + c, x_j)``.  The explicand must have
    ``x_i >= x'_i`` and ``x_j >= x'_j``.
    """
    i, j = pair
    if (i, j) not in model.strong_pairs:
        raise AxiomPreconditionError(f"pair ({i + 1} over {j + 1}) is not declared strongly monotone")
    try:
        validate_monotonicity(model)
    except MonotonicityError as exc:
        raise AxiomPreconditionError(str(exc)) from exc
    g = structure.group_of(i)
    if structure.group_of(j) != g:
        raise AxiomPreconditionError("strong pair spans two blocks")
    x, xp = _vec(explicand), _vec(baseline)
    if x[i] < xp[i] or x[j] < xp[j]:
        raise AxiomPreconditionError("explicand must not sit below the baseline on the pair")
    tol = default_tolerance(method, "gspm") if tol is None else tol
    if shifts is None:
        width = float(min(np.ptp(model.domain[i]), np.ptp(model.domain[j])))
        shifts = [c * width / 10.0 for c in DEFAULT_INCREMENTS]
    witnesses = []
    for c in shifts:
        if x[i] + c > model.domain[i, 1] + 1e-12 or x[j] + c > model.domain[j, 1] + 1e-12:
            continue
        weak = x.copy()
        weak[j] += c
        strong = x.copy()
        strong[i] += c
        witnesses.append(
            compare(method, _single(model, weak, xp, ("group", g)), _single(model, strong, xp, ("group", g)), "le", structure, options, note=f"c={c:g}")
        )
    if not witnesses:
        raise AxiomPreconditionError("no shift keeps the pair inside its domain")
    return _verdict("gspm", method, witnesses, tol)


# --- sensitivity decomposition --------------------------------------------------


@dataclass
class SensitivityDecomposition:
    """Derivatives of BShap attributions for features 1 and 2 w.r.t. ``xbar_1``."""

    d_bs1: float
    d_bs2: float
    d_sum: float
    fd_bs1: float
    fd_bs2: float

    @property
    def max_gap(self) -> float:
        return max(abs(self.d_bs1 - self.fd_bs1), abs(self.d_bs2 - self.fd_bs2))


def bshap_sensitivity_decomposition(model: Model, explicand, baseline, step: float = 1e-5) -> SensitivityDecomposition:
    """Four-term formulas for ``dBS_1/dxbar_1`` and ``dBS_2/dxbar_1`` (m = 3).

    With ``a, b, c, d`` the partial in ``x_1`` at ``(xbar_1, x'_2, x'_3)``,
    ``(xbar_1, xbar_2, x'_3)``, ``(xbar_1, x'_2, xbar_3)`` and ``xbar``:

        dBS_1 = a/3 + d/3 + b/6 + c/6
        dBS_2 = d/3 - c/3 + b/6 - a/6

    Central differences of exact BShap are returned alongside for comparison.
    """
    if model.n_features != 3:
        raise ValueError(f"the decomposition is stated for 3 features, model has {model.n_features}")
    x, xp = _vec(explicand), _vec(baseline)
    pts = np.array([
        [x[0], xp[1], xp[2]],
        [x[0], x[1], xp[2]],
        [x[0], xp[1], x[2]],
        x,
    ])
    a, b, c, d = model.grad(pts)[:, 0]
    d1 = a / 3 + d / 3 + b / 6 + c / 6
    d2 = d / 3 - c / 3 + b / 6 - a / 6
    h = step * max(1.0, abs(x[0]))
    up, dn = x.copy(), x.copy()
    up[0] += h
    dn[0] -= h
    bs_up = attribute("bshap", model, up, xp).per_feature
    bs_dn = attribute("bshap", model, dn, xp).per_feature
    fd = (bs_up - bs_dn) / (2 * h)
    return SensitivityDecomposition(float(d1), float(d2), float(d1 + d2), float(fd[0]), float(fd[1]))


# --- fixtures and the preservation matrix ----------------------------------------


@dataclass
class Fixture:
    axiom: str
    name: str
    run: Callable[[str], AxiomCheck]

    def check(self, method: str) -> AxiomCheck:
        result = self.run(method)
        result.fixture = self.name
        return result


def worked_fixtures() -> list[Fixture]:
    B = cx.pair_groups()
    z = cx.ZERO3
    return [
        Fixture("gasi", "gasi-worked", lambda m: check_gasi(m, cx.gasi_model(), B, cx.gasi_transform(), cx.GASI_EXPLICAND, z)),
        Fixture("gasi", "gasi-printed", lambda m: check_gasi(m, cx.gasi_model(), B, cx.gasi_transform(), cx.GASI_EXPLICAND_PRINTED, z)),
        Fixture("glfi", "glfi-worked", lambda m: check_glfi(
            m, cx.glfi_model(), B, cx.glfi_transform(), cx.GLFI_EXPLICAND, z,
            transformed_baseline=cx.GLFI_TRANSFORMED_BASELINE)),
        Fixture("gdim", "gdim-worked", lambda m: check_gdim(m, cx.gdim_model(), B, 0, cx.GDIM_BEFORE, z, increments=[2.0])),
        Fixture("gspm", "gspm-worked", lambda m: check_gspm(m, cx.gspm_model(), B, (1, 0), cx.GSPM_BASE, z, shifts=[cx.GSPM_SHIFT])),
        Fixture("dim", "dim-gdim-model", lambda m: check_classic(m, cx.gdim_model(), cx.GDIM_BEFORE, z, "dim", feature=0,
                                                                 increments=[0.5, 1.0, 2.0], structure=B)),
        Fixture("dim", "dim-ig-witness", lambda m: check_classic(m, cx.gdim_model(), cx.IG_DIM_EXPLICAND, z, "dim", feature=0,
                                                                 increments=[0.5, 1.0, 2.0], structure=B)),
    ]


def _random_partition(rng, m: int) -> GroupStructure:
    order = list(rng.permutation(m))
    cuts = sorted(rng.choice(np.arange(1, m), size=rng.integers(0, m - 1), replace=False)) if m > 1 else []
    blocks, prev = [], 0
    for c in list(cuts) + [m]:
        blocks.append([int(k) for k in order[prev:c]])
        prev = c
    return validate(blocks, m)


def _random_logistic(rng, m, nonneg=False, box=(-2.0, 4.0), **meta):
    w = rng.uniform(0.0, 2.0, m) if nonneg else rng.uniform(-2.0, 2.0, m)
    return LogisticLinearModel(rng.uniform(-3.0, 3.0), w, domain=[box] * m, **meta)


def _random_additive(rng, m, box=(-2.0, 4.0), **meta):
    shapes = []
    for _ in range(m):
        knots = np.sort(rng.uniform(box[0], box[1], 3))
        knots = np.concatenate([[box[0]], knots, [box[1]]])
        knots = np.unique(knots)
        values = np.cumsum(np.concatenate([[0.0], rng.uniform(0.0, 1.0, len(knots) - 1)]))
        shapes.append(PiecewiseLinear(knots, values - 1.0))
    return AdditiveLogisticModel(rng.uniform(-3.0, 1.0), shapes, domain=[box] * m, **meta)


def _random_model(rng, m, nonneg=False, **meta):
    if nonneg and rng.random() < 0.5:
        return _random_additive(rng, m, **meta)
    return _random_logistic(rng, m, nonneg=nonneg, **meta)


def _random_point(rng, model):
    return rng.uniform(model.domain[:, 0], model.domain[:, 1])


def _random_invertible(rng, k):
    while True:
        A = rng.uniform(-2.0, 2.0, (k, k))
        if np.linalg.cond(A) < 1e4:
            return A


def _make_random_fixture(axiom: str, rng: np.random.Generator, name: str) -> Fixture:
    m = int(rng.integers(3, 6))
    B = _random_partition(rng, m)

    if axiom in ("completeness", "linearity", "asi"):
        f = _random_model(rng, m)
        x, xp = _random_point(rng, f), _random_point(rng, f)
        if axiom == "completeness":
            return Fixture(axiom, name, lambda meth: check_classic(meth, f, x, xp, axiom, structure=B))
        if axiom == "linearity":
            g = _random_model(rng, m)
            a, b = rng.uniform(-2, 2, 2)
            return Fixture(axiom, name, lambda meth: check_classic(meth, f, x, xp, axiom, other_model=g, alpha=a, beta=b, structure=B))
        i = int(rng.integers(m))
        c = float(rng.choice([-1, 1]) * rng.uniform(0.2, 3.0))
        d = float(rng.uniform(-2, 2))
        return Fixture(axiom, name, lambda meth: check_classic(meth, f, x, xp, axiom, feature=i, scale=c, shift=d, structure=B))

    if axiom == "dummy":
        i = int(rng.integers(m))
        w = rng.uniform(-2, 2, m)
        # block credit needs the whole block inert
        w[list(B.blocks[B.group_of(i)])] = 0.0
        f = LogisticLinearModel(rng.uniform(-3, 3), w, domain=[(-2.0, 4.0)] * m)
        x, xp = _random_point(rng, f), _random_point(rng, f)
        return Fixture(axiom, name, lambda meth: check_classic(meth, f, x, xp, axiom, feature=i, structure=B))

    if axiom == "symmetry":
        i, j = (int(k) for k in rng.choice(m, 2, replace=False))
        w = rng.uniform(-2, 2, m)
        w[j] = w[i]
        f = LogisticLinearModel(rng.uniform(-3, 3), w, domain=[(-2.0, 4.0)] * m)
        x, xp = _random_point(rng, f), _random_point(rng, f)
        x[j], xp[j] = x[i], xp[i]
        S = validate([[k] for k in range(m)], m)
        return Fixture(axiom, name, lambda meth: check_classic(meth, f, x, xp, axiom, feature=i, other_feature=j, structure=S))

    if axiom in ("dim", "gdim"):
        f = _random_model(rng, m, nonneg=True, monotone_increasing=range(m))
        x, xp = _random_point(rng, f), _random_point(rng, f)
        i = int(rng.integers(m))
        lo, hi = f.domain[i]
        x[i] = rng.uniform(lo, hi - 0.2 * (hi - lo))  # leave room for increments
        if axiom == "dim":
            return Fixture(axiom, name, lambda meth: check_classic(meth, f, x, xp, axiom, feature=i, structure=B))
        return Fixture(axiom, name, lambda meth: check_gdim(meth, f, B, i, x, xp))

    if axiom == "gspm":
        # put the pair in one block
        i, j = (int(k) for k in rng.choice(m, 2, replace=False))
        rest = [k for k in range(m) if k not in (i, j)]
        B = validate([[i, j]] + [[k] for k in rest], m)
        w = rng.uniform(0.0, 2.0, m)
        w[i], w[j] = max(w[i], w[j]), min(w[i], w[j])
        f = LogisticLinearModel(rng.uniform(-3, 3), w, domain=[(-2.0, 4.0)] * m,
                                monotone_increasing=[i, j], strong_pairs=[(i, j)])
        xp = _random_point(rng, f)
        xp[[i, j]] = rng.uniform(-2.0, 1.0, 2)
        x = _random_point(rng, f)
        x[i] = rng.uniform(xp[i], 2.0)
        x[j] = rng.uniform(xp[j], 2.0)
        return Fixture(axiom, name, lambda meth: check_gspm(meth, f, B, (i, j), x, xp))

    if axiom == "gasi":
        f = _random_model(rng, m)
        g_idx = int(np.argmax([len(b) for b in B.blocks]))
        block = B.blocks[g_idx]
        A = _random_invertible(rng, len(block))
        t = GroupAffineTransform(block, A, rng.uniform(-2, 2, len(block)), group=g_idx)
        x, xp = _random_point(rng, f), _random_point(rng, f)
        return Fixture(axiom, name, lambda meth: check_gasi(meth, f, B, t, x, xp))

    if axiom == "glfi":
        # ratio recoding needs a block of >= 2 with a positive pivot
        i, j = (int(k) for k in rng.choice(m, 2, replace=False))
        rest = [k for k in range(m) if k not in (i, j)]
        extra = [k for k in rest if rng.random() < 0.3]
        block = [i, j] + extra
        B = validate([block] + [[k] for k in rest if k not in extra], m)
        box = [(0.5, 3.0)] + [(-3.0, 3.0)] * (len(block) - 1)
        scale = rng.choice([-1, 1], len(block)) * rng.uniform(0.5, 2.0, len(block))
        offset = rng.uniform(-1, 1, len(block))
        t = LinearFractionalTransform.ratio(block, 0, box, scale, offset, group=0)
        f = _random_model(rng, m)
        x, xp = _random_point(rng, f), _random_point(rng, f)
        for pos, k in enumerate(block):
            x[k] = rng.uniform(*box[pos])
            xp[k] = rng.uniform(*box[pos])
        return Fixture(axiom, name, lambda meth: check_glfi(meth, f, B, t, x, xp))

    raise ValueError(f"no random fixture generator for {axiom!r}")


def random_fixtures(axiom: str, instances: int, seed: int = 0) -> list[Fixture]:
    """``instances`` seeded random fixtures for one axiom.

    Each axiom draws from its own child stream of ``seed``, so adding or
    removing axioms does not change the others' fixtures.
    """
    stream = AXIOMS.index(axiom)
    root = np.random.SeedSequence([seed, stream])
    return [
        _make_random_fixture(axiom, np.random.default_rng(child), f"{axiom}-random-{k}")
        for k, child in enumerate(root.spawn(instances))
    ]


@dataclass
class PreservationMatrix:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: dict[tuple[str, str], str]
    checks: list[AxiomCheck] = field(default_factory=list)

    def expected(self, method: str, axiom: str) -> str:
        return PRESERVED if EXPECTED_MATRIX[method][axiom] else VIOLATED

    def disagreements(self) -> list[tuple[str, str]]:
        return [
            (r, c) for r in self.rows for c in self.columns
            if r in EXPECTED_MATRIX and self.cells[(r, c)] != self.expected(r, c)
        ]

    @property
    def agrees(self) -> bool:
        return not self.disagreements()

    def render(self) -> str:
        """Yes/No table with methods as rows and axioms as columns."""
        names = {"bshap": "BShap", "ig": "IG", "gshap": "GShap", "owen": "Owen"}
        head = "BAM\\Axioms".ljust(12) + "".join(c.upper().ljust(14) for c in self.columns)
        lines = [head, "-" * len(head)]
        for r in self.rows:
            cells = []
            for c in self.columns:
                mark = "Yes" if self.cells[(r, c)] == PRESERVED else "No"
                if r in EXPECTED_MATRIX and self.cells[(r, c)] != self.expected(r, c):
                    mark += " (!)"
                cells.append(mark.ljust(14))
            lines.append(names.get(r, r).ljust(12) + "".join(cells))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "rows": list(self.rows),
            "columns": list(self.columns),
            "cells": {f"{r}/{c}": self.cells[(r, c)] for r in self.rows for c in self.columns},
            "agrees_with_table": self.agrees,
            "violations": [c.to_dict() for c in self.checks if not c.passed],
            "checks_run": len(self.checks),
        }


def run_preservation_matrix(
    fixtures: Sequence[Fixture] | None = None,
    axioms: Sequence[str] = MATRIX_AXIOMS,
    methods: Sequence[str] = MATRIX_METHODS,
    instances: int = 100,
    seed: int = 0,
) -> PreservationMatrix:
    """Run every fixture for every method and fold the verdicts into cells.

    With ``fixtures=None`` the worked fixtures are combined with ``instances``
    seeded random fixtures per axiom.
    """
    axioms = tuple(axioms)
    if fixtures is None:
        fixtures = [f for f in worked_fixtures() if f.axiom in axioms]
        for a in axioms:
            fixtures += random_fixtures(a, instances, seed)
    cells = {(r, c): PRESERVED for r in methods for c in axioms}
    checks = []
    for fx in fixtures:
        if fx.axiom not in axioms:
            continue
        for meth in methods:
            result = fx.check(meth)
            checks.append(result)
            if not result.passed:
                cells[(meth, fx.axiom)] = VIOLATED
    return PreservationMatrix(tuple(methods), axioms, cells, checks)
