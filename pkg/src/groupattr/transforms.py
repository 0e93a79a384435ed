"""Invertible feature recodings acting on one block of features.

Two families are supported:

* group affine maps ``x_B -> A x_B + b``;
* linear-fractional maps ``x_B -> (A x_B + c) / (B x_B + d)`` (entrywise
  division).  A closed-form inverse is derived for the "ratio" pattern, where
  one pivot feature divides the other block members; any other shape needs a
  user-supplied inverse.  Either way the inverse is checked numerically before
  the transform can be composed with a model.

All maps act on full feature vectors (shape ``(m,)`` or ``(n, m)``) and leave
coordinates outside the block untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DET_RTOL = 1e-12
DENOM_FLOOR = 1e-9
INVERSE_TOL = 1e-9
FD_STEP = np.cbrt(np.finfo(float).eps)


class TransformError(ValueError):
    pass


class SingularTransformError(TransformError):
    pass


class DomainError(TransformError):
    pass


class UnverifiedInverseError(TransformError):
    pass


@dataclass(frozen=True)
class InverseCheck:
    max_error: float
    samples: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def _matvec(xb: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Row-wise ``M @ x`` that gives the same bits for any batch size."""
    return (xb[..., None, :] * M).sum(axis=-1)


def _block_get(X: np.ndarray, idx: tuple[int, ...]) -> np.ndarray:
    return X[..., list(idx)]


def _block_put(X: np.ndarray, idx: tuple[int, ...], values: np.ndarray) -> np.ndarray:
    out = np.array(X, dtype=float, copy=True)
    out[..., list(idx)] = values
    return out


def _as_box(box, k: int) -> np.ndarray | None:
    if box is None:
        return None
    arr = np.asarray(box, dtype=float).reshape(k, 2)
    if np.any(arr[:, 0] > arr[:, 1]):
        raise TransformError(f"box has lo > hi: {arr.tolist()}")
    return arr


def _check_box(Xb: np.ndarray, box: np.ndarray | None) -> None:
    if box is None:
        return
    tol = 1e-12 * (1.0 + np.abs(box))
    if np.any(Xb < box[:, 0] - tol[:, 0]) or np.any(Xb > box[:, 1] + tol[:, 1]):
        raise DomainError(f"block values {np.asarray(Xb).tolist()} outside domain box {box.tolist()}")


def hadamard_scale(A: np.ndarray) -> float:
    """Product of row norms; an upper bound on ``|det A|``."""
    return float(np.prod(np.linalg.norm(A, axis=1)))


def is_invertible(A: np.ndarray) -> bool:
    A = np.asarray(A, dtype=float)
    scale = hadamard_scale(A)
    return scale > 0 and abs(np.linalg.det(A)) > DET_RTOL * scale


@dataclass(frozen=True)
class GroupAffineTransform:
    """``h(x) = (A x_B + b, x_rest)`` for the features in ``indices``."""

    indices: tuple[int, ...]
    A: np.ndarray
    b: np.ndarray
    group: int | None = None
    box: np.ndarray | None = None

    def __post_init__(self):
        k = len(self.indices)
        A = np.asarray(self.A, dtype=float).reshape(k, k)
        b = np.asarray(self.b, dtype=float).reshape(k)
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "box", _as_box(self.box, k))
        if not is_invertible(A):
            raise SingularTransformError(f"affine matrix is singular: {A.tolist()}")

    kind = "affine"

    @property
    def verified(self) -> bool:
        return True

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        xb = _block_get(X, self.indices)
        _check_box(xb, self.box)
        return _block_put(X, self.indices, _matvec(xb, self.A) + self.b)

    def vjp(self, X, G) -> np.ndarray:
        """Pull back a gradient ``G`` taken at ``apply(X)`` to ``X``."""
        G = np.asarray(G, dtype=float)
        gb = _block_get(G, self.indices)
        return _block_put(G, self.indices, _matvec(gb, self.A.T))

    def inverse(self) -> "GroupAffineTransform":
        return invert_affine(self)

    def to_dict(self) -> dict:
        d = {
            "kind": "affine",
            "indices": [i + 1 for i in self.indices],
            "A": self.A.tolist(),
            "b": self.b.tolist(),
        }
        if self.box is not None:
            d["box"] = self.box.tolist()
        return d


def invert_affine(t: GroupAffineTransform) -> GroupAffineTransform:
    """Inverse affine map: ``A^-1`` via LU with partial pivoting, offset ``-A^-1 b``."""
    A_inv = np.linalg.inv(t.A)
    b_inv = -A_inv @ t.b
    return GroupAffineTransform(t.indices, A_inv, b_inv, group=t.group)


def single_feature_affine(i: int, scale: float, shift: float) -> GroupAffineTransform:
    """``x_i -> scale * x_i + shift``; the one-feature case used by ASI."""
    if scale == 0:
        raise SingularTransformError("scale must be non-zero")
    return GroupAffineTransform((i,), [[scale]], [shift])


@dataclass(frozen=True)
class _RatioInverse:
    """Closed-form inverse of the ratio pattern.

    Forward: ``y_p = (a_p x_p + c_p) / d_p`` and, for the other members,
    ``y_k = (a_k x_k + c_k) / (beta_k x_p)``.
    """

    indices: tuple[int, ...]
    pivot: int
    a: np.ndarray
    c: np.ndarray
    d_p: float
    beta: np.ndarray

    kind = "ratio-inverse"

    def _pivot_value(self, yb):
        p = self.pivot
        return (yb[..., p] * self.d_p - self.c[p]) / self.a[p]

    def apply(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        yb = _block_get(Y, self.indices)
        xp = self._pivot_value(yb)
        xb = np.empty_like(yb)
        for k in range(len(self.indices)):
            if k == self.pivot:
                xb[..., k] = xp
            else:
                xb[..., k] = (yb[..., k] * self.beta[k] * xp - self.c[k]) / self.a[k]
        return _block_put(Y, self.indices, xb)

    def vjp(self, Y, G) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        G = np.asarray(G, dtype=float)
        yb = _block_get(Y, self.indices)
        gb = _block_get(G, self.indices)
        p = self.pivot
        xp = self._pivot_value(yb)
        dxp = self.d_p / self.a[p]
        out = np.empty_like(gb)
        pivot_grad = gb[..., p] * dxp
        for k in range(len(self.indices)):
            if k == p:
                continue
            out[..., k] = gb[..., k] * self.beta[k] * xp / self.a[k]
            pivot_grad = pivot_grad + gb[..., k] * yb[..., k] * self.beta[k] * dxp / self.a[k]
        out[..., p] = pivot_grad
        return _block_put(G, self.indices, out)


@dataclass(frozen=True)
class _CallableInverse:
    """User-supplied block inverse; gradients by central differences."""

    indices: tuple[int, ...]
    fn: Callable[[np.ndarray], np.ndarray]

    kind = "callable-inverse"

    def apply(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        yb = _block_get(Y, self.indices)
        if yb.ndim == 1:
            xb = np.asarray(self.fn(yb), dtype=float)
        else:
            xb = np.stack([np.asarray(self.fn(row), dtype=float) for row in yb])
        return _block_put(Y, self.indices, xb)

    def vjp(self, Y, G) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        single = G.ndim == 1
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        G = np.atleast_2d(G)
        out = G.copy()
        for r in range(Y.shape[0]):
            yb = _block_get(Y[r], self.indices)
            gb = _block_get(G[r], self.indices)
            J = np.empty((len(yb), len(yb)))
            for k in range(len(yb)):
                h = FD_STEP * max(1.0, abs(yb[k]))
                up, dn = yb.copy(), yb.copy()
                up[k] += h
                dn[k] -= h
                J[:, k] = (np.asarray(self.fn(up)) - np.asarray(self.fn(dn))) / (2 * h)
            out[r, list(self.indices)] = gb @ J
        return out[0] if single else out


def _detect_ratio(A, B, c, d) -> tuple[int, np.ndarray] | None:
    """Pivot position and per-row ``beta`` if (A, B, c, d) is a ratio pattern."""
    k = A.shape[0]
    if not np.allclose(A, np.diag(np.diag(A)), rtol=0, atol=0):
        return None
    if np.any(np.diag(A) == 0):
        return None
    for p in range(k):
        if np.any(B[p] != 0) or d[p] == 0:
            continue
        beta = np.zeros(k)
        ok = True
        for r in range(k):
            if r == p:
                continue
            row = B[r].copy()
            beta[r] = row[p]
            row[p] = 0.0
            if np.any(row != 0) or beta[r] == 0 or d[r] != 0:
                ok = False
                break
        if ok:
            return p, beta
    return None


def _denominator_range(B: np.ndarray, d: np.ndarray, box: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact range of each affine denominator ``B x + d`` over a box."""
    lo = d + np.minimum(B * box[:, 0], B * box[:, 1]).sum(axis=1)
    hi = d + np.maximum(B * box[:, 0], B * box[:, 1]).sum(axis=1)
    return lo, hi


@dataclass(frozen=True)
class LinearFractionalTransform:
    """``p(x) = ((A x_B + c) / (B x_B + d), x_rest)`` on a declared box.

    The box bounds the block members' values; denominators must stay away
    from zero on it, and the inverse is verified on samples drawn from it.
    """

    indices: tuple[int, ...]
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    d: np.ndarray
    box: np.ndarray
    inverse_fn: Callable[[np.ndarray], np.ndarray] | None = None
    group: int | None = None
    samples: int = 128
    seed: int = 0
    check: InverseCheck = field(init=False, repr=False)
    _inverse: object = field(init=False, repr=False)

    kind = "linear-fractional"

    def __post_init__(self):
        k = len(self.indices)
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        for name, shape in (("A", (k, k)), ("B", (k, k)), ("c", (k,)), ("d", (k,))):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(shape))
        box = _as_box(self.box, k)
        if box is None:
            raise TransformError("linear-fractional transforms need a domain box")
        object.__setattr__(self, "box", box)
        lo, hi = _denominator_range(self.B, self.d, box)
        if np.any((lo <= DENOM_FLOOR) & (hi >= -DENOM_FLOOR)):
            raise DomainError(
                f"denominator range [{lo.tolist()}, {hi.tolist()}] reaches zero on the box"
            )
        ratio = _detect_ratio(self.A, self.B, self.c, self.d)
        if self.inverse_fn is not None:
            inv = _CallableInverse(self.indices, self.inverse_fn)
        elif ratio is not None:
            p, beta = ratio
            inv = _RatioInverse(self.indices, p, np.diag(self.A).copy(), self.c.copy(), float(self.d[p]), beta)
        else:
            raise TransformError("no closed-form inverse for this pattern; supply inverse_fn")
        object.__setattr__(self, "_inverse", inv)
        object.__setattr__(
            self, "check", verify_inverse(self, inv, box, samples=self.samples, seed=self.seed)
        )

    @classmethod
    def ratio(
        cls,
        indices: Sequence[int],
        pivot: int,
        box,
        scale: Sequence[float] | None = None,
        offset: Sequence[float] | None = None,
        group: int | None = None,
    ) -> "LinearFractionalTransform":
        """Pivot member kept (optionally rescaled); other members divided by it.

        ``pivot`` is a position within ``indices``.
        """
        k = len(indices)
        a = np.ones(k) if scale is None else np.asarray(scale, dtype=float)
        c = np.zeros(k) if offset is None else np.asarray(offset, dtype=float)
        B = np.zeros((k, k))
        d = np.zeros(k)
        for r in range(k):
            if r == pivot:
                d[r] = 1.0
            else:
                B[r, pivot] = 1.0
        return cls(tuple(indices), np.diag(a), B, c, d, box, group=group)

    @property
    def verified(self) -> bool:
        return self.check.passed

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        xb = _block_get(X, self.indices)
        _check_box(xb, self.box)
        num = _matvec(xb, self.A) + self.c
        den = _matvec(xb, self.B) + self.d
        if np.any(np.abs(den) <= DENOM_FLOOR):
            raise DomainError(f"denominator underflow at block values {xb.tolist()}")
        return _block_put(X, self.indices, num / den)

    def apply_unchecked(self, X) -> np.ndarray:
        """Forward map without the domain-box check (used during verification)."""
        X = np.asarray(X, dtype=float)
        xb = _block_get(X, self.indices)
        den = _matvec(xb, self.B) + self.d
        if np.any(np.abs(den) <= DENOM_FLOOR):
            raise DomainError(f"denominator underflow at block values {xb.tolist()}")
        return _block_put(X, self.indices, (_matvec(xb, self.A) + self.c) / den)

    def vjp(self, X, G) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        G = np.asarray(G, dtype=float)
        xb = _block_get(X, self.indices)
        gb = _block_get(G, self.indices)
        num = _matvec(xb, self.A) + self.c
        den = _matvec(xb, self.B) + self.d
        # J = diag(1/den) A - diag(num/den^2) B
        w1 = gb / den
        w2 = gb * num / den**2
        return _block_put(G, self.indices, _matvec(w1, self.A.T) - _matvec(w2, self.B.T))

    def inverse(self):
        return self._inverse

    def to_dict(self) -> dict:
        return {
            "kind": "linear-fractional",
            "indices": [i + 1 for i in self.indices],
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "c": self.c.tolist(),
            "d": self.d.tolist(),
            "box": self.box.tolist(),
        }


def apply(transform, x) -> np.ndarray:
    return transform.apply(x)


def verify_inverse(forward, inverse, box, samples: int = 128, tol: float = INVERSE_TOL, seed: int = 0) -> InverseCheck:
    """Round-trip ``inverse(forward(x))`` on points sampled from ``box``.

    ``box`` bounds the forward map's block members.  One extra coordinate past
    the block is carried along to catch maps that disturb other features.
    The error is ``|x - x_rt| / (1 + |x|)``, maximised over samples and
    coordinates.  Failures are reported, not raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    idx = tuple(forward.indices)
    k = len(idx)
    box = _as_box(box, k)
    m = max(idx) + 2
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(samples, m))
    X[:, list(idx)] = rng.uniform(box[:, 0], box[:, 1], size=(samples, k))
    fwd = getattr(forward, "apply_unchecked", forward.apply)
    try:
        back = inverse.apply(fwd(X))
        err = np.abs(back - X) / (1.0 + np.abs(X))
        max_err = float(np.max(err)) if np.all(np.isfinite(err)) else float("inf")
    except (DomainError, FloatingPointError, ZeroDivisionError):
        max_err = float("inf")
    return InverseCheck(max_err, samples, tol)


def transform_from_dict(d: dict, structure=None):
    """Build a transform from its config form (1-based indices or group).

    ``{"kind": "affine", "group": 1, "A": [[1, 1], [0, 1]], "b": [0, 0]}``
    ``{"kind": "ratio", "group": 1, "pivot": 1, "box": [[1, 10], [0, 10]]}``
    """
    kind = d.get("kind")
    group = d.get("group")
    if "indices" in d:
        indices = tuple(int(i) - 1 for i in d["indices"])
    elif group is not None and structure is not None:
        indices = structure.blocks[int(group) - 1]
    else:
        raise TransformError("transform needs 'indices' or 'group' with a group structure")
    g = int(group) - 1 if group is not None else None
    k = len(indices)
    if kind == "affine":
        return GroupAffineTransform(indices, d["A"], d.get("b", [0.0] * k), group=g, box=d.get("box"))
    if kind == "ratio":
        return LinearFractionalTransform.ratio(
            indices, int(d.get("pivot", 1)) - 1, d["box"], d.get("scale"), d.get("offset"), group=g
        )
    if kind == "linear-fractional":
        return LinearFractionalTransform(indices, d["A"], d["B"], d["c"], d["d"], d["box"], group=g)
    raise TransformError(f"unknown transform kind {kind!r}")
