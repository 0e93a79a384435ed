"""The worked examples and counterexamples, as reusable fixtures.

Each fixture pairs a model, explicands and a group structure with the values
reported for it (two decimals).  :func:`reproduce` recomputes everything and
returns an expected-vs-computed table.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .attribution import MethodOptions, attribute
from .model import LogisticLinearModel, compose_with_inverse
from .partition import GroupStructure, gshap_coefficients, mask_of, owen_coefficients, validate
from .transforms import GroupAffineTransform, LinearFractionalTransform

REPORTED_TOL = 0.02
INVARIANCE_TOL = {"bshap": 1e-8, "gshap": 1e-8, "owen": 1e-8, "ig": 1e-5}
ZERO3 = (0.0, 0.0, 0.0)
WHICH = ("gasi", "glfi", "gdim", "gspm", "owen-example")


def pair_groups() -> GroupStructure:
    """``{{1, 2}, {3}}``."""
    return validate([[0, 1], [2]], 3)


# past-due recoding: (x1, x2) -> (x1 + x2, x2)
def gasi_model():
    return LogisticLinearModel(-10.0, [1.0, 2.0, 1.0], domain=[(0.0, 50.0)] * 3)


def gasi_transform():
    return GroupAffineTransform((0, 1), [[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0], group=0)


GASI_EXPLICAND = (0.0, 20.0, 20.0)
# as printed; its image is (40, 40, 20), not (20, 20, 20)
GASI_EXPLICAND_PRINTED = (0.0, 40.0, 20.0)


# ratio recoding: (x1, x2) -> (x1, x2 / x1)
def glfi_model():
    return LogisticLinearModel(-10.0, [3.0, 4.0, 5.0], domain=[(0.0, 10.0)] * 3)


def glfi_transform():
    return LinearFractionalTransform.ratio((0, 1), pivot=0, box=[[1.0, 10.0], [0.0, 10.0]], group=0)


GLFI_EXPLICAND = (5.0, 5.0, 5.0)
# p(0) has a 0/0 pivot; the recoded baseline is the origin, which p^-1 maps back to 0
GLFI_TRANSFORMED_BASELINE = (0.0, 0.0, 0.0)


def gdim_model():
    return LogisticLinearModel(
        -10.0, [10.0, 10.0, -10.0], domain=[(0.0, 10.0)] * 3, monotone_increasing=[0, 1]
    )


GDIM_BEFORE = (2.0, 2.0, 2.0)
GDIM_AFTER = (4.0, 2.0, 2.0)
# IG's per-feature DIM fails here on the same model: IG_1 drops from 4/3 as x1 grows
IG_DIM_EXPLICAND = (4.0, 0.0, 1.0)


def gspm_model():
    """Strongly monotone in x2 over x1."""
    return LogisticLinearModel(
        -10.0,
        [5.0, 10.0, -10.0],
        domain=[(0.0, 10.0)] * 3,
        monotone_increasing=[0, 1],
        strong_pairs=[(1, 0)],
    )


GSPM_LEFT = (3.0, 3.0, 2.0)
GSPM_RIGHT = (0.0, 6.0, 2.0)
# (x2, x1 + c) vs (x2 + c, x1) with c = 3 around this point
GSPM_BASE = (0.0, 3.0, 2.0)
GSPM_SHIFT = 3.0


@dataclass(frozen=True)
class Row:
    fixture: str
    method: str
    label: str
    computed: float
    expected: float | None = None
    reference: float | None = None
    tolerance: float = REPORTED_TOL

    @property
    def error(self) -> float:
        target = self.expected if self.expected is not None else self.reference
        return abs(self.computed - target)

    @property
    def ok(self) -> bool:
        return self.error <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "fixture": self.fixture,
            "method": self.method,
            "label": self.label,
            "expected": self.expected,
            "reference": self.reference,
            "computed": self.computed,
            "error": self.error,
            "tolerance": self.tolerance,
            "ok": self.ok,
        }


def _group(method, model, x, baseline, structure, g=0, options=None) -> float:
    return attribute(method, model, x, baseline, structure, options).group_value(g)


def _invariance_rows(name, model, transform, explicand, baseline, t_baseline, expected, options):
    B = pair_groups()
    g = compose_with_inverse(model, transform)
    tx = transform.apply(np.asarray(explicand, dtype=float))
    tb = transform.apply(np.asarray(baseline, dtype=float)) if t_baseline is None else np.asarray(t_baseline)
    rows = []
    for method in ("bshap", "ig", "gshap"):
        before = _group(method, model, explicand, baseline, B, options=options)
        after = _group(method, g, tx, tb, B, options=options)
        exp = expected.get(method)
        if exp is not None:
            rows.append(Row(name, method, f"A_B1 at {tuple(explicand)}", before, exp[0]))
            rows.append(Row(name, method, f"A_B1 recoded at {tuple(tx.tolist())}", after, exp[1]))
        else:
            rows.append(Row(name, method, "recoded minus original", after - before, None, 0.0, INVARIANCE_TOL[method]))
    return rows


def _pair_rows(name, model, left, right, expected, options, labels):
    B = pair_groups()
    rows = []
    for method, (e_left, e_right) in expected.items():
        rows.append(Row(name, method, f"A_B1 at {left} ({labels[0]})", _group(method, model, left, ZERO3, B, options=options), e_left))
        rows.append(Row(name, method, f"A_B1 at {right} ({labels[1]})", _group(method, model, right, ZERO3, B, options=options), e_right))
    return rows


def reproduce_gasi(options=None) -> list[Row]:
    rows = _invariance_rows(
        "gasi", gasi_model(), gasi_transform(), GASI_EXPLICAND, ZERO3, None,
        {"bshap": (0.5, 2.0 / 3.0)}, options,
    )
    rows += [
        Row("gasi", r.method, r.label, r.computed, r.expected, r.reference, r.tolerance)
        for r in _invariance_rows(
            "gasi", gasi_model(), gasi_transform(), GASI_EXPLICAND_PRINTED, ZERO3, None,
            {"bshap": (0.5, 2.0 / 3.0)}, options,
        )
    ]
    return rows


def reproduce_glfi(options=None) -> list[Row]:
    return _invariance_rows(
        "glfi", glfi_model(), glfi_transform(), GLFI_EXPLICAND, ZERO3, GLFI_TRANSFORMED_BASELINE,
        {"bshap": (0.66, 0.50), "ig": (0.58, 0.49)}, options,
    )


def reproduce_gdim(options=None) -> list[Row]:
    return _pair_rows(
        "gdim", gdim_model(), GDIM_BEFORE, GDIM_AFTER,
        {"bshap": (1.33, 1.16), "ig": (2.00, 1.50), "gshap": (1.00, 1.00)}, options,
        ("before", "x1 increased"),
    )


def reproduce_gspm(options=None) -> list[Row]:
    return _pair_rows(
        "gspm", gspm_model(), GSPM_LEFT, GSPM_RIGHT,
        {"bshap": (1.25, 1.00), "ig": (1.80, 1.50), "gshap": (1.00, 1.00)}, options,
        ("weaker", "stronger"),
    )


# Owen/GShap weights for B = {{1, 2}, {3}}, written out term by term
def _key(with_, without):
    return (mask_of(i - 1 for i in with_), mask_of(i - 1 for i in without))


GSHAP_EXAMPLE = [
    {_key({1, 2}, set()): Fraction(1, 2), _key({1, 2, 3}, {3}): Fraction(1, 2)},
    {_key({3}, set()): Fraction(1, 2), _key({1, 2, 3}, {1, 2}): Fraction(1, 2)},
]
OWEN_EXAMPLE = [
    {
        _key({1}, set()): Fraction(1, 4),
        _key({1, 2}, {2}): Fraction(1, 4),
        _key({1, 3}, {3}): Fraction(1, 4),
        _key({1, 2, 3}, {2, 3}): Fraction(1, 4),
    },
    {
        _key({2}, set()): Fraction(1, 4),
        _key({1, 2}, {1}): Fraction(1, 4),
        _key({2, 3}, {3}): Fraction(1, 4),
        _key({1, 2, 3}, {1, 3}): Fraction(1, 4),
    },
]


def reproduce_owen_example(options=None) -> list[Row]:
    """Symbolic weight tables for ``{{1, 2}, {3}}`` compared term by term."""
    B = pair_groups()
    gs = gshap_coefficients(B)
    ow = owen_coefficients(B)
    rows = []
    for g, table in enumerate(GSHAP_EXAMPLE):
        rows.append(Row("owen-example", "gshap", f"GS_B{g + 1} weights match", float(gs[g] == table), 1.0, tolerance=0.0))
    for j, table in enumerate(OWEN_EXAMPLE):
        rows.append(Row("owen-example", "owen", f"OW_{j + 1} weights match", float(ow[j] == table), 1.0, tolerance=0.0))
    return rows


REPRODUCERS = {
    "gasi": reproduce_gasi,
    "glfi": reproduce_glfi,
    "gdim": reproduce_gdim,
    "gspm": reproduce_gspm,
    "owen-example": reproduce_owen_example,
}


def reproduce(which: str = "all", options: MethodOptions | None = None) -> list[Row]:
    if which == "all":
        return [row for name in WHICH for row in REPRODUCERS[name](options)]
    if which not in REPRODUCERS:
        raise ValueError(f"unknown fixture {which!r}; expected 'all' or one of {WHICH}")
    return REPRODUCERS[which](options)


def format_rows(rows: list[Row]) -> str:
    header = f"{'fixture':<13}{'method':<7}{'quantity':<44}{'expected':>10}{'computed':>12}{'error':>11}  ok"
    lines = [header, "-" * len(header)]
    for r in rows:
        exp = r.expected if r.expected is not None else r.reference
        lines.append(
            f"{r.fixture:<13}{r.method:<7}{r.label:<44}{exp:>10.4f}{r.computed:>12.6f}{r.error:>11.2e}  {'yes' if r.ok else 'NO'}"
        )
    return "\n".join(lines)
