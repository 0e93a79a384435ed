import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import groupattr.counterexamples as cx
from groupattr.axioms import (
    PRESERVED,
    EXPECTED_MATRIX,
    VIOLATED,
    AxiomPreconditionError,
    bshap_sensitivity_decomposition,
    check_classic,
    check_gasi,
    check_gdim,
    check_glfi,
    check_gspm,
    worked_fixtures,
    random_fixtures,
    recompute,
    run_preservation_matrix,
)
from groupattr.model import CallableModel, LinearModel, LogisticLinearModel
from groupattr.transforms import GroupAffineTransform

Z = cx.ZERO3
B = cx.pair_groups()


@pytest.mark.parametrize("method, verdict", [("bshap", "violation"), ("ig", "pass"), ("gshap", "pass")])
def test_gasi_worked_fixture(method, verdict):
    res = check_gasi(method, cx.gasi_model(), B, cx.gasi_transform(), cx.GASI_EXPLICAND, Z)
    assert res.verdict == verdict


@pytest.mark.parametrize("method, verdict", [("bshap", "violation"), ("ig", "violation"), ("gshap", "pass")])
def test_glfi_worked_fixture(method, verdict):
    res = check_glfi(method, cx.glfi_model(), B, cx.glfi_transform(), cx.GLFI_EXPLICAND, Z,
                     transformed_baseline=cx.GLFI_TRANSFORMED_BASELINE)
    assert res.verdict == verdict


def test_glfi_rejects_zero_pivot_baseline():
    with pytest.raises(AxiomPreconditionError):
        check_glfi("bshap", cx.glfi_model(), B, cx.glfi_transform(), cx.GLFI_EXPLICAND, Z)
    with pytest.raises(AxiomPreconditionError):
        check_glfi("bshap", cx.glfi_model(), B, cx.glfi_transform(), cx.GLFI_EXPLICAND, Z,
                   transformed_baseline=(1.0, 0.0, 0.0))


@pytest.mark.parametrize("method, verdict", [("bshap", "violation"), ("ig", "violation"), ("gshap", "pass")])
def test_gdim_worked_fixture(method, verdict):
    res = check_gdim(method, cx.gdim_model(), B, 0, cx.GDIM_BEFORE, Z, increments=[2.0])
    assert res.verdict == verdict
    assert res.witness.right.explicand.tolist() == list(cx.GDIM_AFTER)


@pytest.mark.parametrize("method, verdict", [("bshap", "violation"), ("ig", "violation"), ("gshap", "pass")])
def test_gspm_worked_fixture(method, verdict):
    res = check_gspm(method, cx.gspm_model(), B, (1, 0), cx.GSPM_BASE, Z, shifts=[cx.GSPM_SHIFT])
    assert res.verdict == verdict


def test_violation_witnesses_recompute():
    for fx in worked_fixtures():
        for method in ("bshap", "ig", "gshap"):
            res = fx.check(method)
            if not res.passed:
                assert res.witness.gap > res.tolerance
                assert abs(recompute(res.witness) - res.witness.gap) < 1e-9


def test_witness_serialises_with_one_based_indices():
    res = check_gdim("bshap", cx.gdim_model(), B, 0, cx.GDIM_BEFORE, Z, increments=[2.0])
    d = res.to_dict()
    assert d["verdict"] == "violation"
    assert d["witness"]["left"]["target"] == ["group", 1]
    assert d["witness"]["groups"] == [[1, 2], [3]]


def test_dim_examples():
    assert check_classic("bshap", cx.gdim_model(), cx.GDIM_BEFORE, Z, "dim", feature=0).passed
    res = check_classic("ig", cx.gdim_model(), cx.IG_DIM_EXPLICAND, Z, "dim", feature=0, increments=[0.5, 1.0, 2.0])
    assert res.verdict == "violation"
    # from (2,2,2) IG_1 = sigma(10 x1 - 10) - sigma(-10) only grows
    assert check_classic("ig", cx.gdim_model(), cx.GDIM_BEFORE, Z, "dim", feature=0, increments=[0.5, 1.0, 2.0]).passed


def test_classic_preconditions():
    f = LogisticLinearModel(0.0, [1.0, 2.0, 3.0])
    x = np.array([1.0, 1.0, 2.0])
    with pytest.raises(AxiomPreconditionError):
        check_classic("bshap", f, x, Z, "dim", feature=0)
    with pytest.raises(AxiomPreconditionError):
        check_classic("bshap", f, x, Z, "symmetry", feature=0, other_feature=1)
    with pytest.raises(AxiomPreconditionError):
        check_classic("bshap", f, x, Z, "dummy", feature=0)
    with pytest.raises(AxiomPreconditionError):
        check_classic("bshap", f, x, Z, "linearity")
    with pytest.raises(ValueError):
        check_classic("bshap", f, x, Z, "gasi")
    bad = LogisticLinearModel(0.0, [1.0, -2.0, 3.0], monotone_increasing=[1])
    with pytest.raises(AxiomPreconditionError):
        check_gdim("bshap", bad, B, 1, x, Z)


@pytest.mark.parametrize("method", ["bshap", "ig", "gshap"])
def test_classic_axioms_hold(method):
    f = LogisticLinearModel(-0.5, [1.0, 1.0, 0.0])
    g = LogisticLinearModel(0.3, [-1.0, 0.5, 2.0])
    x, xp = np.array([1.5, 1.5, -1.0]), np.array([-0.5, -0.5, 0.5])
    S = cx.validate([[0], [1], [2]], 3)
    for axiom, kw in [
        ("completeness", {}),
        ("linearity", {"other_model": g}),
        ("dummy", {"feature": 2}),
        ("symmetry", {"feature": 0, "other_feature": 1}),
        ("asi", {"feature": 1, "scale": -3.0, "shift": 2.0}),
    ]:
        assert check_classic(method, f, x, xp, axiom, structure=S, **kw).passed, axiom


def test_gspm_preconditions():
    with pytest.raises(AxiomPreconditionError):
        check_gspm("bshap", cx.gspm_model(), B, (0, 1), cx.GSPM_BASE, Z)
    split = cx.validate([[0], [1], [2]], 3)
    with pytest.raises(AxiomPreconditionError):
        check_gspm("bshap", cx.gspm_model(), split, (1, 0), cx.GSPM_BASE, Z)
    with pytest.raises(AxiomPreconditionError):
        check_gspm("bshap", cx.gspm_model(), B, (1, 0), (-1.0, 3.0, 2.0), Z)


def test_gasi_rejects_mixed_block_transform():
    t = GroupAffineTransform((1, 2), [[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(AxiomPreconditionError):
        check_gasi("gshap", cx.gasi_model(), B, t, cx.GASI_EXPLICAND, Z)


def test_sensitivity_decomposition_at_gdim_fixture():
    d = bshap_sensitivity_decomposition(cx.gdim_model(), cx.GDIM_BEFORE, Z)
    assert d.max_gap < 1e-5
    assert d.d_sum == pytest.approx(d.d_bs1 + d.d_bs2)


def test_sensitivity_decomposition_linear():
    d = bshap_sensitivity_decomposition(LinearModel(0.0, [2.0, -1.0, 3.0]), [1.0, 2.0, 3.0], Z)
    assert d.d_bs1 == pytest.approx(2.0, abs=1e-12)
    assert d.d_bs2 == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        bshap_sensitivity_decomposition(LinearModel(0.0, [1.0, 1.0]), [1.0, 1.0], [0.0, 0.0])


@given(st.floats(0.1, 2.0), st.floats(0.0, 2.0), st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_nonnegative_cross_derivative_gives_nonnegative_dbs2(a, c, pts):
    # f = a x1 x2 + c x1 + x3 has d2f/dx1dx2 = a >= 0
    f = CallableModel(lambda x: a * x[0] * x[1] + c * x[0] + x[2], 3, grad_fn=lambda x: [a * x[1] + c, a * x[0], 1.0])
    x, xp = np.array(pts[:3]), np.array(pts[3:])
    if x[1] < xp[1]:
        x[1], xp[1] = xp[1], x[1]
    d = bshap_sensitivity_decomposition(f, x, xp)
    assert d.d_bs2 >= -1e-12
    assert d.max_gap < 1e-5


def test_random_fixtures_are_reproducible():
    a = [fx.check("gshap").witness.gap for fx in random_fixtures("gdim", 5, seed=3)]
    b = [fx.check("gshap").witness.gap for fx in random_fixtures("gdim", 5, seed=3)]
    assert a == b


def test_small_matrix_agrees_with_table():
    m = run_preservation_matrix(instances=5)
    assert m.agrees, m.render()
    assert m.cells[("bshap", "gasi")] == VIOLATED
    assert m.cells[("gshap", "gspm")] == PRESERVED
    assert m.cells[("ig", "asi")] == PRESERVED
    lines = m.render().splitlines()
    assert lines[2].split()[1:] == ["Yes", "Yes", "No", "No", "No", "No"]
    assert EXPECTED_MATRIX["ig"]["dim"] is False


def test_single_column_matrix():
    m = run_preservation_matrix(axioms=("completeness",), instances=10)
    assert m.columns == ("completeness",)
    assert all(v == PRESERVED for v in m.cells.values())
