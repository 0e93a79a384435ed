import pytest

from groupattr.counterexamples import WHICH, format_rows, reproduce


@pytest.mark.parametrize("which", WHICH)
def test_reproduce_within_tolerance(which):
    rows = reproduce(which)
    assert rows
    bad = [r.to_dict() for r in rows if not r.ok]
    assert not bad


def test_reported_values_present():
    rows = {(r.fixture, r.method, r.expected) for r in reproduce("gspm")}
    for method, values in {"bshap": (1.25, 1.00), "ig": (1.80, 1.50), "gshap": (1.00, 1.00)}.items():
        for v in values:
            assert ("gspm", method, v) in rows


def test_unknown_fixture():
    with pytest.raises(ValueError):
        reproduce("gxyz")


def test_format_rows_has_one_line_per_row():
    rows = reproduce("glfi")
    assert len(format_rows(rows).splitlines()) == len(rows) + 2
