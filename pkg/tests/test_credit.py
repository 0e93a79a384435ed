import csv
from pathlib import Path

import numpy as np
import pytest

from groupattr.credit import (
    EXPLICAND_1,
    EXPLICAND_2,
    CreditDataError,
    credit_structure,
    income_bin,
    ingest_credit_csv,
    manifest,
    sample_csv_path,
    surrogate_model,
    write_processed_csv,
)
from groupattr.model import validate_monotonicity

GOLDEN = Path(__file__).parent / "golden"
RAW_HEADER = [
    "", "SeriousDlqin2yrs", "RevolvingUtilizationOfUnsecuredLines", "age",
    "NumberOfTime30-59DaysPastDueNotWorse", "DebtRatio", "MonthlyIncome",
    "NumberOfOpenCreditLinesAndLoans", "NumberOfTimes90DaysLate",
    "NumberRealEstateLoansOrLines", "NumberOfTime60-89DaysPastDueNotWorse",
    "NumberOfDependents",
]


def write_raw(path, rows, header=RAW_HEADER):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def raw_row(late90=0, late60=0, late30=0, income="6000", deps="1", y=0):
    return ["1", y, "0.5", "40", late30, "0.3", income, "5", late90, "1", late60, deps]


def test_income_bins_match_hand_table():
    with open(GOLDEN / "income_bins.csv") as fh:
        for row in csv.DictReader(fh):
            assert income_bin(float(row["monthly_income"])) == int(row["income_bin"]), row


def test_capping_and_binning(tmp_path):
    p = write_raw(tmp_path / "raw.csv", [raw_row(late90=7, late60=5, late30=4, deps="9")])
    (r,) = ingest_credit_csv(p)
    assert (r.x1, r.x2, r.x3, r.x9) == (4, 4, 4, 5)
    assert r.x6 == 3
    (raw,) = ingest_credit_csv(p, preprocess=False)
    assert (raw.x1, raw.x6, raw.x9) == (7, 6000, 9)


def test_missing_rows_dropped(tmp_path):
    p = write_raw(tmp_path / "raw.csv", [raw_row(income=""), raw_row(deps="NA"), raw_row()])
    assert len(ingest_credit_csv(p)) == 1
    kept = ingest_credit_csv(p, preprocess=False)
    assert len(kept) == 3 and np.isnan(kept[0].x6)


def test_non_numeric_cell_reports_row(tmp_path):
    p = write_raw(tmp_path / "raw.csv", [raw_row(), raw_row(late90="many")])
    with pytest.raises(CreditDataError, match="row 3"):
        ingest_credit_csv(p)


@pytest.mark.parametrize(
    "header, rows",
    [
        (RAW_HEADER + ["Extra"], [raw_row() + ["1"]]),
        (RAW_HEADER[:-1], [raw_row()[:-1]]),
        (RAW_HEADER, [raw_row()[:-2]]),
    ],
    ids=["unknown-column", "missing-column", "ragged-row"],
)
def test_malformed_files(tmp_path, header, rows):
    p = write_raw(tmp_path / "raw.csv", rows, header)
    with pytest.raises(CreditDataError):
        ingest_credit_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises(CreditDataError):
        ingest_credit_csv(tmp_path / "absent.csv")


def _independent_preprocess(path):
    # a second reading of the preprocessing rules, written without the package code
    names = manifest()["raw"]
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {k: row[v] for k, v in names.items()}
            if any(v in ("", "NA") for v in vals.values()):
                continue
            v = {k: float(s) for k, s in vals.items()}
            for k in ("x1", "x2", "x3"):
                v[k] = min(v[k], 4.0)
            v["x9"] = min(v["x9"], 5.0)
            edges = [0, 2500, 5000, 7500, 10000, 50000]
            v["x6"] = 5 - max(i for i, e in enumerate(edges) if v["x6"] >= e)
            out.append(v)
    return out


def test_sample_matches_golden_and_rules(tmp_path):
    records = ingest_credit_csv(sample_csv_path())
    assert len(records) > 0
    out = tmp_path / "processed.csv"
    write_processed_csv(records, out)
    assert out.read_text() == (GOLDEN / "credit_sample_processed.csv").read_text()
    expected = _independent_preprocess(sample_csv_path())
    assert len(expected) == len(records)
    for r, e in zip(records, expected):
        assert [getattr(r, k) for k in e] == [e[k] for k in e]


def test_sample_exercises_every_rule():
    raw = ingest_credit_csv(sample_csv_path(), preprocess=False)
    assert len(raw) == 1000
    assert any(np.isnan(r.x6) for r in raw)
    assert any(r.x1 > 4 for r in raw)
    assert any(r.x9 > 5 for r in raw if not np.isnan(r.x9))


def test_preprocessing_is_idempotent(tmp_path):
    first = ingest_credit_csv(sample_csv_path())
    p = tmp_path / "once.csv"
    write_processed_csv(first, p)
    second = ingest_credit_csv(p)
    assert second == first
    q = tmp_path / "twice.csv"
    write_processed_csv(second, q)
    assert q.read_text() == p.read_text()


def test_processed_invariants():
    for r in ingest_credit_csv(sample_csv_path()):
        assert r.x1 in range(5) and r.x2 in range(5) and r.x3 in range(5)
        assert r.x9 in range(6) and r.x6 in range(6)


def test_surrogate_model_declarations():
    f = surrogate_model()
    validate_monotonicity(f)
    assert f.n_features == 10
    assert {(0, 1), (1, 2), (0, 2)} <= set(f.strong_pairs)
    s = credit_structure()
    assert s.to_one_based() == [[1, 2, 3], [4], [5, 6], [7, 8], [9], [10]]
    # x2 gains the past due that x3 loses, so the model output rises
    assert f.evaluate(EXPLICAND_2) > f.evaluate(EXPLICAND_1)
