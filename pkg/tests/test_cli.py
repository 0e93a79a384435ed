import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from groupattr.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from groupattr.credit import sample_csv_path

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden"
LINEAR = ROOT / "configs" / "linear.json"


def test_linear_report_matches_golden(capsys):
    assert main(["attribute", "--config", str(LINEAR)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out == (GOLDEN / "linear_report.json").read_text()


def test_linear_values():
    report = json.loads((GOLDEN / "linear_report.json").read_text())
    (row,) = report["explicands"]
    expected = np.array([1.0, -4.0, 1.5])
    for meth in ("bshap", "ig", "owen"):
        np.testing.assert_allclose(row["results"][meth]["per_feature"], expected, atol=1e-9)
    for meth in report["methods"]:
        np.testing.assert_allclose(row["results"][meth]["per_group"], [-3.0, 1.5], atol=1e-9)


def test_outputs_are_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["attribute", "--config", str(LINEAR), "--out", str(d), "--format", "report,csv,svg"]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir() if p.name != "timings.json")
    assert {"report.json", "features.csv", "groups.csv", "e1_groups.svg"} <= set(names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_owen_block_sums_in_report(tmp_path):
    assert main(["attribute", "--config", str(LINEAR), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    for row in report["explicands"]:
        owen = row["results"]["owen"]
        sums = [sum(owen["per_feature"][i - 1] for i in block) for block in report["groups"]]
        np.testing.assert_allclose(sums, row["results"]["gshap"]["per_group"], atol=1e-9)


def test_seed_and_methods_override(capsys):
    assert main(["attribute", "--config", str(LINEAR), "--seed", "7", "--methods", "gshap"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["seed"] == 7 and report["methods"] == ["gshap"]


def test_emit_figures_from_report(tmp_path):
    main(["attribute", "--config", str(LINEAR), "--out", str(tmp_path)])
    figs = tmp_path / "figs"
    assert main(["emit-figures", str(tmp_path / "report.json"), "--out", str(figs)]) == EXIT_OK
    assert (figs / "e1_features.svg").read_text().lstrip().startswith("<?xml")


def test_emit_figures_rejects_empty_methods(tmp_path):
    report = json.loads((GOLDEN / "linear_report.json").read_text())
    report["methods"] = []
    p = tmp_path / "report.json"
    p.write_text(json.dumps(report))
    assert main(["emit-figures", str(p)]) == EXIT_CONFIG


@pytest.mark.parametrize(
    "doc",
    [
        {"model": {"kind": "linear", "coefficients": [1.0], "n_features": 1}, "explicands": [[1.0]], "methods": ["nope"]},
        {"model": {"kind": "linear", "coefficients": [1.0, 1.0], "n_features": 2}, "explicands": [[1.0, 2.0]],
         "methods": ["gshap"], "group_structure": [[1], [1, 2]]},
        {"model": {"kind": "linear", "coefficients": [1.0], "n_features": 1}, "explicands": [[1.0, 2.0]], "methods": ["ig"]},
        {"explicands": [[1.0]], "methods": ["ig"]},
    ],
    ids=["unknown-method", "overlapping-blocks", "wrong-width", "missing-model"],
)
def test_config_errors_exit_3(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    assert main(["attribute", "--config", str(p)]) == EXIT_CONFIG


def test_missing_config_exit_3(tmp_path):
    assert main(["attribute", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG


def test_bad_csv_exit_4(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    assert main(["ingest", str(p)]) == EXIT_DATA


def test_ingest_to_directory_and_stdout(tmp_path, capsys):
    assert main(["ingest", str(sample_csv_path()), "--out", str(tmp_path)]) == EXIT_OK
    written = (tmp_path / "credit_processed.csv").read_text()
    assert written == (GOLDEN / "credit_sample_processed.csv").read_text()
    capsys.readouterr()
    assert main(["ingest", str(sample_csv_path())]) == EXIT_OK
    assert capsys.readouterr().out == written


def test_reproduce_exit_codes(tmp_path):
    assert main(["reproduce", "gspm", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert all(r["ok"] for r in report["rows"])
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "unknown"])
    assert exc.value.code == 2


def test_check_single_axiom(capsys):
    assert main(["check", "--axioms", "completeness", "--instances", "5"]) == EXIT_OK
    table = capsys.readouterr().out
    assert "completeness" in table.lower()


def test_check_unknown_axiom():
    assert main(["check", "--axioms", "fairness", "--instances", "1"]) == EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "groupattr", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("groupattr")
