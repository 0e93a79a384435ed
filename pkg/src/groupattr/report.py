"""Report assembly: attribution tables, axiom verdicts and their serialisation.

A report is a plain dict written as JSON with sorted keys.  Every number in
it is a deterministic function of the config and seed.  Wall-clock timings
are kept out of it and written to a separate ``timings.json``.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attribution import attribute_all
from .axioms import (
    AxiomPreconditionError,
    Fixture,
    check_gasi,
    check_gdim,
    check_glfi,
    check_gspm,
    run_preservation_matrix,
)
from .config import RunConfig
from .transforms import GroupAffineTransform

REPORT_NAME = "report.json"
FEATURE_CSV = "features.csv"
GROUP_CSV = "groups.csv"
TIMINGS_NAME = "timings.json"


def _labels(cfg: RunConfig):
    features = cfg.feature_labels or [f"x{k + 1}" for k in range(cfg.model.n_features)]
    groups = cfg.group_labels or [f"B{g + 1}" for g in range(cfg.structure.l)]
    return features, groups


def group_changes(explicands: list[dict], methods, group_labels) -> list[dict]:
    """Per-method block changes between consecutive explicands."""
    out = []
    for prev, cur in zip(explicands, explicands[1:]):
        for meth in methods:
            a = prev["results"][meth]["per_group"]
            b = cur["results"][meth]["per_group"]
            for g, (before, after) in enumerate(zip(a, b)):
                out.append({
                    "from": prev["name"],
                    "to": cur["name"],
                    "method": meth,
                    "group": g + 1,
                    "label": group_labels[g],
                    "before": before,
                    "after": after,
                    "change": after - before,
                    "decreased": after < before,
                })
    return out


def build_attribution_report(cfg: RunConfig, timings: dict | None = None) -> dict:
    features, groups = _labels(cfg)
    rows = []
    for name, x in zip(cfg.names, cfg.explicands):
        t0 = time.perf_counter()
        results = attribute_all(cfg.methods, cfg.model, x, cfg.baseline, cfg.structure, cfg.options)
        if timings is not None:
            timings[name] = time.perf_counter() - t0
        rows.append({
            "name": name,
            "values": [float(v) for v in x],
            "results": {m: r.to_dict() for m, r in results.items()},
        })
    report = {
        "kind": "attribution",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.echo,
        "options": cfg.options.to_dict(),
        "methods": list(cfg.methods),
        "baseline": [float(v) for v in cfg.baseline],
        "groups": cfg.structure.to_one_based(),
        "feature_labels": features,
        "group_labels": groups,
        "explicands": rows,
        "group_changes": group_changes(rows, cfg.methods, groups),
    }
    if cfg.axioms:
        checks = [fx.check(m) for fx in config_fixtures(cfg) if fx.axiom in cfg.axioms for m in cfg.methods]
        report["axioms"] = [c.to_dict() for c in checks]
    return report


def config_fixtures(cfg: RunConfig) -> list[Fixture]:
    """Group-axiom checks implied by the config's model, transforms and explicands.

    Each declared recoding gives a GASI or GLFI check, each declared monotone
    feature a GDIM check and each strong pair sharing a block a GSPM check,
    all at every explicand whose preconditions hold.
    """
    model, B, xp = cfg.model, cfg.structure, cfg.baseline
    fixtures = []
    for name, x in zip(cfg.names, cfg.explicands):
        for k, t in enumerate(cfg.transforms):
            if isinstance(t, GroupAffineTransform):
                fixtures.append(Fixture("gasi", f"config-{name}-t{k + 1}",
                                        lambda m, t=t, x=x: check_gasi(m, model, B, t, x, xp)))
            else:
                fixtures.append(Fixture("glfi", f"config-{name}-t{k + 1}",
                                        lambda m, t=t, x=x: check_glfi(m, model, B, t, x, xp)))
        for i in sorted(model.monotone_increasing):
            if x[i] < model.domain[i, 1]:
                fixtures.append(Fixture("gdim", f"config-{name}-x{i + 1}",
                                        lambda m, i=i, x=x: check_gdim(m, model, B, i, x, xp)))
        for i, j in model.strong_pairs:
            if B.group_of(i) == B.group_of(j) and x[i] >= xp[i] and x[j] >= xp[j]:
                fixtures.append(Fixture("gspm", f"config-{name}-x{i + 1}-over-x{j + 1}",
                                        lambda m, p=(i, j), x=x: check_gspm(m, model, B, p, x, xp)))
    return fixtures


def _safe(fixtures: list[Fixture]) -> list[Fixture]:
    # a config-derived check whose preconditions fail is dropped, not fatal
    keep = []
    for fx in fixtures:
        try:
            fx.check("gshap")
        except AxiomPreconditionError:
            continue
        keep.append(fx)
    return keep


def build_check_report(cfg: RunConfig | None, axioms, methods, instances: int, seed: int):
    """Preservation matrix over worked, random and config-derived fixtures.

    Returns ``(report, matrix)``.
    """
    from .axioms import worked_fixtures, random_fixtures

    fixtures = [f for f in worked_fixtures() if f.axiom in axioms]
    for a in axioms:
        fixtures += random_fixtures(a, instances, seed)
    if cfg is not None:
        fixtures += [f for f in _safe(config_fixtures(cfg)) if f.axiom in axioms]
    matrix = run_preservation_matrix(fixtures, axioms=axioms, methods=methods)
    return {
        "kind": "check",
        "version": __version__,
        "seed": seed,
        "config": None if cfg is None else cfg.echo,
        "instances": instances,
        "matrix": matrix.to_dict(),
        "table": matrix.render(),
        "disagreements": [list(d) for d in matrix.disagreements()],
    }, matrix


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / REPORT_NAME
    path.write_text(dumps(report))
    return path


def write_timings(timings: dict, out_dir) -> Path:
    path = Path(out_dir) / TIMINGS_NAME
    path.write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(report: dict, out_dir) -> list[Path]:
    """Long-format feature and group tables, one row per (explicand, method, item)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fpath, gpath = out / FEATURE_CSV, out / GROUP_CSV
    with fpath.open("w", newline="") as fh, gpath.open("w", newline="") as gh:
        fw = csv.writer(fh, lineterminator="\n")
        gw = csv.writer(gh, lineterminator="\n")
        fw.writerow(["explicand", "method", "feature", "label", "value", "attribution"])
        gw.writerow(["explicand", "method", "group", "label", "members", "attribution"])
        for row in report["explicands"]:
            for meth in report["methods"]:
                res = row["results"][meth]
                if res["per_feature"] is not None:
                    for k, a in enumerate(res["per_feature"]):
                        fw.writerow([row["name"], meth, k + 1, report["feature_labels"][k], repr(row["values"][k]), repr(a)])
                for g, a in enumerate(res["per_group"]):
                    members = " ".join(str(i) for i in report["groups"][g])
                    gw.writerow([row["name"], meth, g + 1, report["group_labels"][g], members, repr(a)])
    return [fpath, gpath]


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def summary_table(report: dict) -> str:
    """Group attributions per explicand and method, as text."""
    methods = report["methods"]
    lines = []
    for row in report["explicands"]:
        lines.append(f"{row['name']}: f = {row['results'][methods[0]]['f_explicand']:.6f}")
        lines.append("  " + "group".ljust(24) + "".join(m.rjust(12) for m in methods))
        for g, label in enumerate(report["group_labels"]):
            vals = "".join(f"{row['results'][m]['per_group'][g]:12.6f}" for m in methods)
            lines.append("  " + f"B{g + 1} {label}"[:24].ljust(24) + vals)
    flagged = [c for c in report["group_changes"] if c["decreased"]]
    for c in flagged:
        lines.append(f"decrease: {c['method']} B{c['group']} {c['from']} -> {c['to']}: {c['before']:.6f} -> {c['after']:.6f}")
    return "\n".join(lines)


def as_array(report: dict, name: str, method: str, level: str = "group") -> np.ndarray:
    row = next(r for r in report["explicands"] if r["name"] == name)
    return np.asarray(row["results"][method]["per_group" if level == "group" else "per_feature"], dtype=float)
