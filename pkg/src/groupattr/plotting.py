"""Grouped bar charts of attributions, one bar per method.

Output is byte-stable: the Agg backend, a fixed SVG hash salt and no
date metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

HASH_SALT = "groupattr"
METHOD_NAMES = {"bshap": "BShap", "ig": "IG", "gshap": "GShap", "owen": "Owen"}


class FigureError(ValueError):
    """The report cannot be plotted."""


def _bar_chart(categories, series: dict[str, np.ndarray], title: str, path: Path) -> None:
    n = len(series)
    width = 0.8 / n
    x = np.arange(len(categories))
    with plt.rc_context({"svg.hashsalt": HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.7 * len(categories) + 2), 4.0))
        for k, (name, vals) in enumerate(series.items()):
            ax.bar(x + (k - (n - 1) / 2) * width, vals, width, label=METHOD_NAMES.get(name, name))
        ax.set_xticks(x)
        ax.set_xticklabels(categories, rotation=30, ha="right", fontsize=8)
        ax.axhline(0.0, color="black", linewidth=0.6)
        ax.set_ylabel("attribution")
        ax.set_title(title)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_figures(report: dict, out_dir) -> list[Path]:
    """Feature-level and group-level charts for every explicand in ``report``.

    Methods with no per-feature attributions (GShap) appear only in the
    group charts.
    """
    methods = report.get("methods") or []
    if not methods:
        raise FigureError("report has no methods to plot")
    if not report.get("explicands"):
        raise FigureError("report has no attribution tables")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FigureError(f"cannot create {out}: {exc}") from exc
    written = []
    flabels = [f"x{k + 1} {lab}" if lab != f"x{k + 1}" else lab for k, lab in enumerate(report["feature_labels"])]
    glabels = [f"B{g + 1} {lab}" if lab != f"B{g + 1}" else lab for g, lab in enumerate(report["group_labels"])]
    for row in report["explicands"]:
        res = row["results"]
        feat = {m: np.asarray(res[m]["per_feature"]) for m in methods if res[m]["per_feature"] is not None}
        grp = {m: np.asarray(res[m]["per_group"]) for m in methods}
        targets = []
        if feat:
            targets.append((flabels, feat, f"Feature attributions of {row['name']}", out / f"{row['name']}_features.svg"))
        targets.append((glabels, grp, f"Group attributions of {row['name']}", out / f"{row['name']}_groups.svg"))
        for cats, series, title, path in targets:
            try:
                _bar_chart(cats, series, title, path)
            except OSError as exc:
                raise FigureError(f"cannot write {path}: {exc}") from exc
            written.append(path)
    return written
