"""Command-line front end.

Exit status: 0 success, 2 reproduction or matrix mismatch, 3 configuration
error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .attribution import METHODS, AttributionError
from .axioms import AXIOMS, MATRIX_AXIOMS, MATRIX_METHODS, AxiomPreconditionError
from .config import ConfigError, _methods, load_config
from .counterexamples import WHICH, format_rows, reproduce
from .credit import CreditDataError, ingest_credit_csv, write_processed_csv
from .model import ModelError
from .partition import PartitionError
from .plotting import FigureError, emit_figures
from .report import (
    build_attribution_report,
    build_check_report,
    dumps,
    load_report,
    summary_table,
    write_csv,
    write_report,
    write_timings,
)
from .transforms import TransformError

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_DATA = 0, 2, 3, 4
PROCESSED_NAME = "credit_processed.csv"


def _list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupattr", description="Group-aware feature attribution.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("attribute", help="attribute explicands listed in a config")
    a.add_argument("--config", required=True, type=Path)
    a.add_argument("--seed", type=int)
    a.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    a.add_argument("--out", type=Path, help="output directory (default: config output.dir)")
    a.add_argument("--format", help="comma list from report,csv,svg")

    c = sub.add_parser("check", help="run axiom suites and the preservation matrix")
    c.add_argument("--config", type=Path, help="adds checks derived from this config")
    c.add_argument("--axioms", help=f"comma list from {','.join(AXIOMS)}")
    c.add_argument("--methods", help="comma list (default bshap,ig,gshap)")
    c.add_argument("--instances", type=int, help="random fixtures per axiom (default 100)")
    c.add_argument("--seed", type=int)
    c.add_argument("--out", type=Path)

    r = sub.add_parser("reproduce", help="recompute the worked counterexamples")
    r.add_argument("which", nargs="?", default="all", choices=("all",) + WHICH)
    r.add_argument("--out", type=Path)

    i = sub.add_parser("ingest", help="read and preprocess a credit CSV")
    i.add_argument("csv", type=Path)
    i.add_argument("--no-preprocess", action="store_true")
    i.add_argument("--out", type=Path)

    e = sub.add_parser("emit-figures", help="render SVG bar charts from a report")
    e.add_argument("report", type=Path)
    e.add_argument("--out", type=Path, help="output directory (default: next to the report)")
    return p


def _attribute(args) -> int:
    cfg = load_config(args.config).with_overrides(
        seed=args.seed,
        methods=args.methods,
        out_dir=args.out,
        formats=args.format,
    )
    timings = {}
    if cfg.out_dir is None and set(cfg.formats) - {"report"}:
        raise ConfigError("csv and svg output need --out or output.dir")
    report = build_attribution_report(cfg, timings)
    if cfg.out_dir is None:
        # stdout carries the report document itself
        print(summary_table(report), file=sys.stderr)
        sys.stdout.write(dumps(report))
        return EXIT_OK
    print(summary_table(report))
    written = []
    if "report" in cfg.formats:
        written.append(write_report(report, cfg.out_dir))
        written.append(write_timings(timings, cfg.out_dir))
    if "csv" in cfg.formats:
        written += write_csv(report, cfg.out_dir)
    if "svg" in cfg.formats:
        written += emit_figures(report, cfg.out_dir)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _check(args) -> int:
    cfg = load_config(args.config) if args.config else None
    if cfg is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    axioms = _list(args.axioms) if args.axioms else list((cfg.axioms if cfg else ()) or MATRIX_AXIOMS)
    bad = [a for a in axioms if a not in AXIOMS]
    if bad:
        raise ConfigError(f"unknown axiom(s) {bad}")
    methods = _methods(args.methods) if args.methods else list(MATRIX_METHODS)
    instances = args.instances if args.instances is not None else (cfg.instances if cfg else 100)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    report, matrix = build_check_report(cfg, tuple(axioms), tuple(methods), instances, seed)
    print(report["table"])
    for r, c in matrix.disagreements():
        print(f"mismatch: {r} / {c} is {matrix.cells[(r, c)]}, expected {matrix.expected(r, c)}")
    if args.out:
        print(f"wrote {write_report(report, args.out)}")
    return EXIT_MISMATCH if matrix.disagreements() else EXIT_OK


def _reproduce(args) -> int:
    rows = reproduce(args.which)
    print(format_rows(rows))
    if args.out:
        report = {"kind": "reproduce", "version": __version__, "which": args.which,
                  "rows": [r.to_dict() for r in rows]}
        print(f"wrote {write_report(report, args.out)}")
    bad = [r for r in rows if not r.ok]
    if bad:
        print(f"{len(bad)} value(s) outside tolerance")
        return EXIT_MISMATCH
    return EXIT_OK


def _ingest(args) -> int:
    records = ingest_credit_csv(args.csv, preprocess=not args.no_preprocess)
    print(f"{len(records)} records read from {args.csv}", file=sys.stderr)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / PROCESSED_NAME
        write_processed_csv(records, path)
        print(f"wrote {path}", file=sys.stderr)
    else:
        write_processed_csv(records, sys.stdout)
    return EXIT_OK


def _emit(args) -> int:
    try:
        report = load_report(args.report)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {args.report}: {exc}") from exc
    if report.get("kind") != "attribution":
        raise ConfigError("emit-figures needs an attribution report")
    for path in emit_figures(report, args.out or args.report.parent):
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "attribute": _attribute,
    "check": _check,
    "reproduce": _reproduce,
    "ingest": _ingest,
    "emit-figures": _emit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CreditDataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, FigureError, AttributionError, ModelError, PartitionError,
            TransformError, AxiomPreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
