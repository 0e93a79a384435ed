"""Run configuration: a JSON document resolved into model, data and options.

Relative paths are taken from the directory holding the config file.  All
feature and block indices in the document are 1-based.

Keys::

    model            inline model document, path to one, or "surrogate-credit"
    group_structure  list of 1-based blocks, or "credit"
    baseline         "zero" or a vector
    explicands       list of vectors, "credit-examples", or
                     {"csv": path, "rows": [...], "preprocess": true}
    explicand_names  optional names, one per explicand
    methods          subset of bshap, ig, gshap, owen
    options          method options (see MethodOptions)
    seed             integer, default 0
    output           {"dir": path, "formats": ["report", "csv", "svg"]}
    transforms       optional group recodings checked for invariance
    axioms           optional {"select": [...], "instances": n}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import credit
from .attribution import METHODS, AttributionError, MethodOptions
from .model import Model, ModelError, model_from_dict
from .partition import GroupStructure, PartitionError
from .transforms import TransformError, transform_from_dict

FORMATS = ("report", "csv", "svg")
KNOWN_KEYS = {
    "model", "group_structure", "baseline", "explicands", "explicand_names", "methods",
    "options", "seed", "output", "transforms", "axioms", "feature_labels", "group_labels",
}


class ConfigError(ValueError):
    """The configuration document is invalid."""


@dataclass
class RunConfig:
    model: Model
    structure: GroupStructure
    baseline: np.ndarray
    explicands: list[np.ndarray]
    names: list[str]
    methods: list[str]
    options: MethodOptions
    seed: int = 0
    out_dir: Path | None = None
    formats: tuple[str, ...] = ("report",)
    transforms: list = field(default_factory=list)
    axioms: tuple[str, ...] = ()
    instances: int = 100
    feature_labels: list[str] | None = None
    group_labels: list[str] | None = None
    echo: dict = field(default_factory=dict)

    def with_overrides(self, seed=None, methods=None, out_dir=None, formats=None) -> "RunConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed), options=replace(cfg.options, seed=int(seed)))
        if methods is not None:
            cfg = replace(cfg, methods=_methods(methods))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        if formats is not None:
            cfg = replace(cfg, formats=_formats(formats))
        return cfg


def _methods(methods) -> list[str]:
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    methods = list(methods)
    if not methods:
        raise ConfigError("methods must be non-empty")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; expected a subset of {list(METHODS)}")
    return methods


def _formats(formats) -> tuple[str, ...]:
    if isinstance(formats, str):
        formats = [f.strip() for f in formats.split(",") if f.strip()]
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output format(s) {bad}; expected a subset of {list(FORMATS)}")
    return tuple(formats)


def _path(base: Path, p) -> Path:
    q = Path(p)
    q = q if q.is_absolute() else base / q
    if not q.exists():
        raise ConfigError(f"referenced path does not exist: {q}")
    return q


def _model(spec, base: Path) -> Model:
    if spec == "surrogate-credit":
        return credit.surrogate_model()
    if isinstance(spec, str):
        spec = json.loads(_path(base, spec).read_text())
    if not isinstance(spec, dict):
        raise ConfigError("model must be an inline document, a path, or 'surrogate-credit'")
    return model_from_dict(spec)


def _explicands(spec, base: Path, m: int) -> tuple[list[np.ndarray], list[str] | None]:
    if spec == "credit-examples":
        return [np.array(credit.EXPLICAND_1), np.array(credit.EXPLICAND_2)], ["xbar1", "xbar2"]
    if isinstance(spec, dict):
        if "csv" not in spec:
            raise ConfigError("explicands document needs a 'csv' key")
        records = credit.ingest_credit_csv(_path(base, spec["csv"]), spec.get("preprocess", True))
        rows = spec.get("rows", [0])
        try:
            picked = [records[r] for r in rows]
        except IndexError:
            raise ConfigError(f"row index out of range; {len(records)} records after preprocessing") from None
        return [r.features() for r in picked], [f"row{r}" for r in rows]
    if not isinstance(spec, list) or not spec:
        raise ConfigError("explicands must be a non-empty list, a csv document or 'credit-examples'")
    out = [np.asarray(x, dtype=float) for x in spec]
    for x in out:
        if x.shape != (m,):
            raise ConfigError(f"explicand {x.tolist()} does not have {m} features")
    return out, None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, path.parent)


def parse_config(doc: dict, base: Path | str = ".") -> RunConfig:
    """Validate a config document and resolve every reference it makes.

    Errors from the model, partition and transform layers are re-raised as
    :class:`ConfigError` with the offending key named.
    """
    base = Path(base)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
    for key in ("model", "explicands", "methods"):
        if key not in doc:
            raise ConfigError(f"config is missing {key!r}")
    try:
        model = _model(doc["model"], base)
    except (ModelError, TransformError, KeyError, TypeError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    m = model.n_features

    gs = doc.get("group_structure")
    try:
        if gs == "credit":
            structure = credit.credit_structure()
        elif gs is None:
            structure = GroupStructure.singletons(m)
        else:
            structure = GroupStructure.from_one_based(gs, m)
    except (PartitionError, TypeError, ValueError) as exc:
        raise ConfigError(f"group_structure: {exc}") from exc

    bl = doc.get("baseline", "zero")
    baseline = np.zeros(m) if bl == "zero" else np.asarray(bl, dtype=float)
    if baseline.shape != (m,):
        raise ConfigError(f"baseline must be 'zero' or a vector of {m} values")

    explicands, names = _explicands(doc["explicands"], base, m)
    names = doc.get("explicand_names", names) or [f"e{k + 1}" for k in range(len(explicands))]
    if len(names) != len(explicands) or len(set(names)) != len(names):
        raise ConfigError("explicand_names must be unique and match the number of explicands")

    seed = int(doc.get("seed", 0))
    try:
        options = MethodOptions.from_dict({"seed": seed, **doc.get("options", {})})
    except (AttributionError, TypeError) as exc:
        raise ConfigError(f"options: {exc}") from exc

    out = doc.get("output", {})
    out_dir = base / out["dir"] if "dir" in out else None

    try:
        transforms = [transform_from_dict(t, structure) for t in doc.get("transforms", [])]
    except (TransformError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"transforms: {exc}") from exc

    ax = doc.get("axioms", {})
    from .axioms import AXIOMS  # local: axioms imports the model stack

    select = tuple(ax.get("select", ()))
    bad = [a for a in select if a not in AXIOMS]
    if bad:
        raise ConfigError(f"unknown axiom(s) {bad}")

    feature_labels = doc.get("feature_labels")
    group_labels = doc.get("group_labels")
    if doc["model"] == "surrogate-credit":
        feature_labels = feature_labels or credit.feature_labels()
        if gs == "credit":
            group_labels = group_labels or list(credit.BLOCK_NAMES)
    if feature_labels is not None and len(feature_labels) != m:
        raise ConfigError(f"feature_labels needs {m} entries")
    if group_labels is not None and len(group_labels) != structure.l:
        raise ConfigError(f"group_labels needs {structure.l} entries")

    return RunConfig(
        model=model,
        structure=structure,
        baseline=baseline,
        explicands=explicands,
        names=list(names),
        methods=_methods(doc["methods"]),
        options=options,
        seed=seed,
        out_dir=out_dir,
        formats=_formats(out.get("formats", ["report"])),
        transforms=transforms,
        axioms=select,
        instances=int(ax.get("instances", 100)),
        feature_labels=feature_labels,
        group_labels=group_labels,
        echo=doc,
    )
