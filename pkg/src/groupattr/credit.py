"""Credit-scoring data: CSV ingestion, preprocessing and the surrogate model.

Raw files use the public dataset's column names (pinned in
``data/credit_columns.json``).  Preprocessing drops incomplete rows, caps
past-due counts at 4 and dependents at 5, and bins monthly income into six
bands numbered 5 (lowest) down to 0 (highest).

Processed files are written with an ``income_bin`` column instead of
``x6``; reading one back does not re-bin, so ingestion is idempotent.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .model import Model, loads
from .partition import GroupStructure

FEATURES = tuple(f"x{k}" for k in range(1, 11))
PAST_DUE = ("x1", "x2", "x3")
PAST_DUE_CAP = 4
DEPENDENTS_CAP = 5
# lower edges of the income bands; band k (0-based from the bottom) maps to 5 - k
INCOME_EDGES = (0.0, 2500.0, 5000.0, 7500.0, 10000.0, 50000.0)

# six blocks: past dues, balance, income, loans, dependents, age
CREDIT_BLOCKS = [[1, 2, 3], [4], [5, 6], [7, 8], [9], [10]]
BLOCK_NAMES = ("past due", "balance", "income", "loans", "dependents", "age")
EXPLICAND_1 = (2.0, 2.0, 5.0, 1.01, 0.57, 4.0, 11.0, 0.0, 4.0, 30.0)
# one 30-59 day past due rolls into the 60-89 day bucket
EXPLICAND_2 = (2.0, 3.0, 4.0, 1.01, 0.57, 4.0, 11.0, 0.0, 4.0, 30.0)


class CreditDataError(ValueError):
    """Malformed or unreadable credit data."""


@dataclass(frozen=True)
class CreditRecord:
    x1: float
    x2: float
    x3: float
    x4: float
    x5: float
    x6: float
    x7: float
    x8: float
    x9: float
    x10: float
    y: int

    def features(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURES])


@lru_cache(maxsize=1)
def manifest() -> dict:
    return json.loads(resources.files(__package__).joinpath("data/credit_columns.json").read_text())


def feature_labels() -> list[str]:
    labels = manifest()["labels"]
    return [labels[f] for f in FEATURES]


def credit_structure() -> GroupStructure:
    return GroupStructure.from_one_based(CREDIT_BLOCKS, len(FEATURES))


def surrogate_model() -> Model:
    """Hand-specified monotone additive-logistic stand-in for the trained model."""
    return loads(resources.files(__package__).joinpath("data/surrogate_model.json").read_text())


def sample_csv_path() -> Path:
    return Path(str(resources.files(__package__).joinpath("data/credit_sample.csv")))


def income_bin(income: float) -> int:
    """Band index with the order reversed so that lower income gives a larger value."""
    if income < 0:
        raise CreditDataError(f"negative monthly income {income}")
    k = sum(income >= edge for edge in INCOME_EDGES) - 1
    return 5 - k


def _schema(header: list[str]) -> tuple[str, dict[str, int]]:
    man = manifest()
    cols = {name.strip(): pos for pos, name in enumerate(header)}
    raw = man["raw"]
    if all(name in cols for name in raw.values()):
        extra = [c for c in cols if c and c not in raw.values()]
        if extra:
            raise CreditDataError(f"unknown columns: {extra}")
        return "raw", {key: cols[name] for key, name in raw.items()}
    if all(name in cols for name in man["processed"]):
        extra = [c for c in cols if c not in man["processed"]]
        if extra:
            raise CreditDataError(f"unknown columns: {extra}")
        pos = {("x6" if name == "income_bin" else name): cols[name] for name in man["processed"]}
        return "processed", pos
    missing = [n for n in raw.values() if n not in cols]
    raise CreditDataError(f"header does not match the credit manifest; missing raw columns {missing}")


def _parse(cell: str, column: str, row: int) -> float:
    if cell.strip() in manifest()["missing"]:
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise CreditDataError(f"row {row}: non-numeric value {cell!r} in column {column}") from None


def _preprocess(values: dict[str, float], schema: str) -> dict[str, float] | None:
    if any(math.isnan(v) for v in values.values()):
        return None
    out = dict(values)
    for f in PAST_DUE:
        out[f] = min(out[f], PAST_DUE_CAP)
    out["x9"] = min(out["x9"], DEPENDENTS_CAP)
    if schema == "raw":
        out["x6"] = float(income_bin(out["x6"]))
    elif out["x6"] not in range(6):
        raise CreditDataError(f"income_bin must be an integer in 0..5, got {out['x6']}")
    return out


def ingest_credit_csv(path, preprocess: bool = True) -> list[CreditRecord]:
    """Read a raw or processed credit CSV into records.

    With ``preprocess=False`` values are passed through unchanged and missing
    cells become NaN.  Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise CreditDataError(f"cannot read {path}: {exc}") from exc
    records = []
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CreditDataError(f"{path} is empty") from None
        schema, pos = _schema(header)
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CreditDataError(f"row {rownum}: expected {len(header)} cells, got {len(row)}")
            values = {key: _parse(row[p], key, rownum) for key, p in pos.items()}
            if preprocess:
                values = _preprocess(values, schema)
                if values is None:
                    continue
            y = values.pop("y")
            records.append(CreditRecord(**values, y=y if math.isnan(y) else int(y)))
    return records


def write_processed_csv(records, target) -> None:
    """Write records in the processed schema (``x6`` stored as ``income_bin``).

    ``target`` is a path or an open text stream.
    """
    if hasattr(target, "write"):
        _write_rows(records, target)
        return
    with Path(target).open("w", newline="") as handle:
        _write_rows(records, handle)


def _write_rows(records, handle) -> None:
    names = manifest()["processed"]
    w = csv.writer(handle, lineterminator="\n")
    w.writerow(names)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d["x6" if n == "income_bin" else n]) for n in names])


def _fmt(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)
