"""CSV tables with a fixed dialect so that outputs can be compared byte for byte.

Comma separated, LF line endings, mandatory header, reals printed with 17
significant digits, booleans as ``true``/``false``, missing values empty.
"""
from __future__ import annotations

import csv
import io
import math
from enum import Enum
from pathlib import Path

from .bounds import INPUT_FIELDS, BoundReport
from .miest import MIEstimate
from .rdtheory import RDCurve
from .simlab import EXPERIMENT_COLUMNS, ExperimentResult

RD_COLUMNS = ("method", "slope", "D", "R", "iterations", "gap")
MI_COLUMNS = ("family", "method", "n", "value", "std_error", "outer_mc", "inner_mc",
              "flagged_fraction", "seed")
BOUND_COLUMNS = ("name", "n", "value") + tuple(f for f in INPUT_FIELDS if f != "n") + ("external",)

SCHEMAS = {
    "rd": RD_COLUMNS,
    "mi": MI_COLUMNS,
    "bounds": BOUND_COLUMNS,
    "experiment": EXPERIMENT_COLUMNS,
}


class SchemaError(ValueError):
    pass


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def render(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def rd_rows(curve: RDCurve) -> list[dict]:
    return [{"method": curve.method, "slope": p.slope, "D": p.D, "R": p.R,
             "iterations": p.iterations, "gap": p.gap} for p in curve.points]


def mi_row(family_id: str, est: MIEstimate) -> dict:
    return {"family": family_id, "method": est.method, "n": est.n, "value": est.value,
            "std_error": est.std_error, "outer_mc": est.outer_mc, "inner_mc": est.inner_mc,
            "flagged_fraction": est.flagged_fraction, "seed": est.seed}


def bound_row(report: BoundReport) -> dict:
    row = {"name": report.name, "value": report.value, "external": report.external}
    for f in INPUT_FIELDS:
        row[f] = report.inputs.get(f)
    return row


def experiment_row(res: ExperimentResult) -> dict:
    return res.row()


def read_table(path: str | Path) -> tuple[str, list[dict]]:
    """Load a CSV written by this package; returns (schema name, rows as strings)."""
    text = Path(path).read_text()
    if not text.strip():
        raise SchemaError(f"{path}: empty file")
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    for name, cols in SCHEMAS.items():
        if header == cols:
            return name, [dict(zip(header, r)) for r in reader if r]
    raise SchemaError(f"{path}: header does not match any known table schema")


def parse_float(cell: str) -> float | None:
    return None if cell == "" else float(cell)
