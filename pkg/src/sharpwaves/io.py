"""Deterministic JSON/CSV serialization and shipped JSON schemas."""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import json
import math
from importlib import resources

import numpy as np

SCHEMA_VERSION = "1.0"
DIGITS = 12


def fmt(x: float) -> float | str | None:
    """Round to 12 significant digits; +/-inf become strings, nan becomes null."""
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{DIGITS}g}")


def jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return obj


def dumps(kind: str, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind}
    doc.update(jsonable(payload))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def csv_text(header: list[str], rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.{DIGITS}g}"
    return str(v)


def load_schema(kind: str) -> dict:
    text = resources.files("sharpwaves").joinpath("schemas", f"{kind}.json").read_text()
    return json.loads(text)


# frozen CSV headers
PROFILE_HEADER = ["t", "phi", "psi"]
ROOTS_HEADER = ["c", "negative_real_roots"]
PROBES_HEADER = ["c", "outcome", "t_terminal", "horizon"]
FRONT_HEADER = ["t", "x_front"]
SNAPSHOT_HEADER = ["t", "x", "u"]
ATLAS_HEADER = ["r", "cdot", "c0", "c_kappa", "c_star", "c_hat_emp", "tail_class", "edge", "label", "error"]
