"""Deterministic report serialization.

Reports must be byte-identical across runs with the same config, seed and
version: keys are sorted, no timestamps or environment data appear, rationals
serialize as "num/den" strings, and every numeric result carries its
provenance (exact, float, or monte-carlo with trial count and sigma).
CSV output uses RFC 4180 quoting and CRLF line endings.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "exact_value",
    "float_value",
    "mc_value",
    "jsonable",
    "render_report",
    "write_report",
    "write_csv",
]


def exact_value(value) -> dict:
    return {"mode": "exact", "value": _scalar(value)}


def float_value(value) -> dict:
    return {"mode": "float", "value": _scalar(value)}


def mc_value(estimate, sigma, trials) -> dict:
    return {
        "mode": "monte-carlo",
        "value": _scalar(estimate),
        "sigma": _scalar(sigma),
        "trials": int(trials),
    }


def _scalar(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return value


def jsonable(obj):
    """Recursively convert report payloads to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (Fraction, np.integer, np.floating, float)):
        return _scalar(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


def render_report(payload: dict) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(payload), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_scalar(v) if not isinstance(v, str) else v for v in row])
    return path
