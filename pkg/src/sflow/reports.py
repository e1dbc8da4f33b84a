"""JSON and CSV output.

Floats are written with 17 significant digits so every value round-trips
exactly; non-finite floats become strings (``"nan"``, ``"inf"``, ``"-inf"``).
Output is UTF-8 with LF line endings and sorted crossings, so identical runs
give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = "%.17g" % x
    # keep a float marker so readers do not turn 1.0 into an int
    if all(ch not in text for ch in ".en"):
        text += ".0"
    return text


def to_plain(obj):
    """Recursively convert numpy values, dataclasses and report objects to JSON types."""
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj, indent: int = 2) -> str:
    """Serialize to JSON text with 17-digit floats."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return format_float(o)
        if isinstance(o, int):
            return str(o)
        return json.dumps(o, ensure_ascii=False)

    return enc(to_plain(obj), 0) + "\n"


def envelope(command: str, seed, config: dict, result, certificates=None, crossings=None) -> dict:
    crossings = list(crossings or [])
    crossings = sorted((to_plain(c) for c in crossings),
                       key=lambda c: c.get("lambda_star", c.get("lambda", 0.0)))
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": to_plain(config),
        "result": to_plain(result),
        "certificates": to_plain(certificates or {}),
        "crossings": crossings,
    }


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def csv_text(rows, prefix: str) -> str:
    """Rows ``(lambda, v_1, ..., v_k)`` as CSV with header ``lambda,<prefix>_1,...``."""
    rows = list(rows)
    width = max((len(r) for r in rows), default=1) - 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda"] + [f"{prefix}_{k + 1}" for k in range(width)])
    for r in rows:
        w.writerow(["%.17g" % float(v) for v in r])
    return buf.getvalue()


def write_csv(path, rows, prefix: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(rows, prefix))
    return path


def loads(text: str):
    """Inverse of :func:`dumps` (non-finite markers stay strings)."""
    return json.loads(text)
