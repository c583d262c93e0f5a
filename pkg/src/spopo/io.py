"""Tabular and JSON output helpers shared by the lab modules and the CLI."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def write_csv(path, columns: dict, header_units: dict | None = None):
    """Write equal-length columns with 17 significant digits.

    Column names carry their units (e.g. ``omega_rad_s``); ``header_units``
    adds an explicit units comment line when the names alone are not enough.
    """
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n]).ravel() for n in names]
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns must have equal length")
    lines = []
    if header_units:
        lines.append("# units: " + ", ".join(f"{k}=[{v}]" for k, v in header_units.items()))
    lines.append(",".join(names))
    rows = zip(*(map(_cell, c) for c in cols)) if cols else []
    body = "\n".join(",".join(row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n" + body + ("\n" if body else ""))
    return path


def _cell(value) -> str:
    if isinstance(value, (str, np.str_)):
        return str(value)
    return FLOAT_FMT % float(value)


def read_csv(path) -> dict:
    """Read a file written by :func:`write_csv`; numeric columns become float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
    names, body = rows[0], rows[1:]
    out = {}
    for i, name in enumerate(names):
        values = [r[i] for r in body]
        try:
            out[name] = np.array([float(v) for v in values])
        except ValueError:
            out[name] = np.array(values)
    return out


def write_json(path, payload: dict):
    _atomic_write(Path(path), json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return Path(path)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
