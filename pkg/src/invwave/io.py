"""Deterministic CSV / JSON / gnuplot writers."""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def write_csv(path, columns: dict) -> Path:
    """Columns of equal length, header row, 17 significant digits."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(names), comments="")
    return path


def read_csv(path) -> dict:
    arr = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.asarray(arr[name], dtype=float) for name in arr.dtype.names}


def write_gnuplot(path, csv_name: str, x: str, series: list[str], columns: list[str],
                  title: str = "", logy: bool = False) -> Path:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'" if title else "unset title",
        f"set xlabel '{x}'",
    ]
    if logy:
        lines.append("set logscale y")
    plots = [f"'{csv_name}' using {columns.index(x) + 1}:{columns.index(s) + 1} with lines" for s in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_flat_config(path) -> dict:
    """key = value lines; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def resolve_out(flag: str | None) -> Path:
    out = os.environ.get("INVWAVE_OUT") or flag or "."
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p
