"""Artifact persistence: CSV tables with JSON sidecars, profiles as npz."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

TIMESERIES = "timeseries.csv"
CHECKS = "checks.csv"
CROSSCHECK = "crosscheck.csv"
BLOWUP = "blowup.json"
CERTIFICATE = "certificate.json"
CONFIG = "config.ini"
PROFILES = "profiles.npz"
SUMMARY = "summary.csv"


def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_table(path, columns: Sequence[str], rows: List[Dict], meta: Dict = None) -> None:
    """Comma-separated table with a header row, plus ``<name>.json`` metadata."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in columns])
    sidecar = {"columns": list(columns), "rows": len(rows)}
    sidecar.update(meta or {})
    write_json(path.with_suffix(".json"), sidecar)


def read_table(path) -> List[Dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def as_float(v: str) -> float:
    return float(v) if v != "" else math.nan


def save_profiles(path, grid_nodes, snapshots: Dict[str, List]) -> None:
    """Node values of w per solver, stacked by snapshot time."""
    arrays = {"s_nodes": np.asarray(grid_nodes)}
    for solver, items in snapshots.items():
        arrays[f"{solver}_t"] = np.array([t for t, _ in items], dtype=float)
        arrays[f"{solver}_w"] = (np.vstack([w for _, w in items]) if items
                                 else np.empty((0, len(grid_nodes))))
    np.savez(path, **arrays)


def load_profiles(path) -> Dict[str, np.ndarray]:
    with np.load(path) as data:
        return {k: data[k] for k in data.files}
