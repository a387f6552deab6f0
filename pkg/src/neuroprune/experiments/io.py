"""CSV and JSON sidecar emission."""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np
import scipy


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def versions() -> dict:
    from .. import __version__

    return {"neuroprune": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def write_outputs(result, out_dir, wall_time: float | None = None) -> tuple[Path, Path]:
    """Write ``<name>.csv`` and ``<name>.meta.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    stem = result.config.name
    csv_path = write_csv(out_dir / f"{stem}.csv", result.columns, result.rows)
    meta = {
        "experiment": stem,
        "config": result.config.to_dict(),
        "config_hash": result.config.hash(),
        "columns": list(result.columns),
        "n_rows": len(result.rows),
        "seeds": list(result.seeds),
        "summary": result.summary,
        "calibration": result.calibration,
        "constants": result.constants,
        "violations": list(result.violations),
        "versions": versions(),
        "wall_time_s": wall_time,
    }
    meta_path = out_dir / f"{stem}.meta.json"
    meta_path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, meta_path
