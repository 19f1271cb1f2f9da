"""File formats: datasets, configs, traces, paths, comparisons, duals and
result tables.

Floats are written with ``repr`` so every value round-trips exactly and the
same run always produces the same bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .data_model import Dataset
from .gd_engine import GDTrace, empirical_risk
from .margin import DualSolution, numerical_rank
from .regpath import PathComparison

__all__ = [
    "format_value",
    "save_dataset",
    "load_dataset",
    "load_config_dict",
    "write_json",
    "write_csv",
    "read_csv",
    "write_trace",
    "write_path",
    "write_comparison",
    "write_dual",
    "write_table",
]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan literals
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def load_config_dict(path) -> dict:
    return json.loads(Path(path).read_text())


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(v) for v in r])
    return path


def read_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------- datasets

def save_dataset(data: Dataset, path) -> Path:
    """``.npz`` keeps exact binary values; ``.csv`` uses columns ``y, x_1..x_d``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".npz":
        seed = -1 if data.seed is None else int(data.seed)
        np.savez(path, features=data.features, labels=data.labels, seed=seed)
    elif path.suffix == ".csv":
        cols = ["y"] + [f"x_{j + 1}" for j in range(data.d)]
        write_csv(path, cols, (np.r_[y, x] for y, x in zip(data.labels, data.features)))
    else:
        raise ValueError("dataset files must end in .npz or .csv")
    return path


def load_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            seed = int(z["seed"]) if "seed" in z else -1
            return Dataset(z["features"], z["labels"], None if seed < 0 else seed)
    if path.suffix == ".csv":
        header, rows = read_csv(path)
        if not header or header[0] != "y":
            raise ValueError("CSV dataset must start with a 'y' column")
        arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
        return Dataset(arr[:, 1:], arr[:, 0])
    raise ValueError("dataset files must end in .npz or .csv")


# ------------------------------------------------------------ module output

def write_trace(trace: GDTrace, prefix) -> tuple[Path, Path]:
    """``<prefix>.csv`` with one row per recorded iterate, ``<prefix>.json``
    with stop events, thresholds and the run configuration."""
    prefix = Path(prefix)
    rows = zip(trace.t, trace.eta_t, trace.emp_risk, trace.grad_norm, trace.w_norm)
    c = write_csv(prefix.with_suffix(".csv"),
                  ("t", "eta_t", "emp_risk", "grad_norm", "w_norm"), rows)
    cfg = trace.config
    side = {
        "stop_events": [[k, v] for k, v in trace.stop_events.items()],
        "thresholds": trace.thresholds,
        "smoothness_surrogate": trace.beta_hat,
        "config": {"eta": cfg.eta, "max_iters": cfg.max_iters, "loss": cfg.loss,
                   "log_risk": cfg.log_risk},
    }
    return c, write_json(side, prefix.with_suffix(".json"))


def write_path(path_points, data: Dataset, file) -> Path:
    rows = ((p.lam, p.norm, empirical_risk(p.u, data), p.kkt_residual) for p in path_points)
    return write_csv(file, ("lambda", "u_norm", "emp_risk", "kkt_residual"), rows)


def write_comparison(cmp: PathComparison, file) -> Path:
    cols = ("t", "eta_t", "lambda", "distance", "cosine", "norm_ratio", "pairing_mode")
    return write_csv(file, cols, (tuple(r[c] for c in cols) for r in cmp.rows()))


def write_dual(dual: DualSolution, data: Dataset, file, rank_tol: float = 1e-8) -> Path:
    r_s = numerical_rank(data.features[dual.support], rank_tol)
    r_all = numerical_rank(data.features, rank_tol)
    return write_json({
        "beta": dual.beta, "gamma": dual.gamma, "support": dual.support,
        "support_threshold": dual.support_threshold, "kkt_residual": dual.kkt_residual,
        "rank_diagnostics": {"rank_support": r_s, "rank_all": r_all,
                             "rank_tol": rank_tol, "condition_holds": r_s == r_all},
    }, file)


def write_table(table, out_dir) -> list[Path]:
    """CSV body plus JSON sidecar for ``table`` and each of its children."""
    out = Path(out_dir)
    written = [write_csv(out / f"{table.name}.csv", table.columns, table.rows)]
    side = {
        "provenance": table.provenance,
        "columns": list(table.columns),
        "checks": [{"name": c.name, "passed": c.passed, "value": c.value,
                    "threshold": c.threshold, "note": c.note} for c in table.checks],
        "report": table.report,
        "children": [ch.name for ch in table.children],
    }
    written.append(write_json(side, out / f"{table.name}.json"))
    for ch in table.children:
        written += write_table(ch, out)
    return written
