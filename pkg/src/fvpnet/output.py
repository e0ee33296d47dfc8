"""CSV emission for trajectories, summaries, mixing matrices and check reports.

Floats are written with ``repr`` so identical runs give byte-identical files;
every file is written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .algorithm import Trajectory

SCHEMA_LINE = "# fvp-net-opt v1"
TRAJECTORY_HEADER = ["t", "alpha", "e_t", "r_t", "f_mean", "active_edges"]


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(v) -> str:
    return repr(float(v))


def trajectory_rows(traj: Trajectory, include_states: bool = True):
    m, n = traj.states[0].shape if traj.states else (0, 0)
    header = list(TRAJECTORY_HEADER)
    if include_states:
        header += [f"x{i}_{k}" for i in range(m) for k in range(n)]
    recorded = dict(zip(traj.state_steps, traj.states))
    rows = []
    for t in range(len(traj)):
        row = [int(traj.t[t]), _f(traj.alpha[t]), _f(traj.error[t]), _f(traj.residual[t]),
               _f(traj.f_mean[t]), traj.masks[t]]
        if include_states:
            x = recorded.get(t)
            row += [_f(v) for v in x.ravel()] if x is not None else [""] * (m * n)
        rows.append(row)
    return header, rows


def write_trajectory_csv(traj: Trajectory, path, include_states: bool = True) -> Path:
    header, rows = trajectory_rows(traj, include_states)
    return atomic_write(path, _csv_text(header, rows))


def read_trajectory_csv(path) -> dict:
    """Columns of a trajectory CSV as arrays; states as ``(steps, m, n)`` where recorded."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = list(reader)
    col = {h: i for i, h in enumerate(header)}
    out = {
        "t": np.array([int(r[col["t"]]) for r in rows]),
        "alpha": np.array([float(r[col["alpha"]]) for r in rows]),
        "e_t": np.array([float(r[col["e_t"]]) for r in rows]),
        "r_t": np.array([float(r[col["r_t"]]) for r in rows]),
        "f_mean": np.array([float(r[col["f_mean"]]) for r in rows]),
        "active_edges": [r[col["active_edges"]] for r in rows],
    }
    state_cols = [h for h in header if h.startswith("x")]
    if state_cols:
        m = 1 + max(int(h[1:].split("_")[0]) for h in state_cols)
        n = 1 + max(int(h.split("_")[1]) for h in state_cols)
        idx = [col[h] for h in state_cols]
        steps, states = [], []
        for r in rows:
            if r[idx[0]] != "":
                steps.append(int(r[col["t"]]))
                states.append(np.array([float(r[i]) for i in idx]).reshape(m, n))
        out["state_t"] = np.array(steps)
        out["states"] = np.array(states)
    return out


def write_summary_csv(traj: Trajectory, target, path) -> Path:
    target = np.asarray(target, dtype=float)
    final = traj.final
    dev = np.linalg.norm(final - target, axis=1)
    n_first = min(1000, len(traj))
    rows = [
        ["seed", str(traj.seed)],
        ["horizon", len(traj) - 1],
        ["e_0", _f(traj.error[0])],
        ["e_T", _f(traj.error[-1])],
        ["e_ratio", _f(traj.error[-1] / traj.error[0]) if traj.error[0] > 0 else "nan"],
        ["max_agent_deviation", _f(dev.max())],
        ["r_mean_first", _f(traj.residual[:n_first].mean())],
        ["r_mean_last", _f(traj.residual[-n_first:].mean())],
    ]
    rows += [[f"target_{k}", _f(v)] for k, v in enumerate(target)]
    rows += [[f"final_mean_{k}", _f(v)] for k, v in enumerate(final.mean(axis=0))]
    return atomic_write(path, _csv_text(["key", "value"], rows))


def write_mixing_csv(records, path) -> Path:
    """``records``: iterable of ``(t, W)``; only nonzero entries are written."""
    rows = []
    for t, W in records:
        for i, j in zip(*np.nonzero(W)):
            rows.append([t, int(i), int(j), _f(W[i, j])])
    return atomic_write(path, _csv_text(["t", "i", "j", "w"], rows))


def write_checks_csv(reports, path) -> Path:
    rows = [r.csv_row() for r in reports]
    return atomic_write(path, _csv_text(
        ["check", "samples", "violations", "worst_margin", "tol", "passed", "detail"], rows))


def write_mean_square_csv(curve, path) -> Path:
    rows = [[int(t), _f(mu), _f(h)] for t, mu, h in zip(curve.t, curve.mean, curve.half_width)]
    return atomic_write(path, _csv_text(["t", "mean_sq_error", "half_width_95"], rows))


def read_mean_square_csv(path) -> dict:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    next(reader)
    rows = list(reader)
    return {"t": np.array([int(r[0]) for r in rows]),
            "mean": np.array([float(r[1]) for r in rows]),
            "half_width": np.array([float(r[2]) for r in rows])}
