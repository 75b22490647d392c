"""CSV / JSON output of trajectories, reports and convergence tables.

Trajectory CSVs have header ``t,x,q,W`` and one row per edge per
snapshot; ``q`` is the density of the cell to the right of the edge (the
last edge repeats the right boundary value). Floats are written with 17
significant digits so that files round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .fields import Field, Grid
from .operators import NonlocalField
from .scenario import scenario_from_dict
from .solver import Snapshot, SolverConfig, Trajectory

FMT = "%.17g"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return FMT % x


def json_safe(obj):
    """Recursively replace non-finite floats and numpy scalars for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(json_safe(obj), indent=2, sort_keys=True) + "\n")


def _edge_q(q: Field) -> np.ndarray:
    return np.append(q.values, q.values[-1])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,x,q,W\n")
        for s in traj.snapshots:
            x = s.q.grid.edges
            block = np.column_stack((np.full(x.size, s.t), x, _edge_q(s.q), s.W.W_values))
            np.savetxt(fh, block, fmt=FMT, delimiter=",")


def write_spacetime_csv(traj: Trajectory, path) -> None:
    """``t,x,q`` at cell centres for every snapshot, ready for surface plots."""
    with open(path, "w", newline="") as fh:
        fh.write("t,x,q\n")
        for s in traj.snapshots:
            x = s.q.grid.centers
            np.savetxt(fh, np.column_stack((np.full(x.size, s.t), x, s.q.values)),
                       fmt=FMT, delimiter=",")


def trajectory_metadata(traj: Trajectory) -> dict:
    meta = dict(traj.metadata)
    meta.pop("dt_history", None)
    dts = traj.metadata.get("dt_history", [])
    meta["dt_min"] = min(dts) if dts else None
    meta["dt_max"] = max(dts) if dts else None
    meta["net_inflow"] = traj.snapshots[-1].net_inflow if traj.snapshots else 0.0
    return {"scenario": traj.scenario.to_dict(), "solver": traj.config.to_dict(),
            "record_times": traj.times, "run": meta}


def write_metadata(traj: Trajectory, path) -> None:
    write_json(trajectory_metadata(traj), path)


def read_trajectory(csv_path, meta_path) -> Trajectory:
    """Rebuild a nonlocal trajectory from its CSV and metadata sidecar."""
    meta = json.loads(Path(meta_path).read_text())
    s = scenario_from_dict(meta["scenario"])
    c = SolverConfig.from_dict(meta["solver"])
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    g = s.grid
    n_edges = g.n_cells + 1
    snaps = []
    for block in data.reshape(-1, n_edges, 4):
        q = Field(g, block[:-1, 2])
        W = block[:, 3]
        Wp = W.copy() if s.p == 0 or math.isinf(s.p) else W ** s.p
        nf = NonlocalField(g, W, Wp, s.p, s.eta, exploratory=s.exploratory)
        snaps.append(Snapshot(float(block[0, 0]), q, nf))
    return Trajectory(s, c, snaps, dict(meta.get("run", {})))


def write_convergence_csv(table, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "l1_sup", "ratio", "slope"])
        for row in table.rows():
            w.writerow([_fmt(float(v)) for v in row])


def write_report(report, out_dir, stem: str = "report") -> list[Path]:
    """Report JSON plus one flat CSV per series; returns the files written."""
    out = Path(out_dir)
    files = [out / f"{stem}.json"]
    write_json(report.to_dict(), files[0])
    series = {"tv": (["t", "tv_q", "tv_Wp", "tv_W"], report.tv_series),
              "identity_residual": (["t", "max_residual"], report.identity_residual)}
    if report.oleinik is not None:
        series["oleinik"] = (["t", "min_slope", "bound"], report.oleinik["series"])
    for name, (header, rows) in series.items():
        path = out / f"{stem}_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) if isinstance(v, float) else ("" if v is None else v)
                            for v in r])
        files.append(path)
    return files


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
