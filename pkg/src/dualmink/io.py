"""Deterministic on-disk formats: field dumps, CSV reports, JSON summaries.

Solution fields are stored as a flat text format (node index, value) with
the grid family and a hash of the node coordinates in the header, so a
dump can be re-loaded and re-verified without trusting the producer.
Floats are written with 17 significant digits for bit-exact round-trips.
All writers are deterministic: identical inputs give identical bytes
(wall-clock timings are therefore kept out of these files and reported in
a separate sidecar).
"""

from __future__ import annotations

import json

import numpy as np

from .sphere_grid import Grid, ScalarField, build_grid

# fixed CSV column order for ladder/solve reports
REPORT_COLUMNS = [
    "eps", "residual_sup", "residual_l2", "log_residual_sup", "log_residual_l2",
    "min_h", "c0_lower_bound", "max_h", "max_grad", "max_H", "psd_margin",
    "dual_rel_gap", "iterations",
]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_field(path, field: ScalarField, meta: dict | None = None) -> None:
    grid = field.grid
    lines = [
        "# dualmink field v1",
        f"# n {grid.dim}",
        f"# resolution {grid.resolution}",
        f"# nodes {grid.num_nodes}",
        f"# grid_hash {grid.spec_hash()}",
        f"# meta {json.dumps(meta or {}, sort_keys=True)}",
    ]
    for i, v in enumerate(field.values):
        lines.append(f"{i} {fmt(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path, grid: Grid | None = None) -> tuple[ScalarField, dict]:
    header: dict[str, str] = {}
    idx = []
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2:
                    header[parts[0]] = parts[1]
                continue
            i, v = line.split()
            idx.append(int(i))
            vals.append(float(v))
    n = int(header["n"])
    resolution = int(header["resolution"])
    if grid is None:
        grid = build_grid(n, resolution)
    if grid.dim != n or grid.resolution != resolution:
        raise ValueError("field dump was written for a different grid")
    if header.get("grid_hash") != grid.spec_hash():
        raise ValueError("grid hash mismatch: dump does not match the rebuilt grid")
    values = np.empty(grid.num_nodes)
    values[np.asarray(idx)] = vals
    meta = json.loads(header.get("meta", "{}"))
    return ScalarField(grid, values), meta


def write_csv(path, rows: list[dict]) -> None:
    lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        lines.append(",".join(fmt(row[c]) for c in REPORT_COLUMNS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    cols = lines[0].split(",")
    out = []
    for ln in lines[1:]:
        out.append({c: float(v) for c, v in zip(cols, ln.split(","))})
    return out


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
