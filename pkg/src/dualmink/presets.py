"""Named density presets and closed-form density expressions.

All presets are even and nonnegative.  Where the admissibility constants
are known in closed form they are recorded with the preset (t denotes the
coordinate <x, e3>, so on S^2 the gradient of t has |grad t|^2 = 1 - t^2
and Delta t = -2t):

  constant:c   f = c               A_grad = 0,  A_lap = 0
  equator2     f = t^2             A_grad = 1 (max of 2|t|sqrt(1-t^2)),
                                   A_lap = 4 (max of 6t^2-2)
  polar        f = 1 - t^2         A_grad = 1,  A_lap = 2 (max of 2-6t^2)
  bump:a       f = 1 + a t^2       A_grad = a,  A_lap = 4a  (a > 0)
  cross2       f = (t1 t2)^2       degenerate on two great circles;
                                   constants measured, not closed-form

Expression densities may use t1, t2, t3 (components of x), theta (polar
angle from e3) and numpy math functions.
"""

from __future__ import annotations

import math

import numpy as np

from .sphere_grid import Grid, ScalarField

_SAFE_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "sqrt": np.sqrt, "abs": np.abs, "log": np.log, "pi": math.pi,
    "minimum": np.minimum, "maximum": np.maximum,
}


def preset_names() -> list[str]:
    return ["constant:<c>", "equator2", "polar", "bump:<a>", "cross2"]


def _axis(grid: Grid) -> np.ndarray:
    """Distinguished coordinate: <x, e3> on S^2, <x, e2> on S^1."""
    return grid.nodes[:, -1]


def resolve_preset(name: str, grid: Grid) -> ScalarField:
    base, _, arg = name.partition(":")
    t = _axis(grid)
    if base == "constant":
        c = float(arg) if arg else 1.0
        if c <= 0:
            raise ValueError("constant preset requires c > 0")
        return ScalarField.constant(grid, c)
    if base == "equator2":
        return ScalarField(grid, t ** 2)
    if base == "polar":
        return ScalarField(grid, 1.0 - t ** 2)
    if base == "bump":
        a = float(arg) if arg else 0.5
        if a <= 0:
            raise ValueError("bump preset requires a > 0")
        return ScalarField(grid, 1.0 + a * t ** 2)
    if base == "cross2":
        if grid.dim != 3:
            raise ValueError("cross2 preset requires an S^2 grid")
        return ScalarField(grid, (grid.nodes[:, 0] * grid.nodes[:, 1]) ** 2)
    raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")


def evaluate_expression(expr: str, grid: Grid) -> ScalarField:
    """Evaluate a closed-form density in the node coordinates."""
    names = dict(_SAFE_FUNCS)
    names["t1"] = grid.nodes[:, 0]
    names["t2"] = grid.nodes[:, 1]
    if grid.dim == 3:
        names["t3"] = grid.nodes[:, 2]
        names["theta"] = np.arccos(np.clip(grid.nodes[:, 2], -1.0, 1.0))
    else:
        names["theta"] = np.mod(np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0]),
                                2.0 * math.pi)
    try:
        vals = eval(expr, {"__builtins__": {}}, names)  # noqa: S307 - restricted namespace
    except Exception as err:
        raise ValueError(f"cannot evaluate density expression {expr!r}: {err}") from err
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (grid.num_nodes,)).copy()
    return ScalarField(grid, vals)


def resolve_density(spec, grid: Grid) -> tuple[ScalarField, str]:
    """Resolve a density config entry: preset, expression, or sampled file."""
    if isinstance(spec, str):
        spec = {"preset": spec}
    if "preset" in spec:
        return resolve_preset(spec["preset"], grid), f"preset:{spec['preset']}"
    if "expr" in spec:
        return evaluate_expression(spec["expr"], grid), f"expr:{spec['expr']}"
    if "file" in spec:
        from .io import read_field
        field, meta = read_field(spec["file"], grid)
        return field, f"file:{spec['file']}"
    raise ValueError("density spec needs one of: preset, expr, file")
