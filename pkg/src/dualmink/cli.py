"""Batch experiment driver.

Subcommands: solve, ladder, check-conditions, verify <solution-file>,
export-mesh, oracle.  A run is configured by a single JSON document; all
defaults are materialized into the output summary so runs are
self-describing.  Exit codes: 0 success, 2 precondition violation,
3 solver non-convergence (a partial ladder report is still written).

Artifacts are byte-deterministic for identical configs at a fixed thread
count (set OMP_NUM_THREADS to pin BLAS threading); measured wall times go
to the separate timings.json sidecar, never into report.csv/summary.json.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import condition_I, condition_II
from .convex_body import SupportFn, dual_integral_identity, export_obj
from .equation import ProblemParams
from .errors import NonConvergenceError
from .oracle import ODEProblem, solve_axisym_s2, solve_s1
from .presets import evaluate_expression, preset_names, resolve_density
from .solver import (LadderConfig, SolveReport, SolverOptions,
                     continuation_ladder, newton_solve)
from .sphere_grid import ScalarField, build_grid, integrate

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NONCONVERGENCE = 3


def _load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _build_problem(cfg):
    gcfg = cfg.get("grid", {})
    n = int(gcfg.get("n", 3))
    resolution = int(gcfg.get("resolution", 4))
    grid = build_grid(n, resolution)
    pcfg = cfg.get("params", {})
    params = ProblemParams(n, float(pcfg.get("p", 2.0)), float(pcfg.get("q", 1.0)))
    return grid, params


def _density(cfg, grid) -> tuple[ScalarField, str]:
    if "density" not in cfg:
        raise ValueError("config is missing the density spec")
    f, label = resolve_density(cfg["density"], grid)
    if np.any(f.values < 0):
        raise ValueError("density must be nonnegative")
    return f, label


def _solver_options(cfg) -> SolverOptions:
    return SolverOptions(**cfg.get("solver", {}))


def _ladder_config(cfg) -> LadderConfig:
    return LadderConfig(**cfg.get("ladder", {}))


def _materialized(cfg, grid, params, opts, ladder=None, density_label="") -> dict:
    out = {
        "mode": cfg.get("mode"),
        "grid": {"n": grid.dim, "resolution": grid.resolution,
                 "nodes": grid.num_nodes, "hash": grid.spec_hash()},
        "params": {"n": params.n, "p": params.p, "q": params.q,
                   "guaranteed_regime": params.guaranteed},
        "density": density_label,
        "solver": dataclasses.asdict(opts),
        "experimental": bool(cfg.get("experimental", False)),
    }
    if ladder is not None:
        out["ladder"] = dataclasses.asdict(ladder)
    return out


def _report_row(eps: float, rep: SolveReport, f_eps: ScalarField, params) -> dict:
    dual = dual_integral_identity(rep.h, f_eps, params)
    return {
        "eps": eps,
        "residual_sup": rep.residual_sup,
        "residual_l2": rep.residual_l2,
        "log_residual_sup": rep.log_residual_sup,
        "log_residual_l2": rep.log_residual_l2,
        "min_h": rep.min_h,
        "c0_lower_bound": rep.apriori.c0_lower_bound,
        "max_h": rep.max_h,
        "max_grad": rep.max_grad,
        "max_H": rep.max_H,
        "psd_margin": rep.min_eig_b,
        "dual_rel_gap": dual.rel_gap,
        "iterations": rep.iterations,
    }


def _level_summary(eps, rep: SolveReport, row: dict) -> dict:
    apr = dataclasses.asdict(rep.apriori)
    geo = dataclasses.asdict(rep.geometry)
    return {"eps": eps, "row": row, "apriori": apr, "geometry": geo}


def _write_solution(out: Path, rep: SolveReport, meta: dict, name="h_final") -> None:
    io.write_field(out / f"{name}.field", rep.h.field, meta)
    if rep.h.grid.dim == 3:
        export_obj(rep.h, out / "body.obj")


def _cmd_solve(cfg, out: Path, experimental: bool) -> int:
    grid, params = _build_problem(cfg)
    f, label = _density(cfg, grid)
    if np.any(f.values <= 0):
        raise ValueError("solve mode requires a strictly positive density; "
                         "use ladder mode for degenerate densities")
    opts = _solver_options(cfg)
    rep = newton_solve(f, params, opts=opts)
    row = _report_row(0.0, rep, f, params)
    io.write_csv(out / "report.csv", [row])
    summary = _materialized(cfg, grid, params, opts, density_label=label)
    summary["levels"] = [_level_summary(0.0, rep, row)]
    io.write_json(out / "summary.json", summary)
    _write_solution(out, rep, {"density": label, "eps": 0.0,
                               "p": params.p, "q": params.q})
    io.write_json(out / "timings.json", {"wall_time_s": [rep.wall_time]})
    return EXIT_OK


def _cmd_ladder(cfg, out: Path, experimental: bool) -> int:
    grid, params = _build_problem(cfg)
    f, label = _density(cfg, grid)
    opts = _solver_options({"solver": {"enforce_even": True, **cfg.get("solver", {})}})
    ladder = _ladder_config(cfg)
    failed_eps = None
    try:
        lad = continuation_ladder(f, params, ladder, opts, experimental=experimental)
    except NonConvergenceError as err:
        if err.partial_report is None:
            raise
        lad = err.partial_report
        failed_eps = err.eps

    rows = []
    levels = []
    timings = []
    for eps, rep in zip(lad.eps, lad.reports):
        row = _report_row(eps, rep, f + eps, params)
        rows.append(row)
        levels.append(_level_summary(eps, rep, row))
        timings.append(rep.wall_time)
    io.write_csv(out / "report.csv", rows)
    summary = _materialized(cfg, grid, params, opts, ladder, label)
    summary["levels"] = levels
    summary["cauchy"] = {"h": lad.cauchy_h, "grad": lad.cauchy_grad, "H": lad.cauchy_H}
    summary["failed_eps"] = failed_eps
    if grid.dim == 3 and params.n == 3:
        try:
            ci = condition_I(f)
            summary["condition_I"] = {"A_grad": ci.A_grad, "A_lap": ci.A_lap}
        except ValueError as err:
            summary["condition_I"] = {"skipped": str(err)}
        if params.q < 2:
            try:
                cii = condition_II(f, params.q)
                summary["condition_II"] = {"A_II": cii.A_II}
            except ValueError as err:
                summary["condition_II"] = {"skipped": str(err)}
    io.write_json(out / "summary.json", summary)
    if lad.reports:
        _write_solution(out, lad.reports[-1],
                        {"density": label, "eps": lad.eps[-1],
                         "p": params.p, "q": params.q})
    io.write_json(out / "timings.json", {"wall_time_s": timings})
    if failed_eps is not None:
        print(f"ladder aborted at eps={failed_eps:.3e}; partial report written",
              file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _cmd_check_conditions(cfg, out: Path, experimental: bool) -> int:
    grid, params = _build_problem(cfg)
    f, label = _density(cfg, grid)
    if grid.dim != 3:
        raise ValueError("condition checking is defined for n = 3 only "
                         "(the exponent 1/(n-2) is empty at n = 2)")
    payload = {"density": label, "q": params.q, "levels": {}}
    resolutions = [grid.resolution]
    if grid.resolution + 1 <= 6:
        resolutions.append(grid.resolution + 1)  # sensitivity check one level up
    for res in resolutions:
        g = grid if res == grid.resolution else build_grid(3, res)
        fr, _ = _density(cfg, g)
        ci = condition_I(fr)
        entry = {"A_grad": ci.A_grad, "A_lap": ci.A_lap,
                 "worst_grad_node": ci.worst_grad_node,
                 "worst_lap_node": ci.worst_lap_node}
        if params.q < 2:
            cii = condition_II(fr, params.q)
            entry["A_II"] = cii.A_II
            entry["worst_II_node"] = cii.worst_II_node
        else:
            entry["A_II"] = None
        payload["levels"][str(res)] = entry
    io.write_json(out / "conditions.json", payload)
    return EXIT_OK


def _cmd_verify(cfg, out: Path, experimental: bool, solution_file: str) -> int:
    field, meta = io.read_field(solution_file)
    grid = field.grid
    params = ProblemParams(grid.dim, float(meta["p"]), float(meta["q"]))
    label = meta["density"]
    kind, _, spec = label.partition(":")
    if kind == "preset":
        f, _ = resolve_density({"preset": spec}, grid)
    elif kind == "expr":
        f, _ = resolve_density({"expr": spec}, grid)
    else:
        raise ValueError(f"cannot reconstruct density from {label!r}")
    eps = float(meta.get("eps", 0.0))
    f_eps = f + eps if eps else f
    h = SupportFn.from_values(grid, field.values)

    from .analysis import apriori_report
    from .equation import log_residual, residual
    R = residual(h, f_eps, params)
    G = log_residual(h, f_eps, params)
    apr = apriori_report(h, f_eps, params)
    dual = dual_integral_identity(h, f_eps, params)
    recomputed = {
        "eps": eps,
        "residual_sup": R.sup, "residual_l2": R.l2,
        "log_residual_sup": G.sup, "log_residual_l2": G.l2,
        "min_h": float(h.values.min()),
        "c0_lower_bound": apr.c0_lower_bound,
        "max_h": float(h.values.max()),
        "max_grad": float(np.sqrt(h.grad_sq.max())),
        "max_H": float(h.trace_b.max()),
        "psd_margin": float(h.min_eig_b.min()),
        "dual_rel_gap": dual.rel_gap,
    }
    summary_path = Path(solution_file).parent / "summary.json"
    status = EXIT_OK
    if summary_path.exists():
        with open(summary_path) as fh:
            summary = json.load(fh)
        stored = None
        for level in summary.get("levels", []):
            if abs(level["eps"] - eps) <= 1e-15 * max(1.0, eps):
                stored = level["row"]
        if stored is None:
            print(f"verify: no stored row for eps={eps}", file=sys.stderr)
            status = EXIT_PRECONDITION
        else:
            for key, val in recomputed.items():
                ref = stored[key]
                scale = max(abs(ref), abs(val), 1.0)
                ok = abs(val - ref) <= 1e-14 * scale
                print(f"verify {key}: stored={io.fmt(ref)} recomputed={io.fmt(val)} "
                      f"{'OK' if ok else 'MISMATCH'}")
                if not ok:
                    status = EXIT_PRECONDITION
    else:
        print("verify: no summary.json next to the field dump; "
              "printing recomputed values only", file=sys.stderr)
        for key, val in recomputed.items():
            print(f"verify {key}: recomputed={io.fmt(val)}")
    io.write_json(out / "verify.json", {"recomputed": recomputed,
                                        "matches_summary": status == EXIT_OK})
    return status


def _cmd_export_mesh(cfg, out: Path, experimental: bool, solution_file: str) -> int:
    field, meta = io.read_field(solution_file)
    if field.grid.dim != 3:
        raise ValueError("mesh export requires an S^2 solution")
    h = SupportFn.from_values(field.grid, field.values)
    export_obj(h, out / "body.obj")
    return EXIT_OK


def _cmd_oracle(cfg, out: Path, experimental: bool) -> int:
    ocfg = cfg.get("oracle", {})
    mode = ocfg.get("mode", "axisym_s2")
    size = int(ocfg.get("size", 128))
    expr = ocfg.get("density_theta")
    if expr is None:
        raise ValueError("oracle mode requires oracle.density_theta "
                         "(an expression in theta)")
    names = {"theta": None}

    def f_of_theta(theta):
        import math as _m
        loc = {"theta": theta, "sin": _m.sin, "cos": _m.cos, "exp": _m.exp,
               "sqrt": _m.sqrt, "pi": _m.pi, "abs": abs}
        return float(eval(expr, {"__builtins__": {}}, loc))  # noqa: S307

    pcfg = cfg.get("params", {})
    n = 2 if mode == "s1" else 3
    params = ProblemParams(n, float(pcfg.get("p", 2.0)), float(pcfg.get("q", 1.0)))
    prob = ODEProblem(mode, f_of_theta, params, size)
    sol = solve_s1(prob) if mode == "s1" else solve_axisym_s2(prob)
    lines = ["theta,h"]
    for th, v in zip(sol.theta, sol.values):
        lines.append(f"{io.fmt(th)},{io.fmt(v)}")
    with open(out / "profile.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    io.write_json(out / "summary.json", {
        "mode": mode, "size": size, "density_theta": expr,
        "params": {"p": params.p, "q": params.q},
        "residual_sup": sol.residual_sup, "iterations": sol.iterations})
    return EXIT_OK


def run(config_path, out_dir, experimental: bool = False,
        solution_file: str | None = None, mode: str | None = None) -> int:
    """Run one experiment from a JSON config; returns the process exit code."""
    cfg = _load_config(config_path) if config_path else {}
    mode = mode or cfg.get("mode")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    experimental = experimental or bool(cfg.get("experimental", False))
    try:
        if mode == "solve":
            return _cmd_solve(cfg, out, experimental)
        if mode == "ladder":
            return _cmd_ladder(cfg, out, experimental)
        if mode == "check-conditions":
            return _cmd_check_conditions(cfg, out, experimental)
        if mode == "verify":
            if not solution_file:
                raise ValueError("verify requires a solution file argument")
            return _cmd_verify(cfg, out, experimental, solution_file)
        if mode == "export-mesh":
            if not solution_file:
                raise ValueError("export-mesh requires a solution file argument")
            return _cmd_export_mesh(cfg, out, experimental, solution_file)
        if mode == "oracle":
            return _cmd_oracle(cfg, out, experimental)
        raise ValueError(f"unknown mode {mode!r}")
    except (ValueError, KeyError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NonConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dualmink",
        description="Solve and verify the dual Minkowski Monge-Ampere problem "
                    "on S^1/S^2.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", default=None, help="JSON config path")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--experimental", action="store_true",
                        help="allow (p, q) outside the guaranteed regime p > q > 0")

    for name in ("solve", "ladder", "check-conditions", "oracle"):
        add_common(sub.add_parser(name))
    sp = sub.add_parser("verify")
    sp.add_argument("solution_file", help="field dump to verify")
    add_common(sp)
    sp = sub.add_parser("export-mesh")
    sp.add_argument("solution_file", help="field dump to export")
    add_common(sp)
    sp = sub.add_parser("presets")
    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in preset_names():
            print(name)
        return EXIT_OK
    return run(args.config, args.out, args.experimental,
               solution_file=getattr(args, "solution_file", None),
               mode=args.command)


if __name__ == "__main__":
    sys.exit(main())
