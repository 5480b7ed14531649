#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot entry points on a real grid plus one end-to-end Newton
solve per backend.  Run as:  python3 benchmarks/bench_kernels.py [--level 4]
"""

import argparse
import time

import numpy as np

from dualmink.kernels import HAVE_COMPILED, _fallback
from dualmink.sphere_grid import ScalarField, build_grid

if HAVE_COMPILED:
    from dualmink.kernels import _core
else:
    _core = None


def timeit(fn, *args, repeat=5, **kwargs):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--level", type=int, default=4)
    args = ap.parse_args()

    grid = build_grid(3, args.level)
    n = grid.num_nodes
    rng = np.random.default_rng(7)
    t = grid.nodes[:, 2]
    h = 1.0 + 0.3 * t + 0.05 * (grid.nodes[:, 0] * grid.nodes[:, 1])
    print(f"grid: S^2 level {args.level}, {n} nodes, "
          f"compiled extension {'present' if HAVE_COMPILED else 'MISSING'}")

    backends = [("numpy-fallback", _fallback)]
    if _core is not None:
        backends.append(("compiled", _core))

    hess_mult = np.ascontiguousarray(
        np.column_stack([1.0 + 0.1 * t, 0.2 * t, 1.0 - 0.1 * t]))
    grad_mult = np.ascontiguousarray(rng.standard_normal((n, 2)))
    diag = np.ascontiguousarray(rng.standard_normal(n))

    rows = []
    ref = {}
    for name, mod in backends:
        t_ops, (g, hp) = timeit(mod.apply_stencil_ops, grid.stencil_ptr,
                                grid.stencil_idx, grid.grad_coef,
                                grid.hess_coef, h)
        t_rows, data = timeit(mod.weighted_stencil_rows, grid.stencil_ptr,
                              grid.stencil_idx, grid.center_slot,
                              grid.grad_coef, grid.hess_coef,
                              hess_mult, grad_mult, diag)
        t_rad, (rho, arg) = timeit(mod.radial_min, grid.nodes, h, grid.nodes,
                                   repeat=3)
        rows.append((name, t_ops, t_rows, t_rad))
        ref[name] = (g, hp, data, rho)

    print(f"{'backend':<16} {'stencil_ops':>12} {'jacobian_rows':>13} {'radial_min':>12}")
    for name, a, b, c in rows:
        print(f"{name:<16} {a * 1e3:>10.2f}ms {b * 1e3:>11.2f}ms {c * 1e3:>10.2f}ms")
    if len(rows) == 2:
        base, fast = rows[0], rows[1]
        print(f"{'speedup':<16} {base[1] / fast[1]:>11.1f}x {base[2] / fast[2]:>12.1f}x "
              f"{base[3] / fast[3]:>11.1f}x")
        a, b = ref["numpy-fallback"], ref["compiled"]
        worst = max(np.max(np.abs(np.asarray(x) - np.asarray(y)))
                    for x, y in zip(a, b))
        print(f"max cross-backend deviation: {worst:.3e}")

    # end-to-end: one positive-density solve per backend
    from dualmink import kernels
    from dualmink.equation import ProblemParams
    from dualmink.solver import SolverOptions, newton_solve

    params = ProblemParams(3, 2.0, 1.0)
    f = ScalarField(grid, 1.0 + 0.5 * t ** 2)
    saved = (kernels.apply_stencil_ops, kernels.weighted_stencil_rows,
             kernels.radial_min)
    for name, mod in backends:
        kernels.apply_stencil_ops = mod.apply_stencil_ops
        kernels.weighted_stencil_rows = mod.weighted_stencil_rows
        kernels.radial_min = mod.radial_min
        # sphere_grid/equation bind the names at import; patch them too
        import dualmink.convex_body as cb
        import dualmink.equation as eq
        import dualmink.sphere_grid as sg
        sg.apply_stencil_ops = mod.apply_stencil_ops
        eq.weighted_stencil_rows = mod.weighted_stencil_rows
        cb.radial_min = mod.radial_min
        t0 = time.perf_counter()
        rep = newton_solve(f, params, opts=SolverOptions(enforce_even=True))
        print(f"newton_solve ({name}): {time.perf_counter() - t0:.3f}s, "
              f"{rep.iterations} iterations")
    (kernels.apply_stencil_ops, kernels.weighted_stencil_rows,
     kernels.radial_min) = saved


if __name__ == "__main__":
    main()
