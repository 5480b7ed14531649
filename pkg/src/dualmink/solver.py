"""Damped Newton solver and the eps-continuation ladder.

Newton runs on the log residual; a backtracking line search admits a step
only if it keeps h positive, keeps b positive definite (min eigenvalue
above a floor) and strictly decreases sup|G|.  For a degenerate density
(f >= 0 with zeros) the ladder solves with f + eps for a geometrically
decreasing eps, warm-starting each level from the previous solution, and
records Cauchy diagnostics of the eps -> 0 limit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import lsmr, spsolve

from .analysis import AprioriReport, apriori_report
from .convex_body import GeometryReport, SupportFn, geometric_identity_report
from .equation import ProblemParams, linearize, log_residual, residual
from .errors import NonConvergenceError
from .sphere_grid import ScalarField, is_even, symmetrize_even


@dataclass(frozen=True)
class SolverOptions:
    tol_residual: float = 1e-9          # sup-norm of the log residual
    max_iters: int = 50
    damping_factor: float = 0.5
    min_step: float = 2.0 ** -30
    psd_floor: float = 1e-12            # line-search admissibility for min eig(b)
    enforce_even: bool = False

    def __post_init__(self):
        if not (0 < self.damping_factor < 1):
            raise ValueError("damping factor must lie in (0, 1)")
        for name in ("tol_residual", "min_step", "psd_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class LadderConfig:
    eps0: float = 1e-1
    decay: float = 10.0 ** -0.5
    eps_min: float = 1e-5

    def __post_init__(self):
        if not (self.eps0 >= self.eps_min > 0):
            raise ValueError("need eps0 >= eps_min > 0")
        if not (0 < self.decay < 1):
            raise ValueError("decay factor must lie in (0, 1)")

    def levels(self) -> list[float]:
        out = [self.eps0]
        while out[-1] * self.decay >= self.eps_min * (1.0 - 1e-9):
            out.append(out[-1] * self.decay)
        return out


@dataclass(frozen=True)
class SolveReport:
    h: SupportFn
    iterations: int
    residual_sup: float          # plain residual
    residual_l2: float
    log_residual_sup: float
    log_residual_l2: float
    min_h: float
    max_h: float
    max_grad: float
    max_H: float
    min_eig_b: float
    apriori: AprioriReport
    geometry: GeometryReport
    wall_time: float
    step_history: list[float] = field(default_factory=list)
    sup_history: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class LadderReport:
    eps: list[float]
    reports: list[SolveReport]
    cauchy_h: list[float]        # sup|h_k - h_{k+1}| between consecutive levels
    cauchy_grad: list[float]
    cauchy_H: list[float]
    final: SupportFn
    failed_eps: float | None = None


def default_init(f: ScalarField, params: ProblemParams) -> SupportFn:
    """Constant initial guess (max f)^{1/(q-p)}.

    Exact for constant f, and the scale of the enclosed-ball lower bound
    otherwise.  Undefined for p = q.
    """
    if params.p == params.q:
        raise ValueError("default init undefined for p = q (exponent 1/(q-p))")
    if np.any(f.values <= 0):
        raise ValueError("default init requires a strictly positive density")
    c = float(f.values.max()) ** (1.0 / (params.q - params.p))
    return SupportFn.constant(f.grid, c)


def _even_project(grid, values):
    return 0.5 * (values + values[grid.antipode])


def _admissible(grid, values, psd_floor):
    if np.any(values <= 0):
        return None
    h = SupportFn.from_values(grid, values)
    if h.min_eig_b.min() <= psd_floor:
        return None
    return h


def newton_solve(f: ScalarField, params: ProblemParams,
                 init: SupportFn | None = None,
                 opts: SolverOptions = SolverOptions()) -> SolveReport:
    """Solve the equation for strictly positive f by damped Newton."""
    t0 = time.perf_counter()
    grid = f.grid
    if np.any(f.values <= 0):
        raise ValueError("newton_solve requires a strictly positive density; "
                         "use continuation_ladder for degenerate f")
    if opts.enforce_even:
        f = symmetrize_even(f)
    if init is None:
        init = default_init(f, params)
    hvals = init.values.copy()
    if opts.enforce_even:
        hvals = _even_project(grid, hvals)
    h = _admissible(grid, hvals, opts.psd_floor)
    if h is None:
        raise ValueError("initial guess is not admissible (h > 0, b positive definite)")

    G = log_residual(h, f, params)
    sup = G.sup
    steps: list[float] = []
    sups: list[float] = [sup]
    iters = 0
    while sup > opts.tol_residual:
        if iters >= opts.max_iters:
            raise NonConvergenceError("Newton iteration limit reached",
                                      iterations=iters, residual_sup=sup, step=float("nan"))
        lin = linearize(h, params)
        delta = _solve_newton_system(lin.matrix, -G.values)
        if opts.enforce_even:
            delta = _even_project(grid, delta)
        s = 1.0
        accepted = None
        while s >= opts.min_step:
            trial_vals = h.values + s * delta
            trial = _admissible(grid, trial_vals, opts.psd_floor)
            if trial is not None:
                G_try = log_residual(trial, f, params)
                if G_try.sup < sup * (1.0 - 1e-4 * s):
                    accepted = (trial, G_try)
                    break
            s *= opts.damping_factor
        if accepted is None:
            raise NonConvergenceError("line search stalled",
                                      iterations=iters, residual_sup=sup, step=s)
        h, G = accepted
        if opts.enforce_even:
            # the projection is idempotent on an even iterate; applying it
            # keeps evenness exact against rounding drift
            hv = _even_project(grid, h.values)
            if not np.array_equal(hv, h.values):
                h = SupportFn.from_values(grid, hv)
                G = log_residual(h, f, params)
        sup = G.sup
        steps.append(s)
        sups.append(sup)
        iters += 1

    R = residual(h, f, params)
    apr = apriori_report(h, f, params)
    geo = geometric_identity_report(h, check_even_cone=opts.enforce_even or None)
    return SolveReport(
        h=h, iterations=iters,
        residual_sup=R.sup, residual_l2=R.l2,
        log_residual_sup=G.sup, log_residual_l2=G.l2,
        min_h=float(h.values.min()), max_h=float(h.values.max()),
        max_grad=float(np.sqrt(h.grad_sq.max())),
        max_H=float(h.trace_b.max()),
        min_eig_b=float(h.min_eig_b.min()),
        apriori=apr, geometry=geo,
        wall_time=time.perf_counter() - t0,
        step_history=steps, sup_history=sups)


def _solve_newton_system(mat, rhs):
    """Direct sparse solve with an iterative least-squares fallback."""
    try:
        delta = spsolve(mat.tocsc(), rhs)
        if np.all(np.isfinite(delta)):
            return delta
    except RuntimeError:
        pass
    return lsmr(mat, rhs, atol=1e-14, btol=1e-14)[0]


def continuation_ladder(f: ScalarField, params: ProblemParams,
                        ladder: LadderConfig = LadderConfig(),
                        opts: SolverOptions = SolverOptions(enforce_even=True),
                        experimental: bool = False) -> LadderReport:
    """Solve with f + eps for a decreasing eps ladder, warm-starting each level.

    Requires f >= 0, nonzero and even; (p, q) outside p > q > 0 is refused
    unless ``experimental`` is set (no convergence promise there).
    """
    if np.any(f.values < 0):
        raise ValueError("density must be nonnegative")
    if float(f.values.max()) <= 0:
        raise ValueError("density must be nonzero")
    if not is_even(f, tol=1e-12 * max(1.0, float(f.values.max()))):
        raise ValueError("density must be even; symmetrize it first")
    if not params.guaranteed and not experimental:
        raise ValueError(
            f"(p, q) = ({params.p}, {params.q}) is outside the guaranteed regime "
            "p > q > 0; pass experimental=True to try it anyway")

    levels = ladder.levels()
    eps_done: list[float] = []
    reports: list[SolveReport] = []
    cauchy_h: list[float] = []
    cauchy_grad: list[float] = []
    cauchy_H: list[float] = []
    init = default_init(f + levels[0], params)
    prev: SupportFn | None = None
    for eps in levels:
        f_eps = f + eps
        try:
            rep = newton_solve(f_eps, params, init=init, opts=opts)
        except NonConvergenceError as err:
            partial = LadderReport(eps_done, reports, cauchy_h, cauchy_grad,
                                   cauchy_H, prev if prev is not None else init,
                                   failed_eps=eps)
            raise NonConvergenceError(
                "continuation ladder aborted", iterations=err.iterations,
                residual_sup=err.residual_sup, step=err.step, eps=eps,
                partial_report=partial) from err
        if prev is not None:
            cauchy_h.append(float(np.max(np.abs(rep.h.values - prev.values))))
            cauchy_grad.append(float(np.max(
                np.linalg.norm(rep.h.grad - prev.grad, axis=1))))
            cauchy_H.append(float(np.max(np.abs(rep.h.trace_b - prev.trace_b))))
        eps_done.append(eps)
        reports.append(rep)
        prev = rep.h
        init = rep.h
    return LadderReport(eps_done, reports, cauchy_h, cauchy_grad, cauchy_H, prev)
