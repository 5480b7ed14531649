"""Independent low-dimensional solvers used as ground truth.

Two collocation solvers discretize the equation in one variable with a
spectral basis, deliberately a different discretization family from the
unstructured least-squares stencils of the main solver, so that agreement
between the two is evidence rather than tautology:

  * S^1 (n = 2):  h^{1-p} (h'^2 + h^2)^{-(2-q)/2} (h'' + h) = f(theta),
    periodic trigonometric collocation on equispaced angles.
  * Axisymmetric S^2 (n = 3):  det b = (h'' + h)(cot(theta) h' + h),
    cosine-series collocation in the polar angle on midpoint nodes
    (no collocation point at the poles; pole values close by symmetry,
    cot(theta) h' -> h'' as theta -> 0).

Also provides the finite-difference check of the main solver's
linearization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex_body import SupportFn
from .equation import ProblemParams, linearize, log_residual
from .errors import NonConvergenceError
from .sphere_grid import ScalarField

_TOL = 1e-10
_MAX_ITERS = 60
_MIN_STEP = 2.0 ** -30


@dataclass(frozen=True)
class ODEProblem:
    """1-D reduction: mode 's1' or 'axisym_s2', density as a function of angle."""

    mode: str
    f: callable
    params: ProblemParams
    size: int = 128

    def __post_init__(self):
        if self.mode not in ("s1", "axisym_s2"):
            raise ValueError(f"unknown oracle mode {self.mode!r}")
        if self.mode == "s1" and self.params.n != 2:
            raise ValueError("s1 oracle requires n = 2")
        if self.mode == "axisym_s2" and self.params.n != 3:
            raise ValueError("axisymmetric oracle requires n = 3")


@dataclass(frozen=True)
class ProfileSolution:
    """Solution values on the collocation angles plus a spectral evaluator."""

    theta: np.ndarray
    values: np.ndarray
    residual_sup: float
    iterations: int
    mode: str
    _coeff: np.ndarray

    def __call__(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        k = np.arange(self._coeff.size)
        if self.mode == "s1":
            n = self._coeff.size
            # complex Fourier coefficients, evaluated directly
            vals = np.real(np.exp(1j * np.outer(th, np.fft.fftfreq(n, 1.0 / n)))
                           @ self._coeff)
            return vals if np.asarray(theta).ndim else float(vals[0])
        vals = np.cos(np.outer(th, k)) @ self._coeff
        return vals if np.asarray(theta).ndim else float(vals[0])


def _fourier_diff_matrices(n: int):
    """Trigonometric differentiation matrices on n equispaced angles (n even)."""
    h = 2.0 * np.pi / n
    j = np.arange(n)
    diff = j[:, None] - j[None, :]
    sgn = (-1.0) ** diff
    with np.errstate(divide="ignore", invalid="ignore"):
        half = 0.5 * diff * h
        d1 = 0.5 * sgn / np.tan(half)
        d2 = -0.5 * sgn / np.sin(half) ** 2
    np.fill_diagonal(d1, 0.0)
    np.fill_diagonal(d2, -n * n / 12.0 - 1.0 / 6.0)
    return d1, d2


def _damped_newton_1d(g_fn, jac_fn, admissible_fn, x0):
    """Dense damped Newton with the same admissibility discipline as the
    main solver: positive h, positive curvature entries, decreasing sup|G|."""
    x = x0.copy()
    if not admissible_fn(x):
        raise ValueError("initial profile is not admissible")
    g = g_fn(x)
    sup = float(np.abs(g).max())
    iters = 0
    while sup > _TOL:
        if iters >= _MAX_ITERS:
            raise NonConvergenceError("oracle Newton iteration limit",
                                      iterations=iters, residual_sup=sup, step=float("nan"))
        delta = np.linalg.solve(jac_fn(x), -g)
        s = 1.0
        while True:
            trial = x + s * delta
            if admissible_fn(trial):
                gt = g_fn(trial)
                if float(np.abs(gt).max()) < sup * (1.0 - 1e-4 * s):
                    break
            s *= 0.5
            if s < _MIN_STEP:
                raise NonConvergenceError("oracle line search stalled",
                                          iterations=iters, residual_sup=sup, step=s)
        x, g = trial, gt
        sup = float(np.abs(g).max())
        iters += 1
    return x, sup, iters


def solve_s1(prob: ODEProblem) -> ProfileSolution:
    """Periodic spectral collocation for the circle problem (f > 0)."""
    n = prob.size
    if n % 2 or n < 16:
        raise ValueError("collocation size must be even and >= 16")
    theta = 2.0 * np.pi * np.arange(n) / n
    f = np.asarray([prob.f(t) for t in theta], dtype=float)
    if np.any(f <= 0):
        raise ValueError("s1 oracle requires a strictly positive density")
    d1, d2 = _fourier_diff_matrices(n)
    p, q = prob.params.p, prob.params.q

    def parts(h):
        return d1 @ h, d2 @ h + h  # h', b

    def admissible(h):
        if np.any(h <= 0):
            return False
        _, b = parts(h)
        return bool(np.all(b > 0))

    def g_fn(h):
        hp, b = parts(h)
        return (np.log(b) - (p - 1.0) * np.log(h)
                - 0.5 * (2.0 - q) * np.log(hp ** 2 + h ** 2) - np.log(f))

    def jac_fn(h):
        hp, b = parts(h)
        rho2 = hp ** 2 + h ** 2
        J = (d2 + np.eye(n)) / b[:, None]
        J -= np.diag((p - 1.0) / h)
        J -= (2.0 - q) / rho2[:, None] * (hp[:, None] * d1 + np.diag(h))
        return J

    h0 = np.full(n, f.max() ** (1.0 / (q - p)))
    h, sup, iters = _damped_newton_1d(g_fn, jac_fn, admissible, h0)
    coeff = np.fft.fft(h) / n
    return ProfileSolution(theta, h, sup, iters, "s1", coeff)


def solve_axisym_s2(prob: ODEProblem) -> ProfileSolution:
    """Cosine-series collocation for rotationally symmetric S^2 data (f > 0)."""
    m = prob.size
    theta = np.pi * (np.arange(m) + 0.5) / m  # midpoint nodes, poles excluded
    f = np.asarray([prob.f(t) for t in theta], dtype=float)
    if np.any(f <= 0):
        raise ValueError("axisymmetric oracle requires a strictly positive density")
    k = np.arange(m)
    C = np.cos(np.outer(theta, k))
    Cinv = np.linalg.inv(C)
    d1 = (-np.sin(np.outer(theta, k)) * k) @ Cinv
    d2 = (-np.cos(np.outer(theta, k)) * k ** 2) @ Cinv
    cot = 1.0 / np.tan(theta)
    p, q = prob.params.p, prob.params.q

    def parts(h):
        hp = d1 @ h
        b1 = d2 @ h + h
        b2 = cot * hp + h
        return hp, b1, b2

    def admissible(h):
        if np.any(h <= 0):
            return False
        _, b1, b2 = parts(h)
        return bool(np.all(b1 > 0) and np.all(b2 > 0))

    def g_fn(h):
        hp, b1, b2 = parts(h)
        return (np.log(b1) + np.log(b2) - (p - 1.0) * np.log(h)
                - 0.5 * (3.0 - q) * np.log(hp ** 2 + h ** 2) - np.log(f))

    def jac_fn(h):
        hp, b1, b2 = parts(h)
        rho2 = hp ** 2 + h ** 2
        J = (d2 + np.eye(m)) / b1[:, None]
        J += (cot[:, None] * d1 + np.eye(m)) / b2[:, None]
        J -= np.diag((p - 1.0) / h)
        J -= (3.0 - q) / rho2[:, None] * (hp[:, None] * d1 + np.diag(h))
        return J

    h0 = np.full(m, f.max() ** (1.0 / (q - p)))
    h, sup, iters = _damped_newton_1d(g_fn, jac_fn, admissible, h0)
    coeff = np.linalg.solve(C, h)
    return ProfileSolution(theta, h, sup, iters, "axisym_s2", coeff)


def axisym_trace_b(sol: ProfileSolution, theta) -> np.ndarray:
    """H = b1 + b2 along the profile, with the symmetric pole closure."""
    if sol.mode != "axisym_s2":
        raise ValueError("trace profile is defined for the axisymmetric mode")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    k = np.arange(sol._coeff.size)
    h = np.cos(np.outer(th, k)) @ sol._coeff
    hp = (-np.sin(np.outer(th, k)) * k) @ sol._coeff
    hpp = (-np.cos(np.outer(th, k)) * k ** 2) @ sol._coeff
    b1 = hpp + h
    near_pole = np.minimum(th, np.pi - th) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        b2 = hp / np.tan(th) + h
    b2 = np.where(near_pole, b1, b2)  # cot(theta) h' -> h'' at the poles
    return b1 + b2


@dataclass(frozen=True)
class FDCheckReport:
    steps: list[float]
    errors: list[float]
    max_error: float


def fd_check(h: SupportFn, params: ProblemParams, delta: np.ndarray,
             steps=(1e-4, 1e-5, 1e-6)) -> FDCheckReport:
    """Compare the linearization against forward differences of the log
    residual.  Errors decay linearly in the step until the roundoff floor.
    The density cancels in the difference, so f = 1 is used internally."""
    grid = h.grid
    f1 = ScalarField.constant(grid, 1.0)
    base = log_residual(h, f1, params).values
    L = linearize(h, params)
    ld = L.apply(delta)
    scale = float(np.abs(ld).max())
    errors = []
    for s in steps:
        trial = SupportFn.from_values(grid, h.values + s * delta)
        fd = (log_residual(trial, f1, params).values - base) / s
        errors.append(float(np.abs(fd - ld).max()) / scale)
    return FDCheckReport(list(steps), errors, max(errors))
