"""Residual and linearization of the L_p dual Minkowski equation.

Plain form:   R = h^{1-p} (|grad h|^2 + h^2)^{-(n-q)/2} det(b) - f,
log form:     G = log det b - (p-1) log h - (n-q)/2 log(|grad h|^2 + h^2) - log f,
with b = hess h + h I.  Newton runs on G (requires f > 0 and b positive
definite, exactly the regularized setting); R is used for reporting and
degenerate-limit diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .convex_body import SupportFn
from .kernels import weighted_stencil_rows
from .sphere_grid import ScalarField


@dataclass(frozen=True)
class ProblemParams:
    """Dimension and exponents of the equation."""

    n: int
    p: float
    q: float

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"ambient dimension must be 2 or 3, got {self.n}")

    @property
    def guaranteed(self) -> bool:
        """Whether (p, q) lies in the regime with a convergence guarantee."""
        return self.p > self.q > 0


@dataclass(frozen=True)
class ResidualField:
    grid: object
    values: np.ndarray
    kind: str            # "plain" or "log"
    sup: float
    l2: float

    @classmethod
    def wrap(cls, grid, values, kind):
        sup = float(np.max(np.abs(values)))
        l2 = float(np.sqrt(np.dot(values ** 2, grid.weights)))
        return cls(grid, values, kind, sup, l2)


def lhs_values(h: SupportFn, params: ProblemParams) -> np.ndarray:
    """Left-hand side h^{1-p} rho^{q-n} det b, node-wise."""
    rho2 = h.grad_sq + h.values ** 2
    return h.values ** (1.0 - params.p) * rho2 ** (0.5 * (params.q - params.n)) * h.det_b


def residual(h: SupportFn, f: ScalarField, params: ProblemParams) -> ResidualField:
    """Plain residual R = LHS(h) - f (defined even where det b <= 0)."""
    if np.any(f.values < 0):
        raise ValueError("density must be nonnegative")
    return ResidualField.wrap(h.grid, lhs_values(h, params) - f.values, "plain")


def log_residual(h: SupportFn, f: ScalarField, params: ProblemParams) -> ResidualField:
    """Log residual G; requires f > 0 and det b > 0 everywhere."""
    if np.any(f.values <= 0):
        raise ValueError("log residual requires a strictly positive density")
    if np.any(h.det_b <= 0):
        bad = int(np.argmin(h.det_b))
        raise ValueError(
            f"det b <= 0 at node {bad} (min {h.det_b.min():.3e}): convexity lost")
    rho2 = h.grad_sq + h.values ** 2
    g = (np.log(h.det_b) - (params.p - 1.0) * np.log(h.values)
         - 0.5 * (params.n - params.q) * np.log(rho2) - np.log(f.values))
    return ResidualField.wrap(h.grid, g, "log")


class LogLinearization:
    """Frechet derivative of the log residual at h, as a sparse operator.

    L[d] = tr(b^{-1}(hess d + d I)) - (p-1) d / h
           - (n-q) (<grad h, grad d> + h d) / (|grad h|^2 + h^2)
    """

    def __init__(self, h: SupportFn, params: ProblemParams):
        if np.any(h.det_b <= 0):
            raise ValueError("linearization requires positive definite b")
        grid = h.grid
        n, p, q = params.n, params.p, params.q
        rho2 = h.grad_sq + h.values ** 2
        if grid.dim == 2:
            binv_w = (1.0 / h.b_pack[:, 0])[:, None]
            tr_binv = binv_w[:, 0]
        else:
            b11, b12, b22 = h.b_pack.T
            inv11 = b22 / h.det_b
            inv12 = -b12 / h.det_b
            inv22 = b11 / h.det_b
            # off-diagonal doubled: tr(B^{-1} M) with symmetric packed M
            binv_w = np.column_stack([inv11, 2.0 * inv12, inv22])
            tr_binv = inv11 + inv22
        grad_mult = -(n - q) / rho2[:, None] * h.grad_frame
        diag = tr_binv - (p - 1.0) / h.values - (n - q) * h.values / rho2
        data = weighted_stencil_rows(
            grid.stencil_ptr, grid.stencil_idx, grid.center_slot,
            grid.grad_coef, grid.hess_coef,
            np.ascontiguousarray(binv_w), np.ascontiguousarray(grad_mult),
            np.ascontiguousarray(diag))
        self.grid = grid
        self.matrix = csr_matrix((data, grid.stencil_idx.copy(),
                                  grid.stencil_ptr.copy()),
                                 shape=(grid.num_nodes, grid.num_nodes))

    def apply(self, delta: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(delta, dtype=float)

    def __call__(self, delta: ScalarField) -> ScalarField:
        return ScalarField(self.grid, self.apply(delta.values))


def linearize(h: SupportFn, params: ProblemParams) -> LogLinearization:
    return LogLinearization(h, params)
