"""Support-function / radial-function duality and the body embedding.

A positive field h on the grid is read as the support function of the
convex body  M = {y : <y, x> <= h(x) for all sampled normals x}.  The
boundary point with outer normal x is  X(x) = grad h(x) + h(x) x, the
radial function is rho(u) = max{lambda > 0 : lambda u in M}, and the two
satisfy rho(u(x))^2 = |grad h(x)|^2 + h(x)^2 along u(x) = X(x)/|X(x)|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import radial_min
from .sphere_grid import Grid, ScalarField, grad_hess_packed, integrate

TOL_PSD = 1e-10


@dataclass(frozen=True)
class SupportFn:
    """Support function with cached derivatives and curvature data.

    ``b_pack`` holds the distinct entries of b = hess h + h I per node:
    (b,) for n=2 and (b11, b12, b22) for n=3.  ``rho`` is the pointwise
    sqrt(|grad h|^2 + h^2), i.e. the radial function sampled along the
    push-forward directions.
    """

    grid: Grid
    values: np.ndarray
    grad_frame: np.ndarray
    grad: np.ndarray      # ambient tangent vectors (N, n)
    hess_pack: np.ndarray
    b_pack: np.ndarray
    det_b: np.ndarray
    min_eig_b: np.ndarray
    grad_sq: np.ndarray
    rho: np.ndarray

    @classmethod
    def from_values(cls, grid: Grid, values) -> "SupportFn":
        vals = np.ascontiguousarray(np.asarray(values, dtype=float))
        if vals.shape != (grid.num_nodes,):
            raise ValueError("support function values do not match the grid")
        if not np.all(vals > 0):
            raise ValueError("support function must be positive at every node")
        gf, hp = grad_hess_packed(grid, vals)
        grad = np.einsum("na,nad->nd", gf, grid.frames)
        if grid.dim == 2:
            b = hp[:, 0] + vals
            b_pack = b[:, None]
            det_b = b.copy()
            min_eig = b.copy()
        else:
            b11 = hp[:, 0] + vals
            b12 = hp[:, 1]
            b22 = hp[:, 2] + vals
            b_pack = np.column_stack([b11, b12, b22])
            det_b = b11 * b22 - b12 ** 2
            half_tr = 0.5 * (b11 + b22)
            rad = np.sqrt(np.maximum((0.5 * (b11 - b22)) ** 2 + b12 ** 2, 0.0))
            min_eig = half_tr - rad
        grad_sq = np.sum(gf ** 2, axis=1)
        rho = np.sqrt(grad_sq + vals ** 2)
        return cls(grid, vals, gf, grad, np.ascontiguousarray(hp),
                   np.ascontiguousarray(b_pack), det_b, min_eig, grad_sq, rho)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "SupportFn":
        return cls.from_values(grid, np.full(grid.num_nodes, float(c)))

    @property
    def field(self) -> ScalarField:
        return ScalarField(self.grid, self.values)

    @property
    def trace_b(self) -> np.ndarray:
        """H = (n-1) h + laplacian h, the trace of b."""
        if self.grid.dim == 2:
            return self.b_pack[:, 0]
        return self.b_pack[:, 0] + self.b_pack[:, 2]

    @property
    def convexity_margin(self) -> float:
        return float(self.min_eig_b.min())

    def is_convex(self, tol_psd: float = TOL_PSD) -> bool:
        return self.convexity_margin >= -tol_psd


def embed(h: SupportFn) -> np.ndarray:
    """Boundary points X(x) = grad h(x) + h(x) x, shape (N, n)."""
    return h.grad + h.values[:, None] * h.grid.nodes


def radial_from_support(h: SupportFn, dirs, refine: bool = True):
    """Radial function along the unit direction(s) ``dirs``.

    The grid minimum of h(x)/<x,u> is first-order accurate; one local
    quadratic correction over the arg-min node's stencil (Newton step on
    the fitted quotient) restores second order.  Accepts a single
    direction or an (M, n) array and returns matching shape.
    """
    u = np.atleast_2d(np.asarray(dirs, dtype=float))
    single = np.asarray(dirs).ndim == 1
    grid = h.grid
    rho, arg = radial_min(grid.nodes, h.values, u)
    if np.any(~np.isfinite(rho)):
        raise RuntimeError("no grid node with positive alignment to a direction")
    if refine:
        rho = _refine_radial(h, u, rho, arg)
    return (float(rho[0]) if single else rho)


def _refine_radial(h: SupportFn, dirs, rho, arg):
    """Minimize the local quadratic model of phi(y) = h(y)/<y,u> at arg min."""
    grid = h.grid
    d = grid.dim - 1
    out = rho.copy()
    ptr, idx = grid.stencil_ptr, grid.stencil_idx
    for j in range(dirs.shape[0]):
        i = int(arg[j])
        sl = slice(ptr[i], ptr[i + 1])
        sten = idx[sl]
        dots = grid.nodes[sten] @ dirs[j]
        if np.any(dots <= 0):
            continue  # direction near the stencil horizon: keep the grid min
        phi = h.values[sten] / dots
        g = grid.grad_coef[:, sl] @ phi
        hp = grid.hess_coef[:, sl] @ phi
        if d == 1:
            hess = hp.reshape(1, 1)
        else:
            hess = np.array([[hp[0], hp[1]], [hp[1], hp[2]]])
        ev = np.linalg.eigvalsh(hess)
        if ev[0] <= 0:
            continue  # model not convex here: keep the grid min
        step = np.linalg.solve(hess, -g)
        r = np.linalg.norm(grid.nodes[sten[1:]] - grid.nodes[i], axis=1).max() \
            if sten.size > 1 else 0.0
        if np.linalg.norm(step) > r:
            continue  # model minimum outside the stencil: distrust it
        out[j] = phi[0] + g @ step + 0.5 * step @ hess @ step
    return out


def support_from_radial(rho_field: ScalarField, dirs):
    """Support function of the body with sampled radial values.

    h(x) = max over nodes u of rho(u) <u, x>; second-order roundtrip partner
    of radial_from_support for convex data.
    """
    if not np.all(rho_field.values > 0):
        raise ValueError("radial function must be positive")
    x = np.atleast_2d(np.asarray(dirs, dtype=float))
    single = np.asarray(dirs).ndim == 1
    vals = (rho_field.values[None, :] * (x @ rho_field.grid.nodes.T)).max(axis=1)
    return (float(vals[0]) if single else vals)


@dataclass(frozen=True)
class GeometryReport:
    """Duality identities evaluated through the independent radial route."""

    max_h: float
    max_rho: float
    max_gap: float
    grad_bound_ok: bool
    grad_bound_margin: float
    even_cone_ok: bool | None
    even_cone_margin: float | None
    argmax_node: int
    tol: float


def geometric_identity_report(h: SupportFn, tol: float = 1e-6,
                              check_even_cone: bool | None = None) -> GeometryReport:
    """Check max h = max rho, |grad h| <= rho, and the even cone bound.

    rho is recomputed by radial_from_support along every push-forward
    direction u(x) = X(x)/|X(x)|, so agreement with the cached
    sqrt(|grad h|^2 + h^2) is evidence of convex consistency rather than
    an algebraic identity.
    """
    X = embed(h)
    dirs = X / np.linalg.norm(X, axis=1, keepdims=True)
    rho_dual = radial_from_support(h, dirs)
    max_h = float(h.values.max())
    max_rho = float(rho_dual.max())
    grad_norm = np.sqrt(h.grad_sq)
    grad_margin = float((rho_dual + tol - grad_norm).min())
    even = check_even_cone
    if even is None:
        v = h.values
        even = bool(np.max(np.abs(v - v[h.grid.antipode])) <= 1e-9 * max_h)
    cone_ok = None
    cone_margin = None
    i0 = int(np.argmax(h.values))
    if even:
        cone = max_h * np.abs(h.grid.nodes @ h.grid.nodes[i0])
        cone_margin = float((h.values - cone).min())
        cone_ok = bool(cone_margin >= -tol)
    return GeometryReport(
        max_h=max_h, max_rho=max_rho, max_gap=abs(max_h - max_rho),
        grad_bound_ok=bool(grad_margin >= 0), grad_bound_margin=grad_margin,
        even_cone_ok=cone_ok, even_cone_margin=cone_margin,
        argmax_node=i0, tol=tol)


@dataclass(frozen=True)
class DualIntegralReport:
    lhs: float   # integral of h^p f
    rhs: float   # integral of rho^q
    rel_gap: float


def dual_integral_identity(h: SupportFn, f: ScalarField, params) -> DualIntegralReport:
    """Change-of-variables identity  int h^p f dx = int rho^q du.

    Meaningful when h solves the equation for f within solver tolerance;
    rho is sampled by radial_from_support on the quadrature grid.
    """
    lhs = integrate(ScalarField(h.grid, h.values ** params.p * f.values))
    rho = radial_from_support(h, h.grid.nodes)
    rhs = float(np.dot(rho ** params.q, h.grid.weights))
    rel_gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return DualIntegralReport(lhs=lhs, rhs=rhs, rel_gap=rel_gap)


def export_obj(h: SupportFn, path) -> None:
    """Write the embedded S^2 body as an ASCII OBJ mesh (9 digits)."""
    if h.grid.dim != 3 or h.grid.faces is None:
        raise ValueError("OBJ export requires an S^2 grid with faces")
    X = embed(h)
    with open(path, "w") as fh:
        fh.write("# dualmink body mesh\n")
        for v in X:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for a, b, c in h.grid.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
