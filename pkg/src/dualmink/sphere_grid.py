"""Discretizations of the unit circle and unit sphere.

A Grid carries nodes, dual-cell quadrature weights, an exact antipodal
pairing and per-node least-squares stencils from which second-order
covariant derivatives (gradient, Hessian, Laplacian in geodesic normal
coordinates) are read off.  Grids are immutable after construction; every
operation here is a pure function of its inputs.

S^1 uses equispaced angles, S^2 an icosahedral geodesic subdivision
(pole-free and quasi-uniform, with the two poles +-e3 among the nodes).
Quadrature weights are spherical Voronoi cell areas, symmetrized over
antipodal pairs and rescaled to the exact total measure.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial import ConvexHull, SphericalVoronoi

from .errors import DegenerateStencilError
from .kernels import apply_stencil_ops

S1_MIN_NODES = 16
S2_MAX_LEVEL = 6

_FIT_DEGREE = {2: 3, 3: 3}  # cubic fits: O(h^2) Hessians on irregular stencils
_STENCIL_RINGS = {2: 2, 3: 2}


@dataclass(frozen=True)
class Grid:
    """Immutable spherical grid with quadrature and derivative stencils.

    dim is the ambient dimension n (nodes live on S^{n-1}), resolution the
    node count for n=2 and the subdivision level for n=3.  ``frames`` holds
    a deterministic orthonormal tangent frame per node; gradient components
    and Hessian entries produced by the stencil operators refer to it.
    ``hess_coef`` packs the distinct Hessian entries (11,) for n=2 and
    (11, 12, 22) for n=3.
    """

    dim: int
    resolution: int
    nodes: np.ndarray          # (N, dim) unit vectors
    weights: np.ndarray        # (N,) positive, sum = |S^{n-1}|
    antipode: np.ndarray       # (N,) involution with nodes[a[i]] == -nodes[i]
    frames: np.ndarray         # (N, dim-1, dim)
    stencil_ptr: np.ndarray    # (N+1,) int64
    stencil_idx: np.ndarray    # (nnz,) int64
    center_slot: np.ndarray    # (N,) position of node i inside its own stencil
    grad_coef: np.ndarray      # (dim-1, nnz)
    hess_coef: np.ndarray      # (npack, nnz)
    faces: np.ndarray | None   # (T, 3) triangles for n=3, None for n=2

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def total_measure(self) -> float:
        return 2.0 * np.pi if self.dim == 2 else 4.0 * np.pi

    def stencil(self, i: int) -> np.ndarray:
        return self.stencil_idx[self.stencil_ptr[i]:self.stencil_ptr[i + 1]]

    def spec_hash(self) -> str:
        """Hash of the grid family and node coordinates (textual, 17 digits)."""
        kind = "equiangular-s1" if self.dim == 2 else "icosahedral-s2"
        lines = [f"sphere-grid|n={self.dim}|kind={kind}|resolution={self.resolution}"]
        for row in self.nodes:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()


@dataclass(frozen=True)
class ScalarField:
    """Real values attached to the nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.shape != (self.grid.num_nodes,):
            raise ValueError(
                f"field has {vals.shape} values for {self.grid.num_nodes} nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray([fn(x) for x in grid.nodes], dtype=float))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.num_nodes, float(c)))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + float(other))

    __radd__ = __add__

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# grid construction


def build_grid(n: int, resolution: int) -> Grid:
    """Build an S^1 (n=2) or S^2 (n=3) grid.

    For n=2 ``resolution`` is the number of equispaced angles (even, >= 16);
    for n=3 it is the icosahedral subdivision level (0..6, giving
    10*4^level + 2 nodes).
    """
    if n == 2:
        return _build_circle(resolution)
    if n == 3:
        return _build_icosphere(resolution)
    raise ValueError(f"ambient dimension must be 2 or 3, got {n}")


def _build_circle(count: int) -> Grid:
    if count < S1_MIN_NODES:
        raise ValueError(f"S^1 resolution out of range: need >= {S1_MIN_NODES} nodes, got {count}")
    if count % 2 != 0:
        raise ValueError(f"S^1 node count must be even for antipodal pairing, got {count}")
    half = count // 2
    theta = 2.0 * np.pi * np.arange(half) / count
    top = np.column_stack([np.cos(theta), np.sin(theta)])
    nodes = np.vstack([top, -top])  # second half is the exact negation
    antipode = np.concatenate([np.arange(half) + half, np.arange(half)]).astype(np.int64)
    weights = np.full(count, 2.0 * np.pi / count)

    # tangent frame t = (-sin, cos); consistent with the orientation of theta
    frames = np.empty((count, 1, 2))
    frames[:, 0, 0] = -nodes[:, 1]
    frames[:, 0, 1] = nodes[:, 0]

    # stencil: i-2 .. i+2 in angular order, with wrap-around
    offsets = np.array([-2, -1, 0, 1, 2])
    ang = np.mod(np.arctan2(nodes[:, 1], nodes[:, 0]), 2.0 * np.pi)
    by_rank = np.argsort(ang)
    rank = np.argsort(by_rank)

    delta = 2.0 * np.pi / count
    stencil_idx = np.empty(count * 5, dtype=np.int64)
    xi = np.empty((count * 5, 1))
    for i in range(count):
        r = rank[i]
        neigh = by_rank[(r + offsets) % count]
        stencil_idx[5 * i:5 * i + 5] = neigh
        xi[5 * i:5 * i + 5, 0] = offsets * delta
    stencil_ptr = np.arange(count + 1, dtype=np.int64) * 5
    center_slot = stencil_ptr[:-1] + 2

    grad_coef, hess_coef = _fit_stencil_coefficients(
        xi, stencil_ptr, dim=1, degree=_FIT_DEGREE[2], center_slots=center_slot)
    return Grid(2, count, nodes, weights, antipode, frames,
                stencil_ptr, stencil_idx, center_slot, grad_coef, hess_coef, None)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    """Pole-aligned icosahedron: vertices at +-e3 and two pentagon rings."""
    c, s = 1.0 / np.sqrt(5.0), 2.0 / np.sqrt(5.0)
    alpha = 2.0 * np.pi * np.arange(5) / 5.0
    upper = np.column_stack([s * np.cos(alpha), s * np.sin(alpha), np.full(5, c)])
    verts = np.vstack([[0.0, 0.0, 1.0], upper, -np.array([0.0, 0.0, 1.0]), -upper])
    hull = ConvexHull(verts)
    faces = hull.simplices.astype(np.int64)
    # orient all faces outward
    for f in faces:
        if np.linalg.det(verts[f]) < 0:
            f[0], f[1] = f[1], f[0]
    return verts, faces


def _subdivide(verts: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One 4-to-1 midpoint refinement with projection back to the sphere."""
    verts = list(verts)
    midpoint: dict[tuple[int, int], int] = {}

    def mid(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        k = midpoint.get(key)
        if k is None:
            m = verts[a] + verts[b]
            m = m / np.linalg.norm(m)
            k = len(verts)
            verts.append(m)
            midpoint[key] = k
        return k

    out = np.empty((4 * len(faces), 3), dtype=np.int64)
    for t, (a, b, c) in enumerate(faces):
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out[4 * t:4 * t + 4] = [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return np.asarray(verts), out


def _canonical_antipodes(nodes: np.ndarray) -> np.ndarray:
    """Pair nodes with their antipodes and make the pairing numerically exact.

    The icosahedral family is centrally symmetric, so -x is always a node up
    to rounding; the second member of each pair is overwritten by the exact
    negation of the first.
    """
    n = nodes.shape[0]
    antipode = np.full(n, -1, dtype=np.int64)
    key = {tuple(np.round(x, 9)): i for i, x in enumerate(nodes)}
    for i in range(n):
        if antipode[i] >= 0:
            continue
        j = key.get(tuple(np.round(-nodes[i], 9)))
        if j is None or j == i:
            raise RuntimeError("grid is not antipodally closed")
        antipode[i], antipode[j] = j, i
        nodes[j] = -nodes[i]
    return antipode


def _build_icosphere(level: int) -> Grid:
    if not (0 <= level <= S2_MAX_LEVEL):
        raise ValueError(f"S^2 resolution out of range: subdivision level must be in 0..{S2_MAX_LEVEL}, got {level}")
    verts, faces = _icosahedron()
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    nodes = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    antipode = _canonical_antipodes(nodes)

    sv = SphericalVoronoi(nodes, radius=1.0)
    sv.sort_vertices_of_regions()
    weights = sv.calculate_areas()
    weights = 0.5 * (weights + weights[antipode])       # even weights, exact
    weights *= 4.0 * np.pi / weights.sum()              # pin total measure

    frames = _tangent_frames(nodes)
    degree = 2 if level == 0 else _FIT_DEGREE[3]  # 12 nodes cannot carry a cubic
    ptr, idx, xi = _stencils_s2(nodes, faces, frames, rings=_STENCIL_RINGS[3],
                                degree=degree)
    grad_coef, hess_coef = _fit_stencil_coefficients(xi, ptr, dim=2, degree=degree)
    center_slot = ptr[:-1].copy()  # center stored first in every stencil
    return Grid(3, level, nodes, weights, antipode, frames,
                ptr, idx, center_slot, grad_coef, hess_coef, faces)


def _tangent_frames(nodes: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal frame (t1, t2) per node."""
    n = nodes.shape[0]
    a = np.tile(np.array([0.0, 0.0, 1.0]), (n, 1))
    flip = np.abs(nodes[:, 2]) > 0.9
    a[flip] = np.array([1.0, 0.0, 0.0])
    t1 = a - (np.sum(a * nodes, axis=1))[:, None] * nodes
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(nodes, t1)
    return np.stack([t1, t2], axis=1)


def _stencils_s2(nodes, faces, frames, rings: int, degree: int):
    """k-ring stencils (center first) and geodesic normal coordinates."""
    n = nodes.shape[0]
    i0 = np.concatenate([faces[:, 0], faces[:, 1], faces[:, 2]])
    i1 = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
    rows = np.concatenate([i0, i1])
    cols = np.concatenate([i1, i0])
    adj = csr_matrix((np.ones(rows.shape[0], dtype=np.int8), (rows, cols)),
                     shape=(n, n))
    adj.data[:] = 1
    reach = adj.copy()
    ring = adj.copy()
    for _ in range(rings - 1):
        ring = ring @ adj
        reach = reach + ring
    reach = reach.tolil()
    reach.setdiag(1)
    reach = reach.tocsr()

    ncoef = (degree + 1) * (degree + 2) // 2
    ptr = [0]
    idx_list = []
    for i in range(n):
        neigh = reach.indices[reach.indptr[i]:reach.indptr[i + 1]]
        grown = neigh[neigh != i]
        # grow by one more ring while the quota for the fit is not met
        while grown.size + 1 < ncoef + 3:
            bigger = np.unique(np.concatenate([grown, adj[grown].indices]))
            bigger = bigger[bigger != i]
            if bigger.size == grown.size:
                break  # saturated (tiny grid)
            grown = bigger
        # keep normal coordinates meaningful: drop the far hemisphere
        dots = nodes[grown] @ nodes[i]
        grown = grown[dots > -0.5]
        if grown.size + 1 < ncoef:
            raise DegenerateStencilError(i, "not enough usable stencil nodes")
        stencil = np.concatenate([[i], np.sort(grown)])
        idx_list.append(stencil)
        ptr.append(ptr[-1] + stencil.size)
    ptr = np.asarray(ptr, dtype=np.int64)
    idx = np.concatenate(idx_list).astype(np.int64)

    # geodesic normal coordinates of every stencil point w.r.t. its center
    centers = np.repeat(np.arange(n), np.diff(ptr))
    x = nodes[centers]
    y = nodes[idx]
    dot = np.clip(np.sum(x * y, axis=1), -1.0, 1.0)
    theta = np.arccos(dot)
    w = y - dot[:, None] * x
    wn = np.linalg.norm(w, axis=1)
    safe = wn > 0
    direc = np.zeros_like(w)
    direc[safe] = w[safe] / wn[safe, None]
    t1 = frames[centers, 0]
    t2 = frames[centers, 1]
    xi = np.column_stack([theta * np.sum(direc * t1, axis=1),
                          theta * np.sum(direc * t2, axis=1)])
    return ptr, idx, xi


def _monomials(dim: int, degree: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(d,) for d in range(degree + 1)]
    out = []
    for d in range(degree + 1):
        for i in range(d, -1, -1):
            out.append((i, d - i))
    return out


def _fit_stencil_coefficients(xi, ptr, dim: int, degree: int, center_slots=None):
    """Weighted least-squares Taylor fits, one per stencil.

    Returns rows of the fit pseudo-inverse that evaluate first and second
    covariant derivatives at the stencil center.  Basis monomials carry the
    1/alpha! Taylor normalization so fitted coefficients are the derivatives
    themselves.  Stencils whose normal matrix is numerically singular
    (collinear neighbors) raise DegenerateStencilError naming the node.
    """
    if center_slots is None:
        center_slots = ptr[:-1]
    n = ptr.size - 1
    sizes = np.diff(ptr)
    smax = int(sizes.max())
    mono = _monomials(dim, degree)
    ncoef = len(mono)
    fact = np.array([math.prod(math.factorial(k) for k in m) for m in mono], dtype=float)

    # padded stencil tensor: pad entries get zero weight and zero offset
    pad_xi = np.zeros((n, smax, dim))
    pad_w = np.zeros((n, smax))
    for i in range(n):
        s = sizes[i]
        pad_xi[i, :s] = xi[ptr[i]:ptr[i + 1]]
    r = np.linalg.norm(pad_xi, axis=2)
    rmax = r.max(axis=1)
    if np.any(rmax <= 0):
        bad = int(np.argmin(rmax))
        raise DegenerateStencilError(bad, "stencil has zero radius")
    sc = pad_xi / rmax[:, None, None]
    rs = np.linalg.norm(sc, axis=2)
    for i in range(n):
        pad_w[i, :sizes[i]] = 1.0
    pad_w *= 1.0 / (1.0 + 4.0 * rs ** 2) ** 2

    A = np.ones((n, smax, ncoef))
    for k, m in enumerate(mono):
        col = np.ones((n, smax))
        for d in range(dim):
            col *= sc[:, :, d] ** m[d]
        A[:, :, k] = col / fact[k]

    AtW = A.transpose(0, 2, 1) * pad_w[:, None, :]
    M = AtW @ A
    ev = np.linalg.eigvalsh(M)
    cond = ev[:, -1] / np.maximum(ev[:, 0], 1e-300)
    bad = np.where((ev[:, 0] <= 0) | (cond > 1e12))[0]
    if bad.size:
        raise DegenerateStencilError(
            int(bad[0]), f"least-squares stencil is numerically singular (cond~{cond[bad[0]]:.2e})")
    P = np.linalg.solve(M, AtW)  # (n, ncoef, smax)

    # un-scale: derivative of order |m| picks up rmax^{-|m|}
    orders = np.array([sum(m) for m in mono])
    if dim == 1:
        grad_rows = [mono.index((1,))]
        hess_rows = [mono.index((2,))]
    else:
        grad_rows = [mono.index((1, 0)), mono.index((0, 1))]
        hess_rows = [mono.index((2, 0)), mono.index((1, 1)), mono.index((0, 2))]

    nnz = int(ptr[-1])
    grad_coef = np.zeros((len(grad_rows), nnz))
    hess_coef = np.zeros((len(hess_rows), nnz))
    for i in range(n):
        s = sizes[i]
        sl = slice(ptr[i], ptr[i + 1])
        for a, row in enumerate(grad_rows):
            grad_coef[a, sl] = P[i, row, :s] / rmax[i] ** orders[row]
        for a, row in enumerate(hess_rows):
            hess_coef[a, sl] = P[i, row, :s] / rmax[i] ** orders[row]
    # pin exact zero row sums (exact annihilation of constants); the kernels
    # evaluate in difference form, and this keeps the assembled sparse
    # operator identical to that evaluation
    for coef in (grad_coef, hess_coef):
        for a in range(coef.shape[0]):
            for i in range(n):
                sl = slice(ptr[i], ptr[i + 1])
                c = int(center_slots[i])
                coef[a, c] -= coef[a, sl].sum()
    return np.ascontiguousarray(grad_coef), np.ascontiguousarray(hess_coef)


# ---------------------------------------------------------------------------
# field operations


def integrate(field: ScalarField) -> float:
    """Quadrature integral over the sphere; exact for constants."""
    return float(np.dot(field.values, field.grid.weights))


def gradient_frame(field: ScalarField) -> np.ndarray:
    """Covariant gradient components (N, dim-1) in the node frames."""
    g, _ = apply_stencil_ops(field.grid.stencil_ptr, field.grid.stencil_idx,
                             field.grid.grad_coef, field.grid.hess_coef,
                             field.values)
    return g


def gradient(field: ScalarField) -> np.ndarray:
    """Covariant gradient as ambient tangent vectors, shape (N, dim)."""
    g = gradient_frame(field)
    return np.einsum("na,nad->nd", g, field.grid.frames)


def hessian(field: ScalarField) -> np.ndarray:
    """Covariant Hessian, shape (N, dim-1, dim-1), in the node frames."""
    _, hp = apply_stencil_ops(field.grid.stencil_ptr, field.grid.stencil_idx,
                              field.grid.grad_coef, field.grid.hess_coef,
                              field.values)
    n = field.grid.num_nodes
    if field.grid.dim == 2:
        return hp.reshape(n, 1, 1)
    H = np.empty((n, 2, 2))
    H[:, 0, 0] = hp[:, 0]
    H[:, 0, 1] = H[:, 1, 0] = hp[:, 1]
    H[:, 1, 1] = hp[:, 2]
    return H


def laplacian(field: ScalarField) -> ScalarField:
    """Laplace-Beltrami operator, computed as the trace of the Hessian."""
    _, hp = apply_stencil_ops(field.grid.stencil_ptr, field.grid.stencil_idx,
                              field.grid.grad_coef, field.grid.hess_coef,
                              field.values)
    if field.grid.dim == 2:
        return ScalarField(field.grid, hp[:, 0].copy())
    return ScalarField(field.grid, hp[:, 0] + hp[:, 2])


def grad_hess_packed(grid: Grid, values: np.ndarray):
    """Raw (grad_frame, hess_pack) arrays for solver-internal use."""
    return apply_stencil_ops(grid.stencil_ptr, grid.stencil_idx,
                             grid.grad_coef, grid.hess_coef, values)


def symmetrize_even(field: ScalarField) -> ScalarField:
    """Project onto even functions: average with the antipodal values."""
    v = field.values
    return ScalarField(field.grid, 0.5 * (v + v[field.grid.antipode]))


def is_even(field: ScalarField, tol: float = 1e-12) -> bool:
    v = field.values
    return bool(np.max(np.abs(v - v[field.grid.antipode])) <= tol)
