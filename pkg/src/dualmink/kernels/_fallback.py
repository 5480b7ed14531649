"""Vectorized numpy implementations of the hot kernels."""

import numpy as np

# directions closer than this to a node's horizon are excluded from the
# radial minimization (the support quotient blows up there)
DEFAULT_MIN_DOT = 1e-9


def apply_stencil_ops(ptr, idx, grad_coef, hess_coef, values):
    """Evaluate the stencil derivative functionals for every node.

    Returns (grad_frame (N, dg), hess_pack (N, dh)) where dg = dim-1 and
    dh = 1 (n=2) or 3 (n=3, packed 11/12/22).  Sums run over differences
    from the center value: derivative functionals annihilate constants, and
    the difference form avoids cancellation of large coef*value terms where
    the result is small (critical near the degenerate limit).
    """
    rows = np.repeat(np.arange(ptr.size - 1), np.diff(ptr))
    dv = values[idx] - values[rows]
    starts = ptr[:-1]
    grad = np.empty((ptr.size - 1, grad_coef.shape[0]))
    hess = np.empty((ptr.size - 1, hess_coef.shape[0]))
    for a in range(grad_coef.shape[0]):
        grad[:, a] = np.add.reduceat(grad_coef[a] * dv, starts)
    for a in range(hess_coef.shape[0]):
        hess[:, a] = np.add.reduceat(hess_coef[a] * dv, starts)
    return grad, hess


def weighted_stencil_rows(ptr, idx, center_slot, grad_coef, hess_coef,
                          hess_mult, grad_mult, diag_add):
    """CSR data for rows  sum_m hess_mult[i,m]*D2_m + sum_a grad_mult[i,a]*D1_a
    plus diag_add[i] on the diagonal.  Shares (ptr, idx) with the stencils."""
    rows = np.repeat(np.arange(ptr.size - 1), np.diff(ptr))
    data = np.zeros(idx.shape[0])
    for m in range(hess_coef.shape[0]):
        data += hess_mult[rows, m] * hess_coef[m]
    for a in range(grad_coef.shape[0]):
        data += grad_mult[rows, a] * grad_coef[a]
    data[center_slot] += diag_add
    return data


def radial_min(nodes, h, dirs, min_dot=DEFAULT_MIN_DOT, chunk=512):
    """Radial function of the body {y : <y, x_i> <= h_i for all i}.

    rho[j] = min over nodes with <x_i, u_j> > min_dot of h_i / <x_i, u_j>.
    Returns (rho, argmin node index).  Chunked to bound the N x M workspace.
    """
    m = dirs.shape[0]
    rho = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    for s in range(0, m, chunk):
        d = dirs[s:s + chunk]
        dots = nodes @ d.T                    # (N, c)
        quot = np.where(dots > min_dot, h[:, None] / np.where(dots > min_dot, dots, 1.0),
                        np.inf)
        a = np.argmin(quot, axis=0)
        rho[s:s + chunk] = quot[a, np.arange(d.shape[0])]
        arg[s:s + chunk] = a
    return rho, arg
