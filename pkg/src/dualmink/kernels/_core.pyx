# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see kernels/__init__ for contracts)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEFAULT_MIN_DOT = 1e-9


def apply_stencil_ops(cnp.int64_t[::1] ptr, cnp.int64_t[::1] idx,
                      double[:, ::1] grad_coef, double[:, ::1] hess_coef,
                      double[::1] values):
    cdef Py_ssize_t n = ptr.shape[0] - 1
    cdef Py_ssize_t dg = grad_coef.shape[0]
    cdef Py_ssize_t dh = hess_coef.shape[0]
    grad_np = np.zeros((n, dg))
    hess_np = np.zeros((n, dh))
    cdef double[:, ::1] grad = grad_np
    cdef double[:, ::1] hess = hess_np
    cdef Py_ssize_t i, k, a
    cdef double v
    # difference form: the functionals annihilate constants, and summing
    # coef*(v - v_center) avoids cancellation of large terms
    for i in range(n):
        for k in range(ptr[i], ptr[i + 1]):
            v = values[idx[k]] - values[i]
            for a in range(dg):
                grad[i, a] += grad_coef[a, k] * v
            for a in range(dh):
                hess[i, a] += hess_coef[a, k] * v
    return grad_np, hess_np


def weighted_stencil_rows(cnp.int64_t[::1] ptr, cnp.int64_t[::1] idx,
                          cnp.int64_t[::1] center_slot,
                          double[:, ::1] grad_coef, double[:, ::1] hess_coef,
                          double[:, ::1] hess_mult, double[:, ::1] grad_mult,
                          double[::1] diag_add):
    cdef Py_ssize_t n = ptr.shape[0] - 1
    cdef Py_ssize_t dg = grad_coef.shape[0]
    cdef Py_ssize_t dh = hess_coef.shape[0]
    data_np = np.zeros(idx.shape[0])
    cdef double[::1] data = data_np
    cdef Py_ssize_t i, k, a
    cdef double acc
    for i in range(n):
        for k in range(ptr[i], ptr[i + 1]):
            acc = 0.0
            for a in range(dh):
                acc += hess_mult[i, a] * hess_coef[a, k]
            for a in range(dg):
                acc += grad_mult[i, a] * grad_coef[a, k]
            data[k] = acc
        data[center_slot[i]] += diag_add[i]
    return data_np


def radial_min(double[:, ::1] nodes, double[::1] h, double[:, ::1] dirs,
               double min_dot=DEFAULT_MIN_DOT, chunk=None):
    cdef Py_ssize_t n = nodes.shape[0]
    cdef Py_ssize_t m = dirs.shape[0]
    cdef Py_ssize_t dim = nodes.shape[1]
    rho_np = np.empty(m)
    arg_np = np.empty(m, dtype=np.int64)
    cdef double[::1] rho = rho_np
    cdef cnp.int64_t[::1] arg = arg_np
    cdef Py_ssize_t i, j, d
    cdef double dot, q, best
    cdef Py_ssize_t besti
    for j in range(m):
        best = np.inf
        besti = -1
        for i in range(n):
            dot = 0.0
            for d in range(dim):
                dot += nodes[i, d] * dirs[j, d]
            if dot > min_dot:
                q = h[i] / dot
                if q < best:
                    best = q
                    besti = i
        rho[j] = best
        arg[j] = besti
    return rho_np, arg_np
