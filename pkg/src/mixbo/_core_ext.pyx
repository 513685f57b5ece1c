# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel hot loops; same contract as ``mixbo._core_py``."""
import numpy as np
from libc.math cimport exp, sqrt, fabs

cdef double SQRT5 = sqrt(5.0)


def dim_kernel_stack(R, ls, base, bint need_dlogl=True, bint need_ddelta=False):
    cdef double[:, :, ::1] r = np.ascontiguousarray(R, dtype=np.float64)
    cdef double[:, ::1] l = np.ascontiguousarray(np.atleast_2d(ls), dtype=np.float64)
    cdef Py_ssize_t B = l.shape[0], D = r.shape[0], n1 = r.shape[1], n2 = r.shape[2]
    cdef int matern
    if base == "matern52":
        matern = 1
    elif base == "rbf":
        matern = 0
    else:
        raise ValueError(f"unknown base kernel {base!r}")
    k_arr = np.empty((B, D, n1, n2))
    cdef double[:, :, :, ::1] k = k_arr
    dlogl_arr = np.empty((B, D, n1, n2)) if need_dlogl else None
    ddelta_arr = np.empty((B, D, n1, n2)) if need_ddelta else None
    cdef double[:, :, :, ::1] dl
    cdef double[:, :, :, ::1] dd
    if need_dlogl:
        dl = dlogl_arr
    if need_ddelta:
        dd = ddelta_arr
    cdef Py_ssize_t b, d, i, j
    cdef double li, inv_l2, delta, u, e, g, s, kv
    with nogil:
        for b in range(B):
            for d in range(D):
                li = l[b, d]
                inv_l2 = 1.0 / (li * li)
                for i in range(n1):
                    for j in range(n2):
                        delta = r[d, i, j]
                        if matern:
                            u = SQRT5 * fabs(delta) / li
                            e = exp(-u)
                            k[b, d, i, j] = (1.0 + u + u * u / 3.0) * e
                            g = (1.0 + u) * e
                            if need_dlogl:
                                dl[b, d, i, j] = (u * u / 3.0) * g
                            if need_ddelta:
                                dd[b, d, i, j] = -(5.0 / 3.0) * delta * inv_l2 * g
                        else:
                            s = delta * delta * inv_l2
                            kv = exp(-0.5 * s)
                            k[b, d, i, j] = kv
                            if need_dlogl:
                                dl[b, d, i, j] = s * kv
                            if need_ddelta:
                                dd[b, d, i, j] = -delta * inv_l2 * kv
    return k_arr, dlogl_arr, ddelta_arr


def joint_ard(R, ls, base, bint need_dlogl=True, bint need_ddelta=False):
    cdef double[:, :, ::1] r = np.ascontiguousarray(R, dtype=np.float64)
    cdef double[:, ::1] l = np.ascontiguousarray(np.atleast_2d(ls), dtype=np.float64)
    cdef Py_ssize_t B = l.shape[0], D = r.shape[0], n1 = r.shape[1], n2 = r.shape[2]
    cdef int matern
    if base == "matern52":
        matern = 1
    elif base == "rbf":
        matern = 0
    else:
        raise ValueError(f"unknown base kernel {base!r}")
    k_arr = np.empty((B, n1, n2))
    cdef double[:, :, ::1] k = k_arr
    dlogl_arr = np.empty((B, D, n1, n2)) if need_dlogl else None
    ddelta_arr = np.empty((B, D, n1, n2)) if need_ddelta else None
    cdef double[:, :, :, ::1] dl
    cdef double[:, :, :, ::1] dd
    if need_dlogl:
        dl = dlogl_arr
    if need_ddelta:
        dd = ddelta_arr
    cdef double[::1] inv_l2 = np.empty(D)
    cdef Py_ssize_t b, d, i, j
    cdef double r2, delta, u, e, g
    with nogil:
        for b in range(B):
            for d in range(D):
                inv_l2[d] = 1.0 / (l[b, d] * l[b, d])
            for i in range(n1):
                for j in range(n2):
                    r2 = 0.0
                    for d in range(D):
                        delta = r[d, i, j]
                        r2 = r2 + delta * delta * inv_l2[d]
                    if matern:
                        u = SQRT5 * sqrt(r2)
                        e = exp(-u)
                        k[b, i, j] = (1.0 + u + u * u / 3.0) * e
                        g = (5.0 / 3.0) * (1.0 + u) * e
                    else:
                        g = exp(-0.5 * r2)
                        k[b, i, j] = g
                    if need_dlogl or need_ddelta:
                        for d in range(D):
                            delta = r[d, i, j]
                            if need_dlogl:
                                dl[b, d, i, j] = g * delta * delta * inv_l2[d]
                            if need_ddelta:
                                dd[b, d, i, j] = -g * delta * inv_l2[d]
    return k_arr, dlogl_arr, ddelta_arr
