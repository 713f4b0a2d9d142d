# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Jacobi kernels.

Same call signatures and results as ``_pykernels``; inputs are assumed to be
validated float64 arrays (the wrappers in ``numerics`` do that).
"""

import numpy as np

from libc.math cimport fabs, sqrt


def jacobi_eigh(a_in, double tol, int max_sweeps):
    """Cyclic Jacobi on a symmetric matrix. Returns (w, V, sweeps), unsorted."""
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef double off, fro, apq, theta, t, c, s, akp, akq
    cdef int sweep = 0

    fro = 0.0
    for p in range(n):
        for q in range(n):
            fro += a[p, q] * a[p, q]
    fro = sqrt(fro)

    while sweep < max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if sqrt(2.0 * off) <= tol * fro:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                for k in range(n):
                    akp = v[k, p]
                    akq = v[k, q]
                    v[k, p] = c * akp - s * akq
                    v[k, q] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0

    w = np.empty(n, dtype=np.float64)
    for p in range(n):
        w[p] = a[p, p]
    return w, v_arr, sweep


def jacobi_svd(a_in, double tol, int max_sweeps):
    """One-sided (Hestenes) Jacobi SVD of an m x n matrix with m >= n.

    Returns (U, s, V, sweeps) with A = U diag(s) V^T, unsorted; columns of U
    belonging to zero singular values are zero.
    """
    cdef double[:, ::1] u = np.array(a_in, dtype=np.float64, order="C")
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef double alpha, beta, gamma, zeta, t, c, s, x, y
    cdef int sweep = 0
    cdef bint rotated = True

    while rotated and sweep < max_sweeps:
        rotated = False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(m):
                    alpha += u[k, p] * u[k, p]
                    beta += u[k, q] * u[k, q]
                    gamma += u[k, p] * u[k, q]
                if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for k in range(m):
                    x = u[k, p]
                    y = u[k, q]
                    u[k, p] = c * x - s * y
                    u[k, q] = s * x + c * y
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * y
                    v[k, q] = s * x + c * y

    s_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] sv = s_arr
    for p in range(n):
        alpha = 0.0
        for k in range(m):
            alpha += u[k, p] * u[k, p]
        alpha = sqrt(alpha)
        sv[p] = alpha
        if alpha > 0.0:
            for k in range(m):
                u[k, p] = u[k, p] / alpha
    return np.asarray(u), s_arr, v_arr, sweep
