"""Pure-Python (numpy) versions of the Jacobi kernels in ``_kernels.pyx``."""

import math

import numpy as np


def jacobi_eigh(a_in, tol, max_sweeps):
    a = np.array(a_in, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    fro = math.sqrt(float(np.sum(a * a)))
    iu = np.triu_indices(n, 1)
    sweep = 0
    while sweep < max_sweeps:
        if math.sqrt(2.0 * float(np.sum(a[iu] ** 2))) <= tol * fro:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - s * a[q, :]
                a[q, :] = s * row_p + c * a[q, :]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
                a[p, q] = a[q, p] = 0.0
    return np.diag(a).copy(), v, sweep


def jacobi_svd(a_in, tol, max_sweeps):
    u = np.array(a_in, dtype=np.float64)
    n = u.shape[1]
    v = np.eye(n)
    sweep = 0
    rotated = True
    while rotated and sweep < max_sweeps:
        rotated = False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                up = u[:, p]
                uq = u[:, q]
                alpha = float(up @ up)
                beta = float(uq @ uq)
                gamma = float(up @ uq)
                if gamma == 0.0 or abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + math.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                up = up.copy()
                u[:, p] = c * up - s * uq
                u[:, q] = s * up + c * uq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    s_arr = np.sqrt(np.sum(u * u, axis=0))
    nz = s_arr > 0.0
    u[:, nz] /= s_arr[nz]
    return u, s_arr, v, sweep
