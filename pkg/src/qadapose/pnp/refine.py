"""Gauss-Newton polish of a pose on the normalized reprojection error."""

import numpy as np

from ..numerics import lstsq, svd3
from ._common import check_correspondences, reprojection_rms

MAX_ITERS = 50
STEP_TOL = 1e-12
MAX_HALVINGS = 12
REL_DECREASE = 1e-10


def _skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def _exp_so3(w):
    th = float(np.linalg.norm(w))
    k = _skew(w)
    if th < 1e-8:
        return np.eye(3) + k + 0.5 * (k @ k)
    return np.eye(3) + np.sin(th) / th * k + (1.0 - np.cos(th)) / th**2 * (k @ k)


def _orthonormalize(r):
    u, _, v = svd3(r)
    out = u @ v.T
    if np.linalg.det(out) < 0:
        u[:, 2] = -u[:, 2]
        out = u @ v.T
    return out


def _residual_jacobian(r, t, world, image):
    rx = world @ r.T
    pc = rx + t
    x, y, z = pc.T
    res = np.column_stack([x / z - image[:, 0], y / z - image[:, 1]]).ravel()
    n = len(world)
    dproj = np.zeros((n, 2, 3))
    dproj[:, 0, 0] = 1.0 / z
    dproj[:, 0, 2] = -x / z**2
    dproj[:, 1, 1] = 1.0 / z
    dproj[:, 1, 2] = -y / z**2
    # d(exp(w) R X)/dw at w = 0 is -[R X]x
    drot = -np.array([_skew(p) for p in rx])
    jac = np.concatenate([dproj @ drot, dproj], axis=2).reshape(2 * n, 6)
    return res, jac


def _cost(r, t, world, image):
    rms = reprojection_rms(r, t, world, image)
    return rms * rms * len(world)


def refine_gauss_newton(initial, world, image, h_ap=1.0, max_iters=MAX_ITERS):
    """Polished copy of ``initial``; never worse than it.

    Rotation updates are left-multiplied axis-angle increments. A step is
    halved until the sum of squared residuals drops; the iteration stops when
    no step helps, the step or the relative decrease becomes negligible, or
    after ``max_iters`` steps. The cost trace is kept in ``diagnostics["cost_trace"]``.
    """
    world, image = check_correspondences(world, image)
    r = np.array(initial.rotation, dtype=float)
    t = np.array(initial.translation, dtype=float)
    cost = _cost(r, t, world, image)
    trace = [cost]
    if not np.isfinite(cost):
        return initial.with_(diagnostics={**initial.diagnostics, "cost_trace": trace})
    for _ in range(max_iters):
        res, jac = _residual_jacobian(r, t, world, image)
        step = -lstsq(jac, res)
        if np.linalg.norm(step) < STEP_TOL:
            break
        accepted = False
        for _ in range(MAX_HALVINGS):
            r_new = _orthonormalize(_exp_so3(step[:3]) @ r)
            t_new = t + step[3:]
            c_new = _cost(r_new, t_new, world, image)
            if c_new < cost:
                accepted = True
                break
            step = 0.5 * step
            if np.linalg.norm(step) < STEP_TOL:
                break
        if not accepted:
            break
        stalled = cost - c_new <= REL_DECREASE * cost
        r, t, cost = r_new, t_new, c_new
        trace.append(cost)
        if stalled:
            break
    diag = {**initial.diagnostics, "cost_trace": trace, "iterations": len(trace) - 1}
    if len(trace) == 1:
        return initial.with_(diagnostics=diag)
    rms = h_ap * float(np.sqrt(cost / len(world)))
    return initial.with_(rotation=r, translation=t, reproj_rms=rms, refined=True, diagnostics=diag)
