"""Robust PnP: a least-squares fit of P3P quartics sharing one rotation axis.

The two points farthest apart in the image fix an axis. With ``x`` the ratio of
their depths, every third point yields a quartic constraint ``f_i(x) = 0``;
the minimisers of ``F = sum f_i^2`` are among the real roots of ``F'``.
Each root gives the axis direction in the camera frame, leaving a rotation
angle about it and the translation, which enter linearly. All candidates are
ranked by reprojection error.
"""

import numpy as np
from numpy.polynomial import polynomial as P

from ..errors import DegeneracyError
from ..numerics import lstsq, procrustes, real_poly_roots
from ._common import TIE_EPS, check_correspondences, make_solution, rank_solutions, rays

NEAR_REAL = 1e-3


def axis_pair(image):
    """Indices of the longest image-space edge; ties go to the lowest ids."""
    n = len(image)
    best, pair = -1.0, (0, 1)
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.sum((image[i] - image[j]) ** 2))
            if d > best * (1.0 + TIE_EPS):
                best, pair = d, (i, j)
    return pair


def _frame_with_axis(a):
    """Rotation whose third row is the unit vector ``a``."""
    e = np.zeros(3)
    e[int(np.argmin(np.abs(a)))] = 1.0
    u = e - (e @ a) * a
    u /= np.linalg.norm(u)
    return np.vstack([u, np.cross(a, u), a])


def triplet_quartic(c12, c13, c23, d12, d13, d23):
    """Quartic in ``t = x - c12`` whose roots give the depth ratio ``x``.

    ``c..`` are cosines between unit rays, ``d..`` world distances; point 1 and
    2 form the axis, point 3 is the third member of the triplet.
    """
    s12 = 1.0 - c12 * c12
    xs = np.array([c12, 1.0])  # x(t)
    q = np.array([s12, 0.0, 1.0])  # |x v2 - v1|^2
    k2 = (d13 / d12) ** 2
    k3 = (d23 / d12) ** 2
    num = P.polyadd(P.polysub((k3 - k2) * q, P.polymul(xs, xs)), [1.0])
    den = 2.0 * P.polysub([c13], c23 * xs)
    f = P.polymul(num, num)
    f = P.polysub(f, 2.0 * c13 * P.polymul(num, den))
    f = P.polyadd(f, P.polymul(P.polysub([1.0], k2 * q), P.polymul(den, den)))
    return f


def _pose_for_axis(x, v, axis_ids, world_local, image):
    """Linear solve for rotation angle and translation given the axis ratio."""
    i1, i2 = axis_ids
    direction = x * v[i2] - v[i1]
    rc = _frame_with_axis(direction / np.linalg.norm(direction)).T
    px, py, pz = world_local.T
    a = np.outer(pz, rc[:, 2])
    b = np.outer(px, rc[:, 0]) + np.outer(py, rc[:, 1])
    e = np.outer(px, rc[:, 1]) - np.outer(py, rc[:, 0])
    n = len(image)
    m = np.zeros((2 * n, 5))
    rhs = np.zeros(2 * n)
    for k in range(2):
        u = image[:, k : k + 1]
        rows = slice(k, 2 * n, 2)
        m[rows, 0] = b[:, k] - u[:, 0] * b[:, 2]
        m[rows, 1] = e[:, k] - u[:, 0] * e[:, 2]
        m[rows, 2 + k] = 1.0
        m[rows, 4] = -u[:, 0]
        rhs[rows] = -(a[:, k] - u[:, 0] * a[:, 2])
    c, s, tx, ty, tz = lstsq(m, rhs)
    norm = np.hypot(c, s)
    if norm == 0.0:
        raise DegeneracyError("RPnP: rotation angle undetermined")
    c, s = c / norm, s / norm
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return rc @ rz, np.array([tx, ty, tz])


def _polish(quartics, t, iters=60):
    """Safeguarded Newton descent on ``F = sum f_i^2`` evaluated from the
    factors, which is better conditioned than the expanded degree-7 ``F'``."""
    d1 = [P.polyder(f) for f in quartics]
    d2 = [P.polyder(f, 2) for f in quartics]

    def cost(t):
        return sum(P.polyval(t, f) ** 2 for f in quartics)

    f0 = cost(t)
    for _ in range(iters):
        fv = [P.polyval(t, f) for f in quartics]
        a = [P.polyval(t, d) for d in d1]
        g = sum(x * y for x, y in zip(fv, a))
        gn = sum(y * y for y in a)
        h = gn + sum(x * P.polyval(t, d) for x, d in zip(fv, d2))
        if g == 0.0 or gn == 0.0:
            break
        step = -g / h if h > 0.0 else -g / gn
        for _ in range(40):
            f1 = cost(t + step)
            if f1 < f0:
                break
            step *= 0.5
        else:
            break
        t, f0 = t + step, f1
        if abs(step) <= 1e-15 * (1.0 + abs(t)):
            break
    return t


def _seeds(dcost):
    """Real roots of ``F'`` plus the real parts of near-real eigenvalues;
    close distinct roots can come back as a complex pair."""
    seeds = list(real_poly_roots(dcost))
    for z in P.polyroots(dcost):
        if z.imag != 0.0 and abs(z.imag) <= NEAR_REAL * (1.0 + abs(z.real)):
            seeds.append(float(z.real))
    return seeds


def rpnp(world, image, h_ap=1.0, prior_gamma=None):
    """RPnP pose from normalized image points; returns the best PnPSolution."""
    world, image = check_correspondences(world, image)
    n = len(world)
    v = rays(image)
    i1, i2 = axis_pair(image)
    axis = world[i2] - world[i1]
    d12 = float(np.linalg.norm(axis))
    if d12 == 0.0:
        raise DegeneracyError("RPnP: axis points coincide")
    c12 = float(v[i1] @ v[i2])

    quartics = []
    for k in range(n):
        if k in (i1, i2):
            continue
        d13 = float(np.linalg.norm(world[k] - world[i1]))
        d23 = float(np.linalg.norm(world[k] - world[i2]))
        if d13 == 0.0 or d23 == 0.0:
            raise DegeneracyError(f"RPnP: point {k} repeats an axis point")
        f = triplet_quartic(c12, float(v[i1] @ v[k]), float(v[i2] @ v[k]), d12, d13, d23)
        quartics.append(f)
    dcost = P.polyder(sum(P.polymul(f, f) for f in quartics))
    # every stationary point is tried: on symmetric layouts the true ratio is a
    # multiple root of F' and the sign of F'' there is rounding noise
    roots = [_polish(quartics, t) for t in _seeds(dcost)]
    ts = [t for t in roots if c12 + t > 0.0]
    if not ts:
        raise DegeneracyError("RPnP: no admissible depth ratio")

    mid = 0.5 * (world[i1] + world[i2])
    rw = _frame_with_axis(axis / d12)
    world_local = (world - mid) @ rw.T

    sols = []
    for t in ts:
        try:
            rl, tl = _pose_for_axis(c12 + t, v, (i1, i2), world_local, image)
        except DegeneracyError:
            continue
        r = rl @ rw
        tr = tl - r @ mid
        sols.append(make_solution(r, tr, world, image, "rpnp", h_ap, stage="linear"))
        # snap to the measured rays and re-fit rigidly
        depth = np.sum((world @ r.T + tr) * v, axis=1)
        if np.all(depth > 0.0):
            try:
                r2, t2 = procrustes(world, depth[:, None] * v)
            except DegeneracyError:
                continue
            sols.append(make_solution(r2, t2, world, image, "rpnp", h_ap, stage="procrustes"))
    if not sols:
        raise DegeneracyError("RPnP: every candidate degenerate")
    return rank_solutions(sols, prior_gamma)[0]
