"""Infinitesimal plane-based pose estimation (planar targets only).

The homography from the target plane to the normalized image is
differentiated at the target centroid; the 2x2 Jacobian and the image of the
centroid fix the rotation up to a two-fold tilt ambiguity, and translation
follows by linear least squares for each rotation.
"""

import math

import numpy as np

from ..errors import PlanarityError
from ..numerics import lstsq, svd3
from ._common import check_correspondences, make_solution, rank_solutions
from .homography import homography_dlt

PLANARITY_TOL = 0.25
FRONTO_TOL = 64 * np.finfo(float).eps


def plane_frame(world, tol=PLANARITY_TOL):
    """Centroid and rotation ``P`` (rows e1, e2, normal) of the best-fit plane.

    Raises ``PlanarityError`` when the out-of-plane singular value exceeds
    ``tol`` times the smaller in-plane one.
    """
    centroid = world.mean(axis=0)
    d = world - centroid
    _, s, v = svd3(d.T @ d)
    if s[1] <= 0.0 or math.sqrt(max(s[2], 0.0) / s[1]) > tol:
        raise PlanarityError("IPPE needs coplanar world points")
    e1, e2 = v[:, 0], v[:, 1]
    return centroid, np.vstack([e1, e2, np.cross(e1, e2)])


def _rotations(v, jac):
    """The two rotations compatible with centroid image ``v`` and Jacobian ``jac``."""
    t = math.hypot(v[0], v[1])
    if t < np.finfo(float).eps:
        rv = np.eye(3)
    else:
        s = math.sqrt(1.0 + t * t)
        costh = 1.0 / s
        sinth = math.sqrt(max(0.0, 1.0 - 1.0 / (s * s)))
        k = np.array([[0.0, 0.0, v[0]], [0.0, 0.0, v[1]], [-v[0], -v[1], 0.0]]) / t
        rv = np.eye(3) + sinth * k + (1.0 - costh) * (k @ k)

    b = np.column_stack([np.eye(2), -v]) @ rv[:, :2]
    a = np.linalg.solve(b, jac)
    aat = a @ a.T
    gamma = math.sqrt(0.5 * (aat[0, 0] + aat[1, 1] + math.sqrt((aat[0, 0] - aat[1, 1]) ** 2 + 4.0 * aat[0, 1] ** 2)))
    r22 = a / gamma
    h = np.eye(2) - r22.T @ r22
    if h[0, 0] + h[1, 1] < FRONTO_TOL:
        # tilt enters h quadratically, so rounding here would become a ~1e-8 rad tilt
        h = np.zeros((2, 2))
    bb = np.array([math.sqrt(max(h[0, 0], 0.0)), math.sqrt(max(h[1, 1], 0.0))])
    if h[0, 1] < 0:
        bb[1] = -bb[1]
    d = np.cross(np.append(r22[:, 0], bb[0]), np.append(r22[:, 1], bb[1]))
    c, a33 = d[:2], d[2]
    r1 = rv @ np.block([[r22, c[:, None]], [bb[None, :], np.array([[a33]])]])
    r2 = rv @ np.block([[r22, -c[:, None]], [-bb[None, :], np.array([[a33]])]])
    return r1, r2


def _translation(r, model, image):
    """Least-squares translation for rotation ``r`` and centred model points."""
    ps = model @ r.T
    n = len(model)
    a = np.zeros((2 * n, 3))
    a[:n, 0] = 1.0
    a[:n, 2] = -image[:, 0]
    a[n:, 1] = 1.0
    a[n:, 2] = -image[:, 1]
    b = np.concatenate([image[:, 0] * ps[:, 2] - ps[:, 0], image[:, 1] * ps[:, 2] - ps[:, 1]])
    return lstsq(a, b)


def ippe(world, image, h_ap=1.0, planarity_tol=PLANARITY_TOL, prior_gamma=None):
    """Both IPPE poses, best first: ``(best, alternate)``.

    ``image`` holds normalized coordinates; ``h_ap`` only scales the reported
    reprojection RMS.
    """
    world, image = check_correspondences(world, image)
    centroid, frame = plane_frame(world, planarity_tol)
    model = (world - centroid) @ frame.T
    h = homography_dlt(model[:, :2], image)
    v = h[:2, 2]
    jac = h[:2, :2] - np.outer(v, h[2, :2])
    sols = []
    for tag, rp in zip(("first", "second"), _rotations(v, jac)):
        tp = _translation(rp, model, image)
        r = rp @ frame
        sols.append(make_solution(r, tp - r @ centroid, world, image, "ippe", h_ap, candidate=tag))
    best, alt = rank_solutions(sols, prior_gamma)
    return best, alt
