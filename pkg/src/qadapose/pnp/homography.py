import itertools

import numpy as np

from ..errors import ContractError, DegeneracyError
from ..numerics import null_vector

COLLINEAR_TOL = 1e-9


def _normalizer(pts):
    """Similarity taking ``pts`` to zero mean and mean distance sqrt(2)."""
    c = pts.mean(axis=0)
    d = float(np.mean(np.linalg.norm(pts - c, axis=1)))
    if d == 0.0:
        raise DegeneracyError("homography: all points coincide")
    s = np.sqrt(2.0) / d
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _apply(h, pts):
    ph = np.column_stack([pts, np.ones(len(pts))]) @ h.T
    return ph[:, :2] / ph[:, 2:3]


def check_general_position(pts, tol=COLLINEAR_TOL):
    """Raise if any three of the 2-D points are (nearly) collinear."""
    spread = float(np.max(np.sum((pts - pts.mean(axis=0)) ** 2, axis=1)))
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        a = pts[j] - pts[i]
        b = pts[k] - pts[i]
        if abs(a[0] * b[1] - a[1] * b[0]) <= tol * spread:
            raise DegeneracyError(f"homography: points {i}, {j}, {k} are collinear")


def homography_dlt(world_planar, image):
    """Plane-to-image homography by normalized DLT.

    ``world_planar`` and ``image`` are (n, 2), n >= 4. Returns H with
    ``image ~ H [x, y, 1]``, scaled so ``H[2, 2] == 1`` when possible.
    """
    src = np.asarray(world_planar, dtype=float)
    dst = np.asarray(image, dtype=float)
    if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
        raise ContractError(f"homography needs matching (n, 2) arrays, got {src.shape}, {dst.shape}")
    if len(src) < 4:
        raise ContractError(f"homography needs at least 4 points, got {len(src)}")
    check_general_position(src)

    ts = _normalizer(src)
    td = _normalizer(dst)
    s = _apply(ts, src)
    d = _apply(td, dst)
    n = len(s)
    a = np.zeros((2 * n, 9))
    one = np.ones(n)
    xs = np.column_stack([s, one])
    a[0::2, 3:6] = -xs
    a[0::2, 6:9] = d[:, 1:2] * xs
    a[1::2, 0:3] = xs
    a[1::2, 6:9] = -d[:, 0:1] * xs
    hn = null_vector(a).reshape(3, 3)
    h = np.linalg.inv(td) @ hn @ ts
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    else:
        h = h / np.linalg.norm(h)
    return h


def apply_homography(h, pts):
    return _apply(np.asarray(h, dtype=float), np.asarray(pts, dtype=float))
