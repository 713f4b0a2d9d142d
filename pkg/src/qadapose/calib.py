"""Receiver calibration from ratio measurements taken at known poses.

The calibrated map is linear in ``a = (l/2) lambda``, ``b = a delta`` and the
offset ``c``, so for fixed ``(lambda, delta)`` the best offset is closed form.
A coarse grid over ``(lambda, delta)`` picks the start, and Gauss-Newton
refines ``(lambda, delta, c_x, c_y)``. The aperture side ``l`` is held at its
configured value because only the product ``l * lambda`` is observable.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CaptureFormatError, ContractError, IdentifiabilityError
from .geometry import Pose, image_points
from .numerics import lstsq
from .qada import image_point_from_ratios, ratios_from_image_point

LAMBDA_GRID = (0.5, 2.0, 0.05)
DELTA_GRID = (-0.3, 0.3, 0.01)
GN_ITERS = 20
GN_TOL = 1e-14
MIN_POSES = 3


@dataclass(frozen=True)
class CalibObservation:
    pose: Pose
    ratios: np.ndarray  # (n_beacons, 2), rows in beacon order


@dataclass
class CalibResult:
    params: object
    objective: float
    seed_objective: float
    best_seed: tuple
    iterations: int
    gauge: str


def _grid(lo, hi, step):
    return np.round(np.arange(lo, hi + 0.5 * step, step), 12)


def _stack(obs, beacons, h_ap):
    if len(obs) == 0:
        raise ContractError("no calibration observations")
    distinct = {tuple(np.round(o.pose.position, 9)) + tuple(np.round(o.pose.angles, 9)) for o in obs}
    if len(distinct) < MIN_POSES:
        raise IdentifiabilityError(f"need at least {MIN_POSES} distinct poses, got {len(distinct)}")
    p = np.vstack([np.asarray(o.ratios, dtype=float).reshape(-1, 2) for o in obs])
    u = np.vstack([image_points(o.pose, beacons, 1.0) for o in obs])  # normalized truth
    if len(p) != len(u):
        raise ContractError("each observation needs one ratio pair per beacon")
    return p, u


def _residual(theta, p, u, l, h_ap):
    lam, delta, cx, cy = theta
    g = 0.5 * l * lam
    x = -g * (p[:, 0] + delta * p[:, 1]) + cx
    y = -g * (-delta * p[:, 0] + p[:, 1]) + cy
    return np.concatenate([x - h_ap * u[:, 0], y - h_ap * u[:, 1]])


def _jacobian(theta, p, l):
    lam, delta, _, _ = theta
    g = 0.5 * l
    n = len(p)
    j = np.zeros((2 * n, 4))
    j[:n, 0] = -g * (p[:, 0] + delta * p[:, 1])
    j[n:, 0] = -g * (-delta * p[:, 0] + p[:, 1])
    j[:n, 1] = -g * lam * p[:, 1]
    j[n:, 1] = g * lam * p[:, 0]
    j[:n, 2] = 1.0
    j[n:, 3] = 1.0
    return j


def _best_offset(lam, delta, p, u, l, h_ap):
    r = _residual((lam, delta, 0.0, 0.0), p, u, l, h_ap)
    n = len(p)
    return -r[:n].mean(), -r[n:].mean()


def objective(params, obs, beacons):
    """Sum of squared image-point residuals (mm^2) for ``params``."""
    p, u = _stack(obs, beacons, params.h_ap)
    r = _residual((params.lam, params.delta, params.c_x, params.c_y), p, u, params.l, params.h_ap)
    return float(r @ r)


def estimate_calibration(obs, beacons, initial, lambda_grid=LAMBDA_GRID, delta_grid=DELTA_GRID, free_h_ap=False):
    """Fit ``lambda``, ``delta`` and ``c`` to ratio observations at known poses.

    ``initial`` supplies the fixed ``l`` and ``h_ap``. With ``free_h_ap`` the
    roles swap: ``lambda`` stays at its initial value and ``h_ap`` is
    estimated instead, since on this data only ``l * lambda / h_ap`` is
    identifiable. Returns a ``CalibResult``.
    """
    p, u = _stack(obs, beacons, initial.h_ap)
    if np.linalg.matrix_rank(_jacobian((1.0, 0.0, 0.0, 0.0), p, initial.l)) < 4:
        raise IdentifiabilityError("ratio observations do not constrain gain and skew")
    if free_h_ap:
        return _estimate_h_ap(p, u, initial)

    l, h_ap = initial.l, initial.h_ap
    best = (math.inf, None)
    for lam in _grid(*lambda_grid):
        for delta in _grid(*delta_grid):
            cx, cy = _best_offset(lam, delta, p, u, l, h_ap)
            r = _residual((lam, delta, cx, cy), p, u, l, h_ap)
            f = float(r @ r)
            if f < best[0]:
                best = (f, np.array([lam, delta, cx, cy]))
    seed_obj, theta = best
    seed = (float(theta[0]), float(theta[1]))

    cost, it = seed_obj, 0
    for it in range(1, GN_ITERS + 1):
        r = _residual(theta, p, u, l, h_ap)
        step = lstsq(_jacobian(theta, p, l), -r)
        trial = theta + step
        if not (0 < trial[0] and abs(trial[1]) < 0.5):
            break
        f = float(np.sum(_residual(trial, p, u, l, h_ap) ** 2))
        if f > cost:
            break
        theta, cost = trial, f
        if np.linalg.norm(step) <= GN_TOL * (1.0 + np.linalg.norm(theta)):
            break
    params = replace(initial, lam=float(theta[0]), delta=float(theta[1]), c_x=float(theta[2]), c_y=float(theta[3]))
    return CalibResult(params, cost, seed_obj, seed, it, gauge="l fixed, h_ap fixed, lambda free")


def _estimate_h_ap(p, u, initial):
    # x = -a M p + c = h u with a fixed: linear in (h, b, c_x, c_y) where b = a delta
    a = initial.gain
    n = len(p)
    j = np.zeros((2 * n, 4))
    j[:n, 0] = -u[:, 0]
    j[n:, 0] = -u[:, 1]
    j[:n, 1] = -p[:, 1]
    j[n:, 1] = p[:, 0]
    j[:n, 2] = 1.0
    j[n:, 3] = 1.0
    rhs = np.concatenate([a * p[:, 0], a * p[:, 1]])
    h, b, cx, cy = lstsq(j, rhs)
    if not h > 0:
        raise IdentifiabilityError("fitted aperture height is not positive")
    params = replace(initial, h_ap=float(h), delta=float(b / a), c_x=float(cx), c_y=float(cy))
    r = _residual((params.lam, params.delta, params.c_x, params.c_y), p, u, params.l, params.h_ap)
    f = float(r @ r)
    return CalibResult(params, f, f, (params.lam, params.delta), 1, gauge="l fixed, lambda fixed, h_ap free")


def synthetic_observations(beacons, poses, cal, noise_sigma=0.0, seed=0):
    """Ratios the receiver ``cal`` would report at ``poses``, plus optional
    Gaussian ratio noise."""
    rng = np.random.default_rng(seed)
    out = []
    for pose in poses:
        r = ratios_from_image_point(image_points(pose, beacons, cal.h_ap), cal)
        if noise_sigma > 0:
            r = r + rng.normal(0.0, noise_sigma, r.shape)
        out.append(CalibObservation(pose, np.asarray(r, dtype=float)))
    return out


def residual_rms(params, obs, beacons):
    """RMS image-point misfit in mm."""
    p, u = _stack(obs, beacons, params.h_ap)
    pred = image_point_from_ratios(p, params)
    return float(np.sqrt(np.mean(np.sum((pred - params.h_ap * u) ** 2, axis=1))))


# -- observation files -------------------------------------------------------

_POSE_COLS = ["x_m", "y_m", "z_m", "alpha_deg", "beta_deg", "gamma_deg"]


def write_observations(path, obs, beacon_ids):
    cols = _POSE_COLS + [f"p{a}_{i}" for i in beacon_ids for a in ("x", "y")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for o in obs:
            w.writerow([repr(float(v)) for v in (*o.pose.position, *o.pose.degrees(), *np.asarray(o.ratios).ravel())])


def read_observations(path, beacon_ids):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CaptureFormatError(f"{path}: empty observation file")
    header = rows[0]
    need = _POSE_COLS + [f"p{a}_{i}" for i in beacon_ids for a in ("x", "y")]
    missing = [c for c in need if c not in header]
    if missing:
        raise CaptureFormatError(f"{path}: missing column '{missing[0]}'")
    idx = [header.index(c) for c in need]
    out = []
    for k, row in enumerate(rows[1:], start=2):
        try:
            v = [float(row[i]) for i in idx]
        except (ValueError, IndexError):
            raise CaptureFormatError(f"{path}: bad value on line {k}") from None
        pose = Pose.from_degrees(*v[:6])
        out.append(CalibObservation(pose, np.array(v[6:]).reshape(-1, 2)))
    return out
