from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import BehindCameraError, ContractError
from ..geometry import Pose, euler_from_rot

METHODS = ("epnp", "ippe", "rpnp")
TIE_EPS = 1e-12
IMAGE_BOUND = 10.0


@dataclass(frozen=True)
class PnPSolution:
    """Pose with ``X_cam = rotation @ X_world + translation``.

    ``reproj_rms`` is in normalized image units times the ``h_ap`` the solver
    was given, i.e. millimeters when ``h_ap`` is the aperture height.
    """

    rotation: np.ndarray
    translation: np.ndarray
    reproj_rms: float
    method: str
    refined: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def center(self):
        return -self.rotation.T @ self.translation

    def with_(self, **kw):
        return replace(self, **kw)


def check_correspondences(world, image, min_points=4):
    world = np.asarray(world, dtype=float)
    image = np.asarray(image, dtype=float)
    if world.ndim != 2 or world.shape[1] != 3:
        raise ContractError(f"world points must be (n, 3), got {world.shape}")
    if image.shape != (world.shape[0], 2):
        raise ContractError(f"image points must be ({world.shape[0]}, 2), got {image.shape}")
    if world.shape[0] < min_points:
        raise ContractError(f"need at least {min_points} correspondences, got {world.shape[0]}")
    if not (np.all(np.isfinite(world)) and np.all(np.isfinite(image))):
        raise ContractError("non-finite correspondence")
    if np.any(np.abs(image) >= IMAGE_BOUND):
        raise ContractError("normalized image coordinate out of range; divide by h_ap first")
    return world, image


def normalize_image(points_mm, h_ap):
    """Detector millimeters to intrinsics-free coordinates."""
    return np.asarray(points_mm, dtype=float) / h_ap


def reprojection_rms(r, t, world, image):
    """RMS image residual in normalized units; inf if any point is behind."""
    pc = world @ r.T + t
    z = pc[:, 2]
    if np.any(z <= 0.0):
        return np.inf
    d = pc[:, :2] / z[:, None] - image
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


def make_solution(r, t, world, image, method, h_ap=1.0, **diag):
    rms = reprojection_rms(r, t, world, image)
    return PnPSolution(np.asarray(r, float), np.asarray(t, float), h_ap * rms, method, diagnostics=diag)


def rank_solutions(solutions, prior_gamma=None):
    """Sort by reprojection RMS. Ties (within 1e-12) go to the gamma closest
    to ``prior_gamma`` when given, otherwise to the smaller |beta|.

    Raises ``BehindCameraError`` when no candidate puts every point in front
    of the receiver.
    """

    def tiebreak(sol):
        a, b, g = euler_from_rot(sol.rotation)
        if prior_gamma is not None:
            return abs(np.angle(np.exp(1j * (g - prior_gamma))))
        return abs(b)

    def rms(sol):
        return sol.reproj_rms if np.isfinite(sol.reproj_rms) else np.inf

    ordered = sorted(solutions, key=rms)
    if not ordered or not np.isfinite(rms(ordered[0])):
        raise BehindCameraError("no candidate pose keeps every point in front of the receiver")
    out = []
    while ordered:
        lead = rms(ordered[0])
        k = 1
        while k < len(ordered) and (rms(ordered[k]) == lead or rms(ordered[k]) - lead <= TIE_EPS):
            k += 1
        out.extend(sorted(ordered[:k], key=tiebreak))
        ordered = ordered[k:]
    return out


def solution_to_pose(sol):
    """Receiver pose in the world frame: ``C = -R^T t`` and Euler angles of R."""
    c = sol.center
    return Pose(float(c[0]), float(c[1]), float(c[2]), *euler_from_rot(sol.rotation))


def rays(image):
    """Unit viewing rays for normalized image points."""
    v = np.column_stack([image, np.ones(len(image))])
    return v / np.linalg.norm(v, axis=1, keepdims=True)
