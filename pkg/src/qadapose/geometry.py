"""Frames, Euler angles and pin-hole projection.

Conventions:

* world frame: origin at a floor corner of the room, z up, meters;
* camera frame: ``X_cam = R (X_world - C)`` with ``C`` the receiver position,
  so the solver translation is ``t = -R C``;
* ``R = Rx(alpha) @ Ry(beta) @ Rz(gamma)``; with ``alpha = beta = 0`` the
  camera z-axis points at the ceiling;
* image points in millimeters on the detector, ``x_r = h_ap x_cam / z_cam``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, ContractError, NearSingularError

GIMBAL_EPS = 1e-9
MIN_DEPTH_M = 1e-9
DEFAULT_HALF_EXTENT_MM = 10.0


def wrap_angle(a):
    """Map an angle in radians into (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.alpha, self.beta, self.gamma)
        if not all(math.isfinite(v) for v in vals):
            raise ContractError(f"non-finite pose {vals}")
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, wrap_angle(float(getattr(self, name))))

    @property
    def position(self):
        return np.array([self.x, self.y, self.z])

    @property
    def angles(self):
        return (self.alpha, self.beta, self.gamma)

    @property
    def rotation(self):
        return rot_from_euler(self.alpha, self.beta, self.gamma)

    @classmethod
    def from_degrees(cls, x, y, z, alpha=0.0, beta=0.0, gamma=0.0):
        return cls(x, y, z, math.radians(alpha), math.radians(beta), math.radians(gamma))

    def degrees(self):
        return tuple(math.degrees(a) for a in self.angles)


@dataclass(frozen=True)
class Beacon:
    id: int
    position: tuple

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise ContractError(f"beacon {self.id}: bad position {self.position}")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class BeaconSet:
    beacons: tuple
    planar: bool = True

    def __post_init__(self):
        beacons = tuple(self.beacons)
        object.__setattr__(self, "beacons", beacons)
        if len(beacons) < 4:
            raise ContractError(f"need at least 4 beacons, got {len(beacons)}")
        ids = [b.id for b in beacons]
        if len(set(ids)) != len(ids):
            raise ContractError(f"duplicate beacon ids {ids}")
        if self.planar:
            zs = [b.position[2] for b in beacons]
            if max(zs) - min(zs) > 1e-9:
                raise ContractError("planar beacon set with unequal heights")

    def __len__(self):
        return len(self.beacons)

    def __iter__(self):
        return iter(self.beacons)

    @property
    def ids(self):
        return [b.id for b in self.beacons]

    @property
    def positions(self):
        return np.array([b.position for b in self.beacons])

    def with_positions(self, positions, planar=None):
        """Same ids, new coordinates (e.g. a perturbed transmitter)."""
        positions = np.asarray(positions, dtype=float)
        bs = tuple(Beacon(b.id, tuple(p)) for b, p in zip(self.beacons, positions))
        if planar is None:
            zs = positions[:, 2]
            planar = bool(np.ptp(zs) <= 1e-9)
        return BeaconSet(bs, planar=planar)


def square_beacons(side=1.2, center=(1.0, 1.0), height=3.4):
    """Four ceiling beacons on a square, ids 0..3 counter-clockwise from (-,-)."""
    h = side / 2.0
    cx, cy = center
    corners = [(-h, -h), (h, -h), (h, h), (-h, h)]
    return BeaconSet(tuple(Beacon(i, (cx + dx, cy + dy, height)) for i, (dx, dy) in enumerate(corners)))


def _rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(g):
    c, s = math.cos(g), math.sin(g)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_from_euler(alpha, beta, gamma):
    return _rx(alpha) @ _ry(beta) @ _rz(gamma)


def is_gimbal_locked(r):
    return math.hypot(r[0][0], r[0][1]) < GIMBAL_EPS


def euler_from_rot(r):
    """Angles ``(alpha, beta, gamma)`` with ``rot_from_euler(*angles) == r``.

    At gimbal lock (``|cos beta| < 1e-9``) alpha is set to zero; check with
    ``is_gimbal_locked``.
    """
    r = np.asarray(r, dtype=float)
    cb = math.hypot(r[0, 0], r[0, 1])
    beta = math.atan2(r[0, 2], cb)
    if cb < GIMBAL_EPS:
        alpha = 0.0
        gamma = math.atan2(r[1, 0], r[1, 1])
    else:
        alpha = math.atan2(-r[1, 2], r[2, 2])
        gamma = math.atan2(-r[0, 1], r[0, 0])
    return wrap_angle(alpha), wrap_angle(beta), wrap_angle(gamma)


def world_to_cam(pose, p):
    """Camera-frame coordinates of world point(s) ``p`` ((3,) or (n, 3))."""
    p = np.asarray(p, dtype=float)
    return (p - pose.position) @ pose.rotation.T


def project(p_cam, h_ap):
    """Pin-hole projection of camera point(s) onto the detector, in mm."""
    p_cam = np.asarray(p_cam, dtype=float)
    z = p_cam[..., 2]
    if np.any(z <= 0.0):
        raise BehindCameraError(f"point behind the aperture (z_cam={np.min(z):.3g} m)")
    if np.any(z < MIN_DEPTH_M):
        raise NearSingularError(f"z_cam={np.min(z):.3g} m is too close to the aperture plane")
    return h_ap * p_cam[..., :2] / z[..., None]


def image_points(pose, beacons, h_ap):
    """Noise-free detector points of every beacon, (n, 2) mm."""
    pts = beacons.positions if isinstance(beacons, BeaconSet) else np.asarray(beacons, dtype=float)
    return project(world_to_cam(pose, pts), h_ap)


def reproj_rms(r, t, beacons, obs, h_ap):
    """RMS over beacons of the image residual norm (mm) for ``X_cam = R X + t``."""
    pts = beacons.positions if isinstance(beacons, BeaconSet) else np.asarray(beacons, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if len(pts) != len(obs):
        raise ContractError(f"{len(pts)} beacons vs {len(obs)} observations")
    pred = project(pts @ np.asarray(r).T + np.asarray(t), h_ap)
    return float(np.sqrt(np.mean(np.sum((pred - obs) ** 2, axis=1))))
