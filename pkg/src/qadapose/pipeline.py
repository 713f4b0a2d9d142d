"""Receiver positioning chain: capture -> ratios -> image points -> pose."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DetectionError, NumericalError
from .geometry import Pose
from .pnp import solution_to_pose, solve
from .qada import image_point_from_ratios
from .signals import extract_all, synthesize_capture

DEFAULT_DETECTOR = "decorrelating"


@dataclass
class Estimate:
    pose: Pose
    solution: object
    ratios: list
    image_mm: np.ndarray
    low_confidence: tuple = field(default_factory=tuple)


def measure(capture, beacons, cal, book, detector=DEFAULT_DETECTOR, rule="signed", strict=False):
    """Ratios, calibrated image points (mm) and low-confidence ids for a capture.

    With ``strict`` a low-confidence correlation peak is a detection failure.
    """
    ids = beacons.ids
    ratios = extract_all(capture, book, ids, rule=rule, detector=detector)
    low = tuple(i for i, r in zip(ids, ratios) if r.low_confidence)
    if strict and low:
        raise DetectionError(f"low-confidence correlation peak for beacon(s) {list(low)}")
    pts = image_point_from_ratios(np.array([r.as_array() for r in ratios]), cal)
    return ratios, pts, low


def locate(capture, beacons, cal, book, solver="ippe", detector=DEFAULT_DETECTOR, rule="signed",
           prior_gamma=None, strict=False):
    """Estimate the receiver pose from one capture.

    ``beacons`` are the positions the solver assumes, which need not be the
    ones that produced the capture.
    """
    ratios, pts, low = measure(capture, beacons, cal, book, detector, rule, strict)
    sol = solve(solver, beacons.positions, pts / cal.h_ap, h_ap=cal.h_ap, prior_gamma=prior_gamma)
    return Estimate(solution_to_pose(sol), sol, ratios, pts, low)


def run_trial(true_beacons, pose, cal, book, solvers=("ippe",), snr_db=10.0, seed=0, amp_model="lambertian",
              lambertian_order=1.0, solver_beacons=None, detector=DEFAULT_DETECTOR, rule="signed"):
    """Synthesize one capture and solve it with each solver.

    Returns ``{solver: Estimate}``; a failing stage maps to the raised
    exception instead.
    """
    cap = synthesize_capture(true_beacons, pose, cal, book, snr_db=snr_db, amp_model=amp_model, seed=seed,
                             lambertian_order=lambertian_order)
    assumed = true_beacons if solver_beacons is None else solver_beacons
    try:
        ratios, pts, low = measure(cap, assumed, cal, book, detector, rule)
    except NumericalError as exc:
        return {name: exc for name in solvers}
    out = {}
    for name in solvers:
        try:
            sol = solve(name, assumed.positions, pts / cal.h_ap, h_ap=cal.h_ap)
            out[name] = Estimate(solution_to_pose(sol), sol, ratios, pts, low)
        except NumericalError as exc:
            out[name] = exc
    return out


def pose_errors(truth, est):
    """Absolute errors: position in cm, angles in degrees (wrapped)."""
    dpos = np.abs(np.asarray(est.position) - np.asarray(truth.position)) * 100.0
    dang = [abs(math.degrees(math.remainder(a - b, 2.0 * math.pi))) for a, b in zip(est.angles, truth.angles)]
    return np.concatenate([dpos, dang])
