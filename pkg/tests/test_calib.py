import math

import numpy as np
import pytest

from qadapose.calib import (
    CalibObservation, estimate_calibration, objective, read_observations, residual_rms, synthetic_observations,
    write_observations,
)
from qadapose.errors import CaptureFormatError, IdentifiabilityError
from qadapose.geometry import Pose
from qadapose.qada import CalibrationParams


@pytest.fixture
def poses():
    rng = np.random.default_rng(3)
    return [Pose.from_degrees(x, y, 0.0, 0.0, 0.0, g)
            for x, y, g in zip(rng.uniform(0.5, 1.5, 12), rng.uniform(0.5, 1.5, 12), rng.uniform(0, 360, 12))]


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_recovers_reference_parameters(beacons, ref_cal, ideal_cal, poses):
    obs = synthetic_observations(beacons, poses, ref_cal)
    res = estimate_calibration(obs, beacons, ideal_cal)
    for name in ("lam", "delta", "c_x", "c_y"):
        assert _rel(getattr(res.params, name), getattr(ref_cal, name)) < 1e-6
    assert res.params.l == ref_cal.l and res.params.h_ap == ref_cal.h_ap
    assert res.objective <= res.seed_objective


def test_recovers_identity_distortion(beacons, ideal_cal, poses):
    truth = CalibrationParams(h_ap=2.55, lam=1.0, delta=0.0, l=2.75, c_x=0.0, c_y=0.0)
    res = estimate_calibration(synthetic_observations(beacons, poses, truth), beacons, ideal_cal.__class__(
        h_ap=2.55, lam=1.6, delta=0.2, l=2.75, c_x=0.1, c_y=0.1))
    assert abs(res.params.lam - 1.0) < 1e-9 and abs(res.params.delta) < 1e-9
    assert abs(res.params.c_x) < 1e-9 and abs(res.params.c_y) < 1e-9


def test_noisy_data_improves_objective(beacons, ref_cal, ideal_cal, poses):
    obs = synthetic_observations(beacons, poses, ref_cal, noise_sigma=0.01, seed=1)
    res = estimate_calibration(obs, beacons, ideal_cal)
    assert res.objective < objective(ideal_cal, obs, beacons)
    assert residual_rms(res.params, obs, beacons) < residual_rms(ideal_cal, obs, beacons)


def test_identical_poses_are_unidentifiable(beacons, ref_cal):
    obs = synthetic_observations(beacons, [Pose(1, 1, 0)] * 5, ref_cal)
    with pytest.raises(IdentifiabilityError):
        estimate_calibration(obs, beacons, ref_cal)


def test_free_h_ap_gauge(beacons, ref_cal, poses):
    truth = CalibrationParams(h_ap=2.2, lam=1.25, delta=0.1, l=2.75, c_x=0.055, c_y=-0.035)
    obs = synthetic_observations(beacons, poses, truth)
    res = estimate_calibration(obs, beacons, ref_cal, free_h_ap=True)
    assert "h_ap free" in res.gauge
    assert math.isclose(res.params.h_ap, 2.2, rel_tol=1e-9)


def test_observation_csv_round_trip(tmp_path, beacons, ref_cal, poses):
    obs = synthetic_observations(beacons, poses[:4], ref_cal, noise_sigma=0.02)
    path = tmp_path / "obs.csv"
    write_observations(path, obs, beacons.ids)
    back = read_observations(path, beacons.ids)
    for a, b in zip(obs, back):
        np.testing.assert_array_equal(a.ratios, b.ratios)
        np.testing.assert_allclose(a.pose.position, b.pose.position)
        np.testing.assert_allclose(a.pose.angles, b.pose.angles, atol=1e-15)


def test_observation_csv_missing_column(tmp_path, beacons):
    path = tmp_path / "obs.csv"
    path.write_text("x_m,y_m,z_m,alpha_deg,beta_deg,gamma_deg,px_0\n")
    with pytest.raises(CaptureFormatError, match="py_0"):
        read_observations(path, beacons.ids)


def test_observation_csv_bad_value(tmp_path, beacons, ref_cal):
    obs = [CalibObservation(Pose(1, 1, 0), np.zeros((4, 2)))]
    path = tmp_path / "obs.csv"
    write_observations(path, obs, beacons.ids)
    path.write_text(path.read_text().replace("0.0", "zero", 1))
    with pytest.raises(CaptureFormatError, match="line 2"):
        read_observations(path, beacons.ids)
