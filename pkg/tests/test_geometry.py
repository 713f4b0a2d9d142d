import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadapose.errors import BehindCameraError, ContractError, NearSingularError
from qadapose.geometry import (
    Beacon, BeaconSet, Pose, euler_from_rot, image_points, is_gimbal_locked, project, reproj_rms,
    rot_from_euler, world_to_cam, wrap_angle,
)

angle = st.floats(-math.pi, math.pi, allow_nan=False)


def test_identity_rotation():
    np.testing.assert_allclose(rot_from_euler(0, 0, 0), np.eye(3))
    assert euler_from_rot(np.eye(3)) == (0.0, 0.0, 0.0)


def test_quarter_turn_about_z():
    r = rot_from_euler(0, 0, math.pi / 2)
    np.testing.assert_allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@pytest.mark.parametrize("gamma", [0.3, -2.0, math.pi - 1e-3])
def test_pure_z_rotation_angles(gamma):
    a, b, g = euler_from_rot(rot_from_euler(0, 0, gamma))
    assert abs(a) < 1e-15 and abs(b) < 1e-15
    assert g == pytest.approx(gamma, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(angle, st.floats(-1.5, 1.5), angle)
def test_euler_round_trip(a, b, g):
    got = euler_from_rot(rot_from_euler(a, b, g))
    for x, y in zip(got, (a, b, g)):
        assert abs(math.remainder(x - y, 2 * math.pi)) < 1e-10


def test_gimbal_lock_flag():
    r = rot_from_euler(0.4, math.pi / 2, 0.1)
    assert is_gimbal_locked(r)
    np.testing.assert_allclose(rot_from_euler(*euler_from_rot(r)), r, atol=1e-12)


def test_wrap_angle():
    assert wrap_angle(3 * math.pi) == pytest.approx(-math.pi) or wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.25) == 0.25


def test_world_to_cam_on_axis():
    np.testing.assert_allclose(world_to_cam(Pose(0, 0, 0), [0, 0, 3.4]), [0, 0, 3.4])


def test_world_to_cam_translation():
    np.testing.assert_allclose(world_to_cam(Pose(1, 1, 0), [1.6, 1.0, 3.4]), [0.6, 0.0, 3.4], atol=1e-15)


def test_world_to_cam_roll_relates_by_rz(beacons):
    p0 = world_to_cam(Pose.from_degrees(1, 1, 0), beacons.positions)
    p1 = world_to_cam(Pose.from_degrees(1, 1, 0, gamma=120), beacons.positions)
    rz = rot_from_euler(0, 0, math.radians(120))
    np.testing.assert_allclose(p1, p0 @ rz.T, atol=1e-14)


def test_project():
    np.testing.assert_allclose(project([0, 0, 3.4], 2.55), [0, 0])
    np.testing.assert_allclose(project([0.6, 0, 3.4], 2.55), [0.45, 0.0], atol=1e-15)


@pytest.mark.parametrize("z, err", [(-1.0, BehindCameraError), (0.0, BehindCameraError), (1e-12, NearSingularError)])
def test_project_rejects_bad_depth(z, err):
    with pytest.raises(err):
        project([0.1, 0.1, z], 2.55)


def test_reproj_rms(beacons, rng):
    pose = Pose.from_degrees(0.7, 1.3, 0, 2, -1, 50)
    obs = image_points(pose, beacons, 2.55)
    r, t = pose.rotation, -pose.rotation @ pose.position
    assert reproj_rms(r, t, beacons, obs, 2.55) == pytest.approx(0.0, abs=1e-14)
    assert reproj_rms(r, t, beacons, obs + [1.0, 0.0], 2.55) == pytest.approx(1.0)
    d = rng.normal(0, 0.1, obs.shape)
    assert reproj_rms(r, t, beacons, obs + d, 2.55) == pytest.approx(math.sqrt(np.mean(np.sum(d * d, axis=1))))


def test_square_beacons_layout(beacons):
    assert beacons.ids == [0, 1, 2, 3]
    np.testing.assert_allclose(beacons.positions[:, :2], [[0.4, 0.4], [1.6, 0.4], [1.6, 1.6], [0.4, 1.6]])
    assert np.all(beacons.positions[:, 2] == 3.4)


def test_beacon_set_contracts():
    b = [Beacon(i, (i, 0.0, 3.0)) for i in range(3)]
    with pytest.raises(ContractError):
        BeaconSet(b)
    with pytest.raises(ContractError):
        BeaconSet(b + [Beacon(0, (1.0, 1.0, 3.0))])
    with pytest.raises(ContractError):
        BeaconSet(b + [Beacon(3, (1.0, 1.0, 3.5))])
    assert not BeaconSet(b + [Beacon(3, (1.0, 1.0, 3.5))], planar=False).planar


def test_with_positions_detects_planarity(beacons):
    pos = beacons.positions.copy()
    pos[0, 2] += 0.01
    assert not beacons.with_positions(pos).planar
    assert beacons.with_positions(beacons.positions).planar


def test_pose_rejects_non_finite():
    with pytest.raises(ContractError):
        Pose(float("nan"), 0, 0)
