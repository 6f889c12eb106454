import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarfuse.geometry import (
    BehindCamera,
    CameraIntrinsics,
    PixelPoint,
    Pose3,
    RadarPoint,
    back_project,
    compose,
    inverse,
    project,
    project_camera_point,
    rotation_about,
)

INTR = CameraIntrinsics(fx=1000, fy=1000, cx0=800, cy0=450, width=1600, height=900)


def matmul3(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def quat_pose(q, t):
    w, x, y, z = np.asarray(q) / np.linalg.norm(q)
    R = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
    return Pose3(R, np.asarray(t, dtype=float))


coord = st.floats(-50, 50, allow_nan=False)
quat = st.tuples(*[st.floats(-1, 1) for _ in range(4)]).filter(lambda q: sum(v * v for v in q) > 0.1)
poses = st.builds(quat_pose, quat, st.tuples(coord, coord, coord))


def test_compose_identity():
    I = Pose3.identity()
    assert compose(I, I) == I


def test_compose_with_inverse_is_identity():
    p = Pose3(rotation_about("y", 0.7) @ rotation_about("z", -1.2), [1.0, -2.0, 3.5])
    assert compose(p, inverse(p)).isclose(Pose3.identity(), atol=1e-9)
    assert compose(inverse(p), p).isclose(Pose3.identity(), atol=1e-9)


def test_compose_axis_rotations_against_hand_multiplication():
    rz = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    rx = [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]
    expected = matmul3(rx, rz)  # z first, then x
    assert expected == [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]

    got = compose(Pose3(rotation_about("x", math.pi / 2)), Pose3(rotation_about("z", math.pi / 2)))
    np.testing.assert_allclose(got.rotation, expected, atol=1e-12)


def test_pose_rejects_non_rotation():
    with pytest.raises(ValueError):
        Pose3(np.diag([1.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        Pose3(np.diag([1.0, 1.0, -1.0]))  # reflection


def test_intrinsics_validation():
    with pytest.raises(ValueError):
        CameraIntrinsics(0, 1000, 800, 450, 1600, 900)
    with pytest.raises(ValueError):
        CameraIntrinsics(1000, 1000, 1700, 450, 1600, 900)


def test_radar_point_validation():
    with pytest.raises(ValueError):
        RadarPoint(0, 0, 0)
    with pytest.raises(ValueError):
        RadarPoint(float("nan"), 1, 1)
    assert RadarPoint(1, 2, 3).radial_velocity is None


def test_principal_point():
    px = project(RadarPoint(0, 0, 10), Pose3.identity(), INTR)
    assert (px.cx, px.cy) == (800, 450)


def test_behind_camera():
    with pytest.raises(BehindCamera):
        project(RadarPoint(1, 1, -5), Pose3.identity(), INTR)
    with pytest.raises(BehindCamera):
        project_camera_point((0.0, 0.0, 1e-7), INTR)


def test_pinhole_example():
    fx = fy = 1000.0
    expected = (fx * 2 / 10 + 800, fy * 1 / 10 + 450)
    assert expected == (1000.0, 550.0)
    px = project(RadarPoint(2, 1, 10), Pose3.identity(), INTR)
    assert (px.cx, px.cy) == pytest.approx(expected, abs=1e-12)


def test_extrinsic_applied_before_projection():
    # radar x-forward/y-left/z-up into camera x-right/y-down/z-forward
    r2c = Pose3(np.array([[0.0, -1, 0], [0, 0, -1], [1, 0, 0]]), [0.0, 0.0, 0.0])
    px = project(RadarPoint(10, -2, -1), r2c, INTR)
    assert (px.cx, px.cy) == pytest.approx((1000.0, 550.0))


@settings(max_examples=200)
@given(poses, st.tuples(coord, coord, st.floats(0.5, 100)), st.floats(1.01, 50))
def test_projection_scale_invariance(pose, p_cam, lam):
    a = project_camera_point(p_cam, INTR)
    b = project_camera_point(tuple(lam * v for v in p_cam), INTR)
    assert a.cx == pytest.approx(b.cx, abs=1e-9 * max(1, abs(a.cx)))
    assert a.cy == pytest.approx(b.cy, abs=1e-9 * max(1, abs(a.cy)))


@settings(max_examples=200)
@given(poses, poses, poses)
def test_compose_associative(a, b, c):
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert left.isclose(right, atol=1e-9 * max(1.0, float(np.abs(left.translation).max())))


@settings(max_examples=200)
@given(poses, st.floats(0, 1600), st.floats(0, 900), st.floats(0.5, 150))
def test_back_projection_round_trip(pose, u, v, depth):
    p_cam = back_project(PixelPoint(u, v), depth, INTR)
    p_radar = inverse(pose).apply(p_cam)
    px = project(RadarPoint(*p_radar), pose, INTR)
    assert px.cx == pytest.approx(u, abs=1e-6)
    assert px.cy == pytest.approx(v, abs=1e-6)
