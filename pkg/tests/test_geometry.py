import math

import numpy as np
import pytest

from robokit.geometry import (SE3, Pose2D, angle_diff, pose_error, quat_from_axis_angle,
                              quat_from_zyx, quat_multiply, quat_rotate, quat_to_matrix,
                              wrap_angle, zyx_from_quat)


def test_wrap_angle_range():
    rng = np.random.default_rng(0)
    for theta in rng.uniform(-50, 50, 500):
        w = wrap_angle(theta)
        assert -math.pi < w <= math.pi


def test_wrap_angle_periodicity():
    rng = np.random.default_rng(1)
    for theta in rng.uniform(-10, 10, 200):
        for k in (-3, -1, 1, 4):
            assert wrap_angle(theta + 2 * math.pi * k) == pytest.approx(
                wrap_angle(theta), abs=1e-9)


def test_wrap_angle_boundary():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(0.0) == 0.0


def test_pose2d_normalizes_theta():
    p = Pose2D(0, 0, 3 * math.pi)
    assert p.theta == pytest.approx(math.pi)


def test_se2_compose_identity():
    p = Pose2D(1.0, 2.0, 0.7)
    q = p.compose(Pose2D())
    assert (q.x, q.y, q.theta) == (p.x, p.y, p.theta)


def test_se2_compose_inverse():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = Pose2D(*rng.uniform(-3, 3, 2), rng.uniform(-4, 4))
        r = p.compose(p.inverse())
        assert abs(r.x) < 1e-12 and abs(r.y) < 1e-12 and abs(r.theta) < 1e-12


def test_relative_moves_compose_to_absolute_target():
    # composing commanded relative poses equals one composed absolute target
    rng = np.random.default_rng(3)
    for _ in range(50):
        start = Pose2D(*rng.uniform(-2, 2, 2), rng.uniform(-3, 3))
        rels = [Pose2D(*rng.uniform(-1, 1, 2), rng.uniform(-1, 1)) for _ in range(5)]
        step = start
        for r in rels:
            step = step.compose(r)
        combined = rels[0]
        for r in rels[1:]:
            combined = combined.compose(r)
        direct = start.compose(combined)
        # matrix-form SE(2) oracle
        def mat(p):
            c, s = math.cos(p.theta), math.sin(p.theta)
            return np.array([[c, -s, p.x], [s, c, p.y], [0, 0, 1]])
        oracle = mat(start)
        for r in rels:
            oracle = oracle @ mat(r)
        for got in (step, direct):
            assert got.x == pytest.approx(oracle[0, 2], abs=1e-12)
            assert got.y == pytest.approx(oracle[1, 2], abs=1e-12)
            assert abs(angle_diff(got.theta, math.atan2(oracle[1, 0], oracle[0, 0]))) < 1e-12


def test_quat_rotation_matches_matrix():
    rng = np.random.default_rng(4)
    for _ in range(50):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-math.pi, math.pi)
        q = quat_from_axis_angle(axis, angle)
        v = rng.normal(size=3)
        np.testing.assert_allclose(quat_rotate(q, v), quat_to_matrix(q) @ v, atol=1e-12)


def test_quat_multiply_composes():
    qa = quat_from_axis_angle([0, 0, 1], 0.4)
    qb = quat_from_axis_angle([0, 1, 0], -0.9)
    v = np.array([0.3, -0.2, 0.8])
    lhs = quat_rotate(quat_multiply(qa, qb), v)
    rhs = quat_rotate(qa, quat_rotate(qb, v))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_se3_compose_inverse_roundtrip():
    rng = np.random.default_rng(5)
    for _ in range(50):
        t = SE3(rng.normal(size=3), quat_from_axis_angle(rng.normal(size=3) + 1e-3,
                                                         rng.uniform(-3, 3)))
        r = t @ t.inverse()
        np.testing.assert_allclose(r.translation, 0.0, atol=1e-12)
        assert abs(abs(r.rotation[0]) - 1.0) < 1e-12


def test_se3_transform_point_matches_matrix():
    rng = np.random.default_rng(6)
    t = SE3(rng.normal(size=3), quat_from_axis_angle([0.3, -1.0, 0.5], 1.2))
    p = rng.normal(size=3)
    m = t.matrix()
    np.testing.assert_allclose(t.transform_point(p), (m @ np.append(p, 1.0))[:3], atol=1e-12)


def test_quaternion_norm_preserved_long_chains():
    rng = np.random.default_rng(7)
    t = SE3()
    for _ in range(10_000):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        t = t @ SE3(rng.normal(size=3) * 0.01, quat_from_axis_angle(axis, rng.uniform(-1, 1)))
    assert abs(np.linalg.norm(t.rotation) - 1.0) < 1e-9


def test_zyx_roundtrip():
    rng = np.random.default_rng(8)
    for _ in range(100):
        yaw, pitch, roll = rng.uniform(-3, 3), rng.uniform(-1.4, 1.4), rng.uniform(-3, 3)
        got = zyx_from_quat(quat_from_zyx(yaw, pitch, roll))
        assert abs(angle_diff(got[0], yaw)) < 1e-9
        assert got[1] == pytest.approx(pitch, abs=1e-9)
        assert abs(angle_diff(got[2], roll)) < 1e-9


def test_pose_error_zero_for_identical():
    t = SE3((1, 2, 3), quat_from_axis_angle([0, 0, 1], 0.5))
    dp, dori = pose_error(t, t)
    np.testing.assert_allclose(dp, 0.0, atol=1e-15)
    np.testing.assert_allclose(dori, 0.0, atol=1e-12)
