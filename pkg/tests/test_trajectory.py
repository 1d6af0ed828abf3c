"""Trajectory resampling and finite-difference differentiation."""

import math

import numpy as np
import pytest

from planbench.errors import ValidationError
from planbench.geometry import Pose2D
from planbench.trajectory import Trajectory, differentiate, resample_trajectory


def traj_from_rows(rows, speeds=None):
    return Trajectory([r[0] for r in rows], [r[1] for r in rows],
                      [r[2] for r in rows], [r[3] for r in rows], speeds)


def test_resample_linear_midpoint():
    t = traj_from_rows([(0.0, 0.0, 0.0, 0.0), (1.0, 10.0, 0.0, 0.0)])
    r = resample_trajectory(t, 0.5)
    assert abs(r.xs[1] - 5.0) < 1e-12 and abs(r.ys[1]) < 1e-12


def test_resample_heading_wraps_through_pi():
    t = traj_from_rows([(0.0, 0.0, 0.0, 3.0), (1.0, 1.0, 0.0, -3.0)])
    r = resample_trajectory(t, 0.5)
    assert abs(abs(r.headings[1]) - math.pi) < 1e-9


def test_resample_round_trip_on_grid():
    dt = 0.02
    ts = np.arange(0.0, 8.0 + 1e-12, dt)
    xs = 10.0 * ts
    ys = np.sin(ts)
    hs = np.arctan2(np.cos(ts), 10.0)
    t = Trajectory(ts, xs, ys, hs)
    r = resample_trajectory(t, dt)
    assert len(r) == len(t)
    for i in range(len(t)):
        p = r.pose_at(float(ts[i]))
        assert abs(p.x - xs[i]) < 1e-9
        assert abs(p.y - ys[i]) < 1e-9
    # idempotence
    r2 = resample_trajectory(r, dt)
    assert np.array_equal(r.xs, r2.xs) and np.array_equal(r.ys, r2.ys)


def test_resample_rejects_bad_dt():
    t = traj_from_rows([(0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0)])
    with pytest.raises(ValidationError):
        resample_trajectory(t, 0.0)


def test_trajectory_rejects_unsorted():
    with pytest.raises(ValidationError):
        traj_from_rows([(0.0, 0, 0, 0), (0.0, 1, 0, 0)])
    with pytest.raises(ValidationError):
        traj_from_rows([(0.0, 0, 0, 0)])


def test_differentiate_constant_velocity():
    ts = np.arange(0.0, 5.0, 0.1)
    t = Trajectory(ts, 10.0 * ts, np.zeros_like(ts), np.zeros_like(ts))
    p = differentiate(t)
    assert np.allclose(p.speed, 10.0, atol=1e-9)
    assert np.allclose(p.accel, 0.0, atol=1e-9)
    assert np.allclose(p.jerk, 0.0, atol=1e-9)
    assert len(p.speed) == len(t)


def test_differentiate_quadratic_accel():
    ts = np.arange(0.0, 5.0, 0.1)
    xs = 0.5 * 2.0 * ts ** 2
    t = Trajectory(ts, xs, np.zeros_like(ts), np.zeros_like(ts))
    p = differentiate(t)
    interior = slice(2, -2)
    assert np.max(np.abs(p.accel[interior] - 2.0)) < 1e-6


def test_differentiate_circular_yaw_rate():
    # radius 20 m at 10 m/s -> yaw rate 0.5 rad/s
    R, v = 20.0, 10.0
    ts = np.arange(0.0, 6.0, 0.1)
    ang = v / R * ts
    t = Trajectory(ts, R * np.sin(ang), R * (1 - np.cos(ang)),
                   np.array([math.atan2(math.cos(a), -math.sin(a)) + math.pi / 2
                             for a in ang]))
    # headings above equal ang (tangent direction for CCW circle start +x)
    p = differentiate(t)
    interior = slice(2, -2)
    assert np.max(np.abs(p.yaw_rate[interior] - 0.5)) < 1e-3
    assert np.max(np.abs(p.speed[interior] - 10.0)) < 1e-3
    assert np.max(np.abs(p.accel[interior])) < 1e-3


def test_differentiate_rejects_nonuniform():
    t = traj_from_rows([(0.0, 0, 0, 0), (0.1, 1, 0, 0), (0.25, 2, 0, 0),
                        (0.3, 3, 0, 0)])
    with pytest.raises(ValidationError):
        differentiate(t)


@pytest.mark.parametrize("dt", [0.1, 0.05])
def test_integrate_round_trip_second_order(dt):
    """Integrating the accel series recovers the speed series at O(dt^2)."""
    ts = np.arange(0.0, 10.0 + 1e-12, dt)
    speed = 10.0 + 2.0 * np.sin(0.7 * ts)
    arc = np.concatenate(([0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * dt)))
    t = Trajectory(ts, arc, np.zeros_like(ts), np.zeros_like(ts))
    p = differentiate(t)
    v_rec = p.speed[0] + np.concatenate(
        ([0.0], np.cumsum(0.5 * (p.accel[1:] + p.accel[:-1]) * dt)))
    err = float(np.max(np.abs(v_rec - p.speed)))
    assert err < 0.2 * dt ** 2 * 10.0
