"""Trajectory-tracking controller: pure pursuit + proportional speed."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from planbench.errors import PlanHorizonError
from planbench.geometry import norm_angle
from planbench.trajectory import DT, EgoState, Trajectory
from planbench.vehicle import ControlInput, ModelLimits, clamp_control

REQUIRED_HORIZON = 1.0  # s of plan the controller must see ahead


@dataclass(frozen=True)
class ControllerGains:
    lookahead_base: float = 2.0        # m
    lookahead_speed_gain: float = 0.5  # s
    speed_kp: float = 1.2              # 1/s
    steer_kp: float = 4.0              # 1/s


def _lookahead_point(plan: Trajectory, ex: float, ey: float,
                     dist: float) -> tuple[float, float, float]:
    """First plan point at ``dist`` from the ego, walking forward from the
    ego's projection onto the plan. Returns (x, y, actual distance)."""
    dx = plan.xs - ex
    dy = plan.ys - ey
    d = np.hypot(dx, dy)
    start = int(np.argmin(d))
    for i in range(start, len(plan)):
        if d[i] >= dist:
            if i == start:
                return float(plan.xs[i]), float(plan.ys[i]), float(d[i])
            # interpolate the crossing of the lookahead circle on segment i-1..i
            ax, ay = float(plan.xs[i - 1]), float(plan.ys[i - 1])
            bx, by = float(plan.xs[i]), float(plan.ys[i])
            fx, fy = ax - ex, ay - ey
            vx, vy = bx - ax, by - ay
            aa = vx * vx + vy * vy
            bb = 2.0 * (fx * vx + fy * vy)
            cc = fx * fx + fy * fy - dist * dist
            disc = bb * bb - 4.0 * aa * cc
            if aa <= 0.0 or disc < 0.0:
                return bx, by, float(d[i])
            t = (-bb + math.sqrt(disc)) / (2.0 * aa)
            t = min(max(t, 0.0), 1.0)
            return ax + t * vx, ay + t * vy, dist
    last = len(plan) - 1
    return float(plan.xs[last]), float(plan.ys[last]), float(d[last])


def track(ego: EgoState, plan: Trajectory, gains: ControllerGains,
          limits: ModelLimits, dt: float = DT) -> ControlInput:
    """One control step tracking ``plan`` from ``ego``.

    Lateral: pure pursuit about the rear axle with lookahead
    L = base + speed_gain * v; desired steering
    atan(2 * wheelbase * sin(alpha) / L). Longitudinal: proportional
    control toward the plan speed at the lookahead time
    (ego time + speed gain, so a stopping plan actually stops the ego).
    """
    if plan.t_end < ego.time + REQUIRED_HORIZON - 1e-9:
        raise PlanHorizonError(
            f"plan ends at {plan.t_end:.3f}s, need {ego.time + REQUIRED_HORIZON:.3f}s")

    lookahead = gains.lookahead_base + gains.lookahead_speed_gain * ego.velocity
    lx, ly, ldist = _lookahead_point(plan, ego.pose.x, ego.pose.y, lookahead)

    alpha = norm_angle(math.atan2(ly - ego.pose.y, lx - ego.pose.x)
                       - ego.pose.heading)
    if ldist > 1e-6:
        desired_steer = math.atan(2.0 * ego.footprint.wheelbase
                                  * math.sin(alpha) / ldist)
    else:
        desired_steer = ego.steering_angle
    steer_rate = gains.steer_kp * (desired_steer - ego.steering_angle)

    v_target = plan.speed_at(ego.time + gains.lookahead_speed_gain)
    accel = gains.speed_kp * (v_target - ego.velocity)
    return clamp_control(ControlInput(accel, steer_rate), ego, limits, dt)
