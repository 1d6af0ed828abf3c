"""Kinematic bicycle model with bounded controls.

The pose reference is the rear axle center; integration is 2nd-order
Runge-Kutta (midpoint). All functions are pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from planbench.errors import ValidationError
from planbench.geometry import Pose2D, norm_angle
from planbench.trajectory import DT, EgoState


@dataclass(frozen=True)
class ControlInput:
    acceleration: float    # m/s^2
    steering_rate: float   # rad/s

    def __post_init__(self):
        if not (math.isfinite(self.acceleration)
                and math.isfinite(self.steering_rate)):
            raise ValidationError("control input must be finite")


@dataclass(frozen=True)
class ModelLimits:
    max_speed: float = 15.0       # m/s
    min_accel: float = -4.0       # m/s^2
    max_accel: float = 2.5        # m/s^2
    max_steer: float = 0.6        # rad
    max_steer_rate: float = 0.5   # rad/s

    def __post_init__(self):
        if not (self.min_accel < 0.0 < self.max_accel):
            raise ValidationError("accel limits must straddle zero")
        if self.max_steer <= 0.0 or self.max_steer_rate <= 0.0:
            raise ValidationError("steer limits must be positive")


def clamp_control(u: ControlInput, state: EgoState, limits: ModelLimits,
                  dt: float = DT) -> ControlInput:
    """Clip controls to the model limits.

    Acceleration is additionally clipped so speed stays in [0, max_speed]
    after one dt step (no reverse gear), steering rate so |steer| stays
    within max_steer.
    """
    a = min(max(u.acceleration, limits.min_accel), limits.max_accel)
    a = min(max(a, -state.velocity / dt), (limits.max_speed - state.velocity) / dt)
    r = min(max(u.steering_rate, -limits.max_steer_rate), limits.max_steer_rate)
    r = min(max(r, (-limits.max_steer - state.steering_angle) / dt),
            (limits.max_steer - state.steering_angle) / dt)
    return ControlInput(a, r)


def step(state: EgoState, u: ControlInput, dt: float = DT) -> EgoState:
    """One midpoint-RK2 integration step of the bicycle dynamics.

    xdot = v cos(h), ydot = v sin(h), hdot = v tan(steer)/wheelbase,
    vdot = a, steerdot = steering rate. Expects pre-clamped controls.
    """
    if not 0.0 < dt <= 0.2:
        raise ValidationError(f"dt must be in (0, 0.2], got {dt}")
    wb = state.footprint.wheelbase
    x = state.pose.x
    y = state.pose.y
    h = state.pose.heading
    v = state.velocity
    d = state.steering_angle

    # midpoint stage
    vm = v + 0.5 * dt * u.acceleration
    dm = d + 0.5 * dt * u.steering_rate
    hm = h + 0.5 * dt * (v * math.tan(d) / wb)

    x2 = x + dt * (vm * math.cos(hm))
    y2 = y + dt * (vm * math.sin(hm))
    h2 = norm_angle(h + dt * (vm * math.tan(dm) / wb))
    v2 = v + dt * u.acceleration
    d2 = d + dt * u.steering_rate
    return replace(state,
                   time=state.time + dt,
                   pose=Pose2D(x2, y2, h2),
                   velocity=v2,
                   acceleration=u.acceleration,
                   steering_angle=d2)
