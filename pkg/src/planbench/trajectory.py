"""Kinematic domain types, trajectory resampling and differentiation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from planbench.errors import ValidationError
from planbench.geometry import OrientedBox, Pose2D, interp_angle, norm_angle

# Simulation / log grid used throughout the artifact.
DT = 0.1


@dataclass(frozen=True)
class VehicleDims:
    length: float = 4.6   # m
    width: float = 1.8    # m
    wheelbase: float = 3.0           # m
    rear_axle_to_center: float = 1.4  # m, pose reference is the rear axle

    def __post_init__(self):
        if min(self.length, self.width, self.wheelbase,
               self.rear_axle_to_center) <= 0.0:
            raise ValidationError("vehicle dimensions must be positive")
        if self.wheelbase >= self.length:
            raise ValidationError("wheelbase must be smaller than length")


@dataclass(frozen=True)
class EgoState:
    """Simulated ego at one timestep; pose reference is the rear axle center."""

    time: float
    pose: Pose2D
    velocity: float          # m/s, signed along heading
    acceleration: float      # m/s^2
    steering_angle: float    # rad
    footprint: VehicleDims = field(default_factory=VehicleDims)

    def center(self) -> tuple[float, float]:
        c = self.footprint.rear_axle_to_center
        return (self.pose.x + c * math.cos(self.pose.heading),
                self.pose.y + c * math.sin(self.pose.heading))

    def box(self) -> OrientedBox:
        cx, cy = self.center()
        return OrientedBox(Pose2D(cx, cy, self.pose.heading),
                           self.footprint.length / 2.0,
                           self.footprint.width / 2.0)

    def velocity_xy(self) -> tuple[float, float]:
        return (self.velocity * math.cos(self.pose.heading),
                self.velocity * math.sin(self.pose.heading))


class Trajectory:
    """Time-stamped poses with optional speeds, strictly increasing times."""

    __slots__ = ("times", "xs", "ys", "headings", "speeds")

    def __init__(self, times, xs, ys, headings, speeds=None):
        self.times = np.asarray(times, dtype=np.float64)
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        self.headings = np.asarray(headings, dtype=np.float64)
        self.speeds = None if speeds is None else np.asarray(speeds, np.float64)
        n = len(self.times)
        if n < 2:
            raise ValidationError("trajectory needs at least 2 samples")
        if not (len(self.xs) == len(self.ys) == len(self.headings) == n):
            raise ValidationError("trajectory arrays must share one length")
        if self.speeds is not None and len(self.speeds) != n:
            raise ValidationError("speed series length mismatch")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValidationError("trajectory times must strictly increase")

    @classmethod
    def from_samples(cls, samples, speeds=None) -> "Trajectory":
        """Build from an iterable of (time, Pose2D)."""
        samples = list(samples)
        return cls([s[0] for s in samples],
                   [s[1].x for s in samples],
                   [s[1].y for s in samples],
                   [s[1].heading for s in samples],
                   speeds)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def pose_at(self, t: float) -> Pose2D:
        """Linear position / shortest-arc heading interpolation at time t."""
        i, frac = self._locate(t)
        if frac == 0.0:
            return Pose2D(float(self.xs[i]), float(self.ys[i]),
                          float(self.headings[i]))
        return Pose2D(
            float(self.xs[i] + frac * (self.xs[i + 1] - self.xs[i])),
            float(self.ys[i] + frac * (self.ys[i + 1] - self.ys[i])),
            interp_angle(float(self.headings[i]), float(self.headings[i + 1]),
                         frac))

    def speed_at(self, t: float) -> float:
        """Speed at time t, from stored speeds or chord lengths."""
        i, frac = self._locate(t)
        if self.speeds is not None:
            if frac == 0.0:
                return float(self.speeds[i])
            return float(self.speeds[i]
                         + frac * (self.speeds[i + 1] - self.speeds[i]))
        dt = self.times[i + 1] - self.times[i] if i + 1 < len(self) else None
        if dt is None:
            i -= 1
            dt = self.times[i + 1] - self.times[i]
        chord = math.hypot(self.xs[i + 1] - self.xs[i],
                           self.ys[i + 1] - self.ys[i])
        return chord / float(dt)

    def _locate(self, t: float) -> tuple[int, float]:
        if t <= self.times[0]:
            return 0, 0.0
        if t >= self.times[-1]:
            return len(self) - 1, 0.0
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        frac = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return i, float(frac)

    def arc_lengths(self) -> np.ndarray:
        """Cumulative chord length, starting at 0."""
        seg = np.hypot(np.diff(self.xs), np.diff(self.ys))
        return np.concatenate(([0.0], np.cumsum(seg)))


@dataclass(frozen=True)
class TrackedObject:
    """One background agent track; states are time-sorted."""

    object_id: str
    category: str                 # vehicle | pedestrian | cyclist
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    headings: np.ndarray
    vxs: np.ndarray
    vys: np.ndarray
    length: float
    width: float

    def __post_init__(self):
        if self.category not in ("vehicle", "pedestrian", "cyclist"):
            raise ValidationError(f"unknown category {self.category!r}")
        if len(self.times) == 0:
            raise ValidationError("empty track")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValidationError("track times must strictly increase")

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class ObjectState:
    """Snapshot of one background agent."""

    object_id: str
    category: str
    pose: Pose2D
    vx: float
    vy: float
    length: float
    width: float

    def box(self) -> OrientedBox:
        return OrientedBox(self.pose, self.length / 2.0, self.width / 2.0)

    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class KinematicProfile:
    """Finite-difference series derived from a uniformly sampled trajectory."""

    times: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    jerk: np.ndarray
    yaw_rate: np.ndarray
    yaw_accel: np.ndarray


def resample_trajectory(traj: Trajectory, dt: float) -> Trajectory:
    """Resample onto the grid t0, t0+dt, ... <= t_end.

    Positions and speeds interpolate linearly, headings along the shortest
    arc. Idempotent when the input is already on the grid.
    """
    if dt <= 0.0:
        raise ValidationError("dt must be positive")
    n = int(math.floor((traj.t_end - traj.t_start) / dt + 1e-9)) + 1
    if n < 2:
        raise ValidationError("trajectory shorter than one resample step")
    times = np.empty(n)
    xs = np.empty(n)
    ys = np.empty(n)
    hs = np.empty(n)
    sp = None if traj.speeds is None else np.empty(n)
    for k in range(n):
        t = traj.t_start + k * dt
        times[k] = t
        i, frac = traj._locate(t)
        if frac == 0.0:
            xs[k] = traj.xs[i]
            ys[k] = traj.ys[i]
            hs[k] = traj.headings[i]
            if sp is not None:
                sp[k] = traj.speeds[i]
        else:
            xs[k] = traj.xs[i] + frac * (traj.xs[i + 1] - traj.xs[i])
            ys[k] = traj.ys[i] + frac * (traj.ys[i + 1] - traj.ys[i])
            hs[k] = interp_angle(float(traj.headings[i]),
                                 float(traj.headings[i + 1]), frac)
            if sp is not None:
                sp[k] = (traj.speeds[i]
                         + frac * (traj.speeds[i + 1] - traj.speeds[i]))
    return Trajectory(times, xs, ys, hs, sp)


def differentiate(traj: Trajectory) -> KinematicProfile:
    """Speed/accel/jerk and yaw-rate/yaw-accel series via finite differences.

    Central differences in the interior, second-order one-sided stencils at
    the boundaries (numpy.gradient edge_order=2), so every series has the
    input length. Requires uniform sampling and >= 4 samples.
    """
    n = len(traj)
    if n < 4:
        raise ValidationError("need at least 4 samples to differentiate")
    steps = np.diff(traj.times)
    dt = float(steps[0])
    if np.any(np.abs(steps - dt) > 1e-6 * max(dt, 1.0)):
        raise ValidationError("trajectory is not uniformly sampled")

    vx = np.gradient(traj.xs, dt, edge_order=2)
    vy = np.gradient(traj.ys, dt, edge_order=2)
    speed = np.hypot(vx, vy)
    accel = np.gradient(speed, dt, edge_order=2)
    jerk = np.gradient(accel, dt, edge_order=2)

    unwrapped = np.unwrap(traj.headings)
    yaw_rate = np.gradient(unwrapped, dt, edge_order=2)
    yaw_accel = np.gradient(yaw_rate, dt, edge_order=2)
    return KinematicProfile(traj.times.copy(), speed, accel, jerk,
                            yaw_rate, yaw_accel)


def ego_log_trajectory(states: list[EgoState]) -> Trajectory:
    """Trajectory view (rear-axle poses + speeds) of an ego state log."""
    return Trajectory([s.time for s in states],
                      [s.pose.x for s in states],
                      [s.pose.y for s in states],
                      [s.pose.heading for s in states],
                      [s.velocity for s in states])


def object_box_array(state: ObjectState) -> np.ndarray:
    """Kernel-format (7,) array for an object snapshot."""
    return np.array([state.pose.x, state.pose.y, state.pose.heading,
                     state.length / 2.0, state.width / 2.0,
                     state.vx, state.vy])


def grid_index(t: float, dt: float = DT) -> int:
    return int(round(t / dt))


def normalize_headings(headings) -> np.ndarray:
    return np.array([norm_angle(float(h)) for h in headings])
