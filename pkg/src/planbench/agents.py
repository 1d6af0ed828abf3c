"""Background agents: exact log replay and an IDM lane-following policy.

Non-reactive simulation replays recorded tracks bit-exactly. In reactive
mode, vehicles follow their recorded lane path under the intelligent
driver model; pedestrians and cyclists always replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from planbench.errors import TrackExpired, ValidationError
from planbench.geometry import Pose2D, angle_diff, interp_angle
from planbench.semantic_map import SAME_LANE_GATE, LanePath, SemanticMap
from planbench.trajectory import ObjectState, TrackedObject

REPLAY_EXTRAPOLATION = 0.5   # s of constant-velocity grace beyond a track
PATH_EXTEND_MARGIN = 60.0    # m: extend lane path when this close to its end


@dataclass(frozen=True)
class IdmParams:
    desired_speed: float = 15.0   # m/s, from the lane speed limit
    min_gap: float = 2.0          # m
    time_headway: float = 1.5     # s
    max_accel: float = 1.5        # m/s^2
    comfort_decel: float = 2.0    # m/s^2
    exponent: float = 4.0

    def __post_init__(self):
        if min(self.desired_speed, self.min_gap, self.time_headway,
               self.max_accel, self.comfort_decel) <= 0.0:
            raise ValidationError("IDM parameters must be positive")


@dataclass(frozen=True)
class AgentRuntimeState:
    object_id: str
    lane_path: LanePath
    arc_length: float
    speed: float
    length: float
    width: float

    def object_state(self) -> ObjectState:
        pose = self.lane_path.pose_at(self.arc_length)
        return ObjectState(self.object_id, "vehicle", pose,
                           self.speed * math.cos(pose.heading),
                           self.speed * math.sin(pose.heading),
                           self.length, self.width)


def replay_state(track: TrackedObject, t: float) -> ObjectState:
    """Recorded state at time t; linear interpolation inside the span,
    constant-velocity extrapolation up to 0.5 s beyond either end."""
    if t < track.t_start - REPLAY_EXTRAPOLATION - 1e-9 \
            or t > track.t_end + REPLAY_EXTRAPOLATION + 1e-9:
        raise TrackExpired(f"{track.object_id} at t={t:.2f}s")
    times = track.times
    if t <= track.t_start:
        dt = t - track.t_start
        return ObjectState(track.object_id, track.category,
                           Pose2D(float(track.xs[0] + dt * track.vxs[0]),
                                  float(track.ys[0] + dt * track.vys[0]),
                                  float(track.headings[0])),
                           float(track.vxs[0]), float(track.vys[0]),
                           track.length, track.width)
    if t >= track.t_end:
        dt = t - track.t_end
        return ObjectState(track.object_id, track.category,
                           Pose2D(float(track.xs[-1] + dt * track.vxs[-1]),
                                  float(track.ys[-1] + dt * track.vys[-1]),
                                  float(track.headings[-1])),
                           float(track.vxs[-1]), float(track.vys[-1]),
                           track.length, track.width)
    i = int(np.searchsorted(times, t, side="right")) - 1
    i = min(i, len(times) - 2)
    frac = (t - times[i]) / (times[i + 1] - times[i])
    return ObjectState(
        track.object_id, track.category,
        Pose2D(float(track.xs[i] + frac * (track.xs[i + 1] - track.xs[i])),
               float(track.ys[i] + frac * (track.ys[i + 1] - track.ys[i])),
               interp_angle(float(track.headings[i]),
                            float(track.headings[i + 1]), float(frac))),
        float(track.vxs[i] + frac * (track.vxs[i + 1] - track.vxs[i])),
        float(track.vys[i] + frac * (track.vys[i + 1] - track.vys[i])),
        track.length, track.width)


def idm_accel(v: float, gap: float | None, v_lead: float,
              p: IdmParams) -> float:
    """IDM acceleration; free-flow term only when there is no leader.

    A non-positive gap signals an emergency: returns full braking.
    Output is clamped to [-2 * comfort_decel, max_accel].
    """
    if v < 0.0:
        raise ValidationError("IDM speed must be non-negative")
    if gap is not None and gap <= 0.0:
        return -2.0 * p.comfort_decel
    a = p.max_accel * (1.0 - (v / p.desired_speed) ** p.exponent)
    if gap is not None:
        s_star = (p.min_gap + v * p.time_headway
                  + v * (v - v_lead)
                  / (2.0 * math.sqrt(p.max_accel * p.comfort_decel)))
        a = p.max_accel * (1.0 - (v / p.desired_speed) ** p.exponent
                           - (s_star / gap) ** 2)
    return min(max(a, -2.0 * p.comfort_decel), p.max_accel)


def _find_leader(agent: AgentRuntimeState, world_objects: list[ObjectState],
                 path: LanePath) -> tuple[float, float] | None:
    """(bumper gap, leader speed along path) of the nearest object ahead."""
    best = None
    for obj in world_objects:
        if obj.object_id == agent.object_id:
            continue
        d, arc, lat = path.project(obj.pose.x, obj.pose.y)
        if abs(lat) > SAME_LANE_GATE:
            continue
        if arc <= agent.arc_length:
            continue
        gap = (arc - agent.arc_length) - (agent.length / 2.0 + obj.length / 2.0)
        key = (arc, obj.object_id)
        if best is None or key < best[0]:
            path_heading = path.pose_at(arc).heading
            v_along = (obj.vx * math.cos(path_heading)
                       + obj.vy * math.sin(path_heading))
            best = (key, gap, v_along)
    if best is None:
        return None
    return best[1], best[2]


def extend_lane_path(path: LanePath, arc: float) -> LanePath:
    """Append the straightest successor while the end is within reach."""
    smap = path.map
    lane_ids = list(path.lane_ids)
    total = path.total_length
    while total - arc < PATH_EXTEND_MARGIN:
        last = smap.lanes[lane_ids[-1]]
        if not last.successors:
            break
        end_heading = float(last.vertex_headings[-1])
        ranked = sorted(
            (abs(angle_diff(float(smap.lanes[s].vertex_headings[0]),
                            end_heading)), s)
            for s in last.successors)
        nxt = ranked[0][1]
        if nxt in lane_ids:  # avoid cycles
            break
        lane_ids.append(nxt)
        total += smap.lanes[nxt].length
    if len(lane_ids) == len(path.lane_ids):
        return path
    return LanePath(smap, lane_ids)


def reactive_step(agent: AgentRuntimeState, world_objects: list[ObjectState],
                  smap: SemanticMap, dt: float,
                  params: IdmParams) -> AgentRuntimeState | None:
    """Advance one IDM step along the agent's lane path.

    ``world_objects`` is the previous-step snapshot (Jacobi update), ego
    included. Returns None when the path is exhausted.
    """
    path = extend_lane_path(agent.lane_path, agent.arc_length)
    p = replace(params,
                desired_speed=min(params.desired_speed,
                                  path.speed_limit_at(agent.arc_length)))
    lead = _find_leader(agent, world_objects, path)
    if lead is None:
        a = idm_accel(agent.speed, None, 0.0, p)
    else:
        a = idm_accel(agent.speed, lead[0], lead[1], p)
    speed = max(0.0, agent.speed + a * dt)
    arc = agent.arc_length + speed * dt
    if arc > path.total_length:
        if not path.last_lane().successors:
            return None  # despawn at the end of the road
        arc = path.total_length
    return replace(agent, lane_path=path, arc_length=arc, speed=speed)


def derive_lane_path(smap: SemanticMap, track: TrackedObject) -> LanePath:
    """Successor-connected lane sequence matching a recorded track."""
    lane_ids = [smap.nearest_lane(float(track.xs[0]), float(track.ys[0]))[0]]
    for i in range(1, len(track.times)):
        lid = smap.nearest_lane(float(track.xs[i]), float(track.ys[i]))[0]
        if lid == lane_ids[-1]:
            continue
        if lid in smap.lanes[lane_ids[-1]].successors:
            lane_ids.append(lid)
        # other transitions (neighbor flicker, projection noise) are skipped
    return LanePath(smap, lane_ids)


def initial_runtime_state(smap: SemanticMap, track: TrackedObject
                          ) -> AgentRuntimeState:
    """Reactive start state: recorded position and speed at track start."""
    path = derive_lane_path(smap, track)
    _, arc, _ = path.project(float(track.xs[0]), float(track.ys[0]))
    speed = math.hypot(float(track.vxs[0]), float(track.vys[0]))
    return AgentRuntimeState(track.object_id, path, arc, speed,
                             track.length, track.width)
