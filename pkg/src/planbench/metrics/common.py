"""Common per-scenario metrics: traffic safety, human similarity,
vehicle dynamics and goal achievement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from planbench import kernels
from planbench.errors import ValidationError
from planbench.semantic_map import LanePath, Route, SemanticMap, lead_agent, \
    route_progress
from planbench.trajectory import (DT, EgoState, ObjectState,
                                  differentiate, ego_log_trajectory,
                                  object_box_array)

TTC_HORIZON = 5.0        # s
TTC_COARSE = 0.05        # s sweep resolution
TTC_TOL = 1e-3           # s bisection tolerance
TIME_GAP_SPEED_FLOOR = 0.5   # m/s, avoids division blow-up at standstill
PASSING_LATERAL_WINDOW = 3.0  # m
STOP_SPEED = 0.1         # m/s
STOP_HOLD = 1.0          # s
RATIO_EPS = 0.01


@dataclass(frozen=True)
class ComfortLimits:
    max_long_accel: float = 3.0    # m/s^2
    max_lat_accel: float = 3.0     # m/s^2
    max_jerk: float = 5.0          # m/s^3
    max_yaw_rate: float = 1.0      # rad/s
    max_steer_rate: float = 0.5    # rad/s


@dataclass
class MetricValue:
    name: str
    value: float | None
    unit: str
    series: list | None = None

    def present(self) -> bool:
        return self.value is not None


def _ego_box_array(ego: EgoState) -> np.ndarray:
    cx, cy = ego.center()
    vx, vy = ego.velocity_xy()
    return np.array([cx, cy, ego.pose.heading, ego.footprint.length / 2.0,
                     ego.footprint.width / 2.0, vx, vy])


def ttc_at_step(ego: EgoState, agents: list[ObjectState],
                horizon: float = TTC_HORIZON) -> float | None:
    """Time to first footprint overlap under constant-velocity motion.

    Sweeps the horizon in 0.05 s increments, then bisects the bracketing
    interval to 1e-3 s. None when nothing overlaps; 0 when already
    overlapping.
    """
    if not agents:
        return None
    others = np.stack([object_box_array(o) for o in agents])
    tau = kernels.first_collision_time(_ego_box_array(ego), others,
                                       horizon, TTC_COARSE, TTC_TOL)
    return None if tau < 0.0 else float(tau)


def _percentile(values: list[float], q: float) -> float | None:
    if not values:
        return None
    return float(np.percentile(np.asarray(values), q))


def safety_metrics(simlog, smap: SemanticMap, route: Route) -> dict[str, MetricValue]:
    """Collision, off-road, lead time gap, TTC and passing profile."""
    steps = simlog.steps
    collision = False
    collision_time = None
    collision_agent = None
    offroad_steps = 0
    time_gaps: list[float] = []
    ttcs: list[float] = []
    path = LanePath(smap, route.lane_ids)
    passing_open: dict[str, tuple[float, float]] = {}
    passing_records: list[list[float]] = []

    for st in steps:
        ego = st.ego
        ebox = ego.box()
        ea = _ego_box_array(ego)
        if not collision:
            for obj in st.agents:
                if kernels.box_overlap(ea[0], ea[1], ea[2], ea[3], ea[4],
                                       obj.pose.x, obj.pose.y,
                                       obj.pose.heading, obj.length / 2.0,
                                       obj.width / 2.0):
                    collision = True
                    collision_time = st.time
                    collision_agent = obj.object_id
                    break
        if not smap.in_driveable_area(ebox):
            offroad_steps += 1
        lead = lead_agent(smap, path, ego, list(st.agents))
        if lead is not None:
            time_gaps.append(max(lead[1], 0.0)
                             / max(ego.velocity, TIME_GAP_SPEED_FLOOR))
        tau = ttc_at_step(ego, list(st.agents))
        if tau is not None:
            ttcs.append(tau)

        # passing profile in the ego frame
        ch = math.cos(ego.pose.heading)
        sh = math.sin(ego.pose.heading)
        ecx, ecy = ego.center()
        seen = set()
        for obj in st.agents:
            rx = obj.pose.x - ecx
            ry = obj.pose.y - ecy
            dlong = rx * ch + ry * sh
            dlat = -rx * sh + ry * ch
            if abs(dlong) >= (ego.footprint.length + obj.length) / 2.0:
                continue
            clearance = abs(dlat) - (ego.footprint.width + obj.width) / 2.0
            if clearance >= PASSING_LATERAL_WINDOW:
                continue
            rel_speed = math.hypot(ego.velocity * ch - obj.vx,
                                   ego.velocity * sh - obj.vy)
            seen.add(obj.object_id)
            prev = passing_open.get(obj.object_id)
            if prev is None or clearance < prev[0]:
                passing_open[obj.object_id] = (max(clearance, 0.0), rel_speed)
        for oid in list(passing_open):
            if oid not in seen:  # interval closed, emit one record
                passing_records.append(list(passing_open.pop(oid)))
    for oid in sorted(passing_open):
        passing_records.append(list(passing_open[oid]))

    n = max(len(steps), 1)
    bins: dict[int, list[float]] = {}
    for clearance, speed in passing_records:
        bins.setdefault(int(clearance / 0.5), []).append(speed)
    binned = [[(b + 0.5) * 0.5, float(np.mean(v))] for b, v in sorted(bins.items())]

    out = {
        "collision": MetricValue("collision", 1.0 if collision else 0.0, "bool"),
        "off_road_fraction": MetricValue("off_road_fraction",
                                         offroad_steps / n, "fraction"),
        "off_road_any": MetricValue("off_road_any",
                                    1.0 if offroad_steps else 0.0, "bool"),
        "time_gap_min": MetricValue("time_gap_min", min(time_gaps, default=None),
                                    "s"),
        "time_gap_p10": MetricValue("time_gap_p10", _percentile(time_gaps, 10.0),
                                    "s"),
        "ttc_min": MetricValue("ttc_min", min(ttcs, default=None), "s"),
        "ttc_p10": MetricValue("ttc_p10", _percentile(ttcs, 10.0), "s"),
        "passing_profile": MetricValue("passing_profile",
                                       float(len(passing_records)), "records",
                                       series=passing_records),
        "passing_binned": MetricValue("passing_binned", None, "m->m/s",
                                      series=binned),
    }
    if collision:
        out["collision"].series = [[collision_time, collision_agent]]
    return out


def _first_stop(times: np.ndarray, speeds: np.ndarray) -> int | None:
    """Index where the first sustained (>= 1 s) standstill begins."""
    hold = int(round(STOP_HOLD / DT))
    run = 0
    for i, v in enumerate(speeds):
        if v < STOP_SPEED:
            run += 1
            if run >= hold:
                return i - run + 1
        else:
            run = 0
    return None


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0


def _ratio(ego_rms: float, expert_rms: float) -> float:
    # both effectively zero counts as human-equal
    if ego_rms < RATIO_EPS and expert_rms < RATIO_EPS:
        return 1.0
    return ego_rms / max(expert_rms, RATIO_EPS)


def similarity_metrics(simlog, expert_log: list[EgoState],
                       route: Route) -> dict[str, MetricValue]:
    """Driven-vs-expert errors in the expert path frame."""
    absent = {name: MetricValue(name, None, unit) for name, unit in
              [("long_vel_err", "m/s"), ("lat_pos_err", "m"),
               ("stop_pos_err", "m"), ("jerk_ratio", "ratio"),
               ("accel_ratio", "ratio")]}
    if expert_log[-1].time - expert_log[0].time < 2.0 - 1e-9:
        return absent

    exp_traj = ego_log_trajectory(expert_log)
    drv_states = simlog.ego_states()
    t_end = min(exp_traj.t_end, drv_states[-1].time)
    drv_states = [s for s in drv_states if s.time <= t_end + 1e-9]
    if len(drv_states) < 4:
        return absent
    drv_traj = ego_log_trajectory(drv_states)

    exp_arc = exp_traj.arc_lengths()
    exp_speed = exp_traj.speeds
    # drop plateau duplicates so speed-by-arc interpolation is well defined
    keep = np.concatenate(([True], np.diff(exp_arc) > 1e-9))
    arc_knots = exp_arc[keep]
    speed_knots = exp_speed[keep]

    svals = np.empty(len(drv_traj))
    dvals = np.empty(len(drv_traj))
    for i in range(len(drv_traj)):
        _, s, d = kernels.project_polyline(float(drv_traj.xs[i]),
                                           float(drv_traj.ys[i]),
                                           exp_traj.xs, exp_traj.ys)
        svals[i] = s
        dvals[i] = d
    v_exp_at_s = np.interp(svals, arc_knots, speed_knots)
    long_vel_err = _rms(drv_traj.speeds - v_exp_at_s)
    lat_pos_err = _rms(dvals)

    stop_pos_err = None
    i_exp = _first_stop(exp_traj.times, exp_traj.speeds)
    i_drv = _first_stop(drv_traj.times, drv_traj.speeds)
    if i_exp is not None and i_drv is not None:
        stop_pos_err = abs(float(svals[i_drv]) - float(exp_arc[i_exp]))

    exp_prof = differentiate(exp_traj)
    drv_prof = differentiate(drv_traj)
    jerk_ratio = _ratio(_rms(drv_prof.jerk), _rms(exp_prof.jerk))
    accel_ratio = _ratio(_rms(drv_prof.accel), _rms(exp_prof.accel))

    return {
        "long_vel_err": MetricValue("long_vel_err", long_vel_err, "m/s"),
        "lat_pos_err": MetricValue("lat_pos_err", lat_pos_err, "m"),
        "stop_pos_err": MetricValue("stop_pos_err", stop_pos_err, "m"),
        "jerk_ratio": MetricValue("jerk_ratio", jerk_ratio, "ratio"),
        "accel_ratio": MetricValue("accel_ratio", accel_ratio, "ratio"),
    }


def count_oscillations(steer: np.ndarray, amplitude: float = 0.02) -> int:
    """Steering direction reversals with swing above the amplitude."""
    count = 0
    last_extreme = float(steer[0])
    direction = 0
    for v in steer[1:]:
        v = float(v)
        dv = v - last_extreme
        if direction >= 0 and dv < -amplitude:
            if direction > 0:
                count += 1
            direction = -1
            last_extreme = v
        elif direction <= 0 and dv > amplitude:
            if direction < 0:
                count += 1
            direction = 1
            last_extreme = v
        elif (direction >= 0 and v > last_extreme) or \
                (direction <= 0 and v < last_extreme):
            last_extreme = v
    return count


def dynamics_metrics(simlog, limits: ComfortLimits | None = None
                     ) -> dict[str, MetricValue]:
    """Comfort (jerk, accel, steering rate, oscillation) and feasibility."""
    limits = limits or ComfortLimits()
    states = simlog.ego_states()
    if states[-1].time - states[0].time < 1.0 - 1e-9:
        raise ValidationError("simlog shorter than 1 s")
    traj = ego_log_trajectory(states)
    prof = differentiate(traj)
    dt = float(traj.times[1] - traj.times[0])
    steer = np.array([s.steering_angle for s in states])
    steer_rate = np.gradient(steer, dt, edge_order=2)
    lat_accel = prof.speed * prof.yaw_rate

    minutes = max((states[-1].time - states[0].time) / 60.0, 1e-9)
    osc = count_oscillations(steer) / minutes

    def frac(series, bound):
        return float(np.mean(np.abs(series) > bound))

    values = {
        "jerk_max": (float(np.max(np.abs(prof.jerk))), "m/s^3"),
        "jerk_rms": (_rms(prof.jerk), "m/s^3"),
        "accel_max": (float(np.max(np.abs(prof.accel))), "m/s^2"),
        "accel_rms": (_rms(prof.accel), "m/s^2"),
        "lat_accel_max": (float(np.max(np.abs(lat_accel))), "m/s^2"),
        "steer_rate_max": (float(np.max(np.abs(steer_rate))), "rad/s"),
        "steer_rate_rms": (_rms(steer_rate), "rad/s"),
        "yaw_rate_max": (float(np.max(np.abs(prof.yaw_rate))), "rad/s"),
        "yaw_rate_rms": (_rms(prof.yaw_rate), "rad/s"),
        "oscillation": (osc, "1/min"),
        "long_accel_violation": (frac(prof.accel, limits.max_long_accel),
                                 "fraction"),
        "lat_accel_violation": (frac(lat_accel, limits.max_lat_accel),
                                "fraction"),
        "jerk_violation": (frac(prof.jerk, limits.max_jerk), "fraction"),
        "yaw_rate_violation": (frac(prof.yaw_rate, limits.max_yaw_rate),
                               "fraction"),
        "steer_rate_violation": (frac(steer_rate, limits.max_steer_rate),
                                 "fraction"),
    }
    return {k: MetricValue(k, v, u) for k, (v, u) in values.items()}


def goal_metrics(simlog, smap: SemanticMap, route: Route) -> dict[str, MetricValue]:
    final = simlog.ego_states()[-1]
    progress = route_progress(smap, route, final.pose.x, final.pose.y)
    dist = math.hypot(final.pose.x - route.goal.x, final.pose.y - route.goal.y)
    return {
        "route_progress": MetricValue("route_progress", progress, "fraction"),
        "final_goal_distance": MetricValue("final_goal_distance", dist, "m"),
    }
