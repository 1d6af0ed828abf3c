"""Procedural scenario generation.

Every scenario is built the same way: a small lane-graph map, a reference
path + speed profile, an expert log synthesized by rolling the bicycle
model under the pure-pursuit controller along that reference, and
analytically placed agent tracks. Generation is a pure function of
(seed, kind, index, city preset).

The four regression fixtures (intersection fork, dual merge gap,
overtake with oncoming traffic, braking with a tailgater) are always
included in a generated set.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from planbench.control import ControllerGains, track
from planbench.errors import ValidationError
from planbench.geometry import Pose2D, norm_angle
from planbench.metrics.scenario import tag_scenario
from planbench.scenario_io import Scenario, save_scenario
from planbench.semantic_map import Lane, SemanticMap, StopLine
from planbench.trajectory import (DT, EgoState, TrackedObject, Trajectory,
                                  VehicleDims)
from planbench.vehicle import ModelLimits
from planbench.vehicle import step as model_step

LANE_W = 3.5
CAR_L, CAR_W = 4.6, 1.8
CYCLIST_L, CYCLIST_W = 1.8, 0.6
PED_L, PED_W = 0.6, 0.6

CLEAN_KINDS = ("straight", "curve", "lane_change", "merge",
               "turn_left_unprotected", "turn_left_protected", "turn_right",
               "pedestrian_interaction", "cyclist_interaction",
               "close_proximity", "high_acceleration",
               "stop_controlled_intersection")
REGRESSION_KINDS = ("intersection_fork", "merge_gap", "overtake_oncoming",
                    "follower_tailgate")
ALL_KINDS = CLEAN_KINDS + REGRESSION_KINDS

CITIES = ("boston", "pittsburgh", "las_vegas", "singapore")


# ---------- reference paths ----------

def _densify(points: np.ndarray, step: float = 0.5) -> np.ndarray:
    """Resample a polyline at roughly uniform spacing."""
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        d = math.hypot(b[0] - a[0], b[1] - a[1])
        n = max(1, int(math.ceil(d / step)))
        for i in range(1, n + 1):
            out.append(a + (b - a) * (i / n))
    return np.asarray(out)


def straight_pts(x0, y0, x1, y1, step=2.0) -> np.ndarray:
    return _densify(np.array([[x0, y0], [x1, y1]], dtype=float), step)


def blend_pts(x0, x1, y0, y1, step=0.5) -> np.ndarray:
    """Cosine lateral blend from (x0, y0) to (x1, y1)."""
    n = max(8, int((x1 - x0) / step))
    xs = np.linspace(x0, x1, n)
    ys = y0 + (y1 - y0) * 0.5 * (1.0 - np.cos(np.pi * (xs - x0) / (x1 - x0)))
    return np.column_stack([xs, ys])


def arc_pts(cx, cy, r, a0, a1, step=0.5) -> np.ndarray:
    n = max(8, int(abs(a1 - a0) * r / step))
    ang = np.linspace(a0, a1, n)
    return np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)])


def join_paths(*parts: np.ndarray) -> np.ndarray:
    pts = [parts[0]]
    for p in parts[1:]:
        if math.hypot(p[0][0] - pts[-1][-1][0], p[0][1] - pts[-1][-1][1]) < 1e-6:
            p = p[1:]
        pts.append(p)
    return np.vstack(pts)


class ReferencePath:
    """Arc-length parameterized dense polyline."""

    def __init__(self, points: np.ndarray):
        self.pts = np.asarray(points, dtype=float)
        seg = np.hypot(np.diff(self.pts[:, 0]), np.diff(self.pts[:, 1]))
        keep = np.concatenate(([True], seg > 1e-9))
        self.pts = self.pts[keep]
        seg = np.hypot(np.diff(self.pts[:, 0]), np.diff(self.pts[:, 1]))
        self.cum = np.concatenate(([0.0], np.cumsum(seg)))
        self.length = float(self.cum[-1])

    def state_at(self, arc: float) -> tuple[float, float, float]:
        arc = min(max(arc, 0.0), self.length)
        i = int(np.searchsorted(self.cum, arc, side="right")) - 1
        i = min(max(i, 0), len(self.cum) - 2)
        seg = self.cum[i + 1] - self.cum[i]
        t = (arc - self.cum[i]) / seg if seg > 0 else 0.0
        x = self.pts[i, 0] + t * (self.pts[i + 1, 0] - self.pts[i, 0])
        y = self.pts[i, 1] + t * (self.pts[i + 1, 1] - self.pts[i, 1])
        h = math.atan2(self.pts[i + 1, 1] - self.pts[i, 1],
                       self.pts[i + 1, 0] - self.pts[i, 0])
        return x, y, h


def reference_trajectory(path: ReferencePath, speed_knots: list[tuple[float, float]],
                         duration: float) -> Trajectory:
    """Time-parameterized reference: path position at the integrated speed."""
    n = int(round(duration / DT)) + 1
    times = np.array([k * DT for k in range(n)])
    kt = np.array([k[0] for k in speed_knots])
    kv = np.array([k[1] for k in speed_knots])
    speeds = np.interp(times, kt, kv)
    arcs = np.concatenate(([0.0],
                           np.cumsum(0.5 * (speeds[1:] + speeds[:-1]) * DT)))
    xs = np.empty(n)
    ys = np.empty(n)
    hs = np.empty(n)
    for k in range(n):
        xs[k], ys[k], hs[k] = path.state_at(float(arcs[k]))
    return Trajectory(times, xs, ys, hs, speeds)


def synthesize_expert(path: ReferencePath, speed_knots, duration: float,
                      dims: VehicleDims, limits: ModelLimits,
                      gains: ControllerGains) -> list[EgoState]:
    """Closed-loop rollout tracking the reference: a feasible expert log."""
    from dataclasses import replace

    ref = reference_trajectory(path, speed_knots, duration + 2.0)
    x0, y0, h0 = path.state_at(0.0)
    ego = EgoState(0.0, Pose2D(x0, y0, h0), float(ref.speeds[0]), 0.0, 0.0,
                   dims)
    states = [ego]
    for k in range(int(round(duration / DT))):
        u = track(ego, ref, gains, limits, DT)
        # pin log times to the exact grid (no additive drift)
        ego = replace(model_step(ego, u, DT), time=(k + 1) * DT)
        states.append(ego)
    return states


# ---------- agent track builders ----------

def _track_from_fn(object_id, category, pos_fn, duration, length, width,
                   t0=0.0) -> TrackedObject:
    n = int(round((duration - t0) / DT)) + 1
    times = np.array([t0 + k * DT for k in range(n)])
    data = [pos_fn(float(t)) for t in times]
    xs = np.array([d[0] for d in data])
    ys = np.array([d[1] for d in data])
    hs = np.array([d[2] for d in data])
    vxs = np.array([d[3] for d in data])
    vys = np.array([d[4] for d in data])
    return TrackedObject(object_id, category, times, xs, ys, hs, vxs, vys,
                         length, width)


def straight_track(object_id, category, x0, y0, heading, speed, duration,
                   length=CAR_L, width=CAR_W, t0=0.0) -> TrackedObject:
    c, s = math.cos(heading), math.sin(heading)

    def fn(t):
        return (x0 + speed * c * (t - t0), y0 + speed * s * (t - t0),
                heading, speed * c, speed * s)

    return _track_from_fn(object_id, category, fn, duration, length, width, t0)


def stationary_track(object_id, x, y, heading, duration,
                     length=CAR_L, width=CAR_W) -> TrackedObject:
    def fn(_t):
        return (x, y, heading, 0.0, 0.0)

    return _track_from_fn(object_id, "vehicle", fn, duration, length, width)


def path_track(object_id, category, path: ReferencePath, start_arc, speed,
               duration, length=CAR_L, width=CAR_W) -> TrackedObject:
    def fn(t):
        arc = min(start_arc + speed * t, path.length)
        x, y, h = path.state_at(arc)
        v = speed if arc < path.length else 0.0
        return (x, y, h, v * math.cos(h), v * math.sin(h))

    return _track_from_fn(object_id, category, fn, duration, length, width)


# ---------- map builders ----------

def rect_poly(x0, y0, x1, y1) -> np.ndarray:
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def one_way_road(n_lanes: int, length: float, speed_limit: float = 15.0,
                 prefix: str = "L") -> tuple[list[Lane], np.ndarray]:
    """Parallel +x lanes; lane i sits at y = i * LANE_W (0 is rightmost)."""
    lanes = []
    for i in range(n_lanes):
        y = i * LANE_W
        lanes.append(Lane(
            f"{prefix}{i}", straight_pts(0.0, y, length, y), speed_limit,
            successors=(),
            left_neighbor=f"{prefix}{i + 1}" if i + 1 < n_lanes else None,
            right_neighbor=f"{prefix}{i - 1}" if i > 0 else None))
    poly = rect_poly(-5.0, -LANE_W / 2 - 1.5, length + 5.0,
                     (n_lanes - 1) * LANE_W + LANE_W / 2 + 1.5)
    return lanes, poly


def two_way_road(length: float, fwd_limit: float = 15.0,
                 opp_limit: float = 15.0) -> tuple[list[Lane], np.ndarray]:
    """One +x lane at y=0, one -x lane at y=LANE_W (no neighbor links)."""
    fwd = Lane("E0", straight_pts(0.0, 0.0, length, 0.0), fwd_limit)
    opp = Lane("O0", straight_pts(length, LANE_W, 0.0, LANE_W), opp_limit)
    poly = rect_poly(-5.0, -LANE_W / 2 - 1.5, length + 5.0,
                     LANE_W * 1.5 + 1.5)
    return [fwd, opp], poly


def curve_road(radius: float, sweep: float, speed_limit: float = 15.0
               ) -> tuple[list[Lane], np.ndarray]:
    """Single left-curving lane starting at the origin heading +x."""
    cx, cy = 0.0, radius
    lane_pts = arc_pts(cx, cy, radius, -math.pi / 2, -math.pi / 2 + sweep, 1.0)
    lane = Lane("C0", lane_pts, speed_limit)
    pad = 8.0 / radius  # sector overhang so footprints fit at both ends
    inner = arc_pts(cx, cy, radius - LANE_W / 2 - 1.5, -math.pi / 2 - pad,
                    -math.pi / 2 + sweep + pad, 2.0)
    outer = arc_pts(cx, cy, radius + LANE_W / 2 + 1.5, -math.pi / 2 + sweep + pad,
                    -math.pi / 2 - pad, 2.0)
    poly = np.vstack([inner, outer])
    return [lane], poly


def intersection_map(with_stop_for_conflict: bool = False,
                     with_ego_stop: bool = False,
                     speed_limit: float = 12.0) -> SemanticMap:
    """Four-arm crossing with through, left and right connectors for the
    northbound approach plus both east-west through movements."""
    half = 8.0
    ext = 90.0
    lanes = [
        # northbound approach + movements
        Lane("S_in", straight_pts(1.75, -ext, 1.75, -half), speed_limit,
             successors=("X_left", "X_right", "X_straight")),
        Lane("X_straight", straight_pts(1.75, -half, 1.75, half), speed_limit,
             successors=("N_out",)),
        Lane("N_out", straight_pts(1.75, half, 1.75, ext), speed_limit),
        Lane("X_left", arc_pts(-half, -half, half + 1.75, 0.0, math.pi / 2),
             speed_limit, successors=("W_out",)),
        Lane("W_out", straight_pts(-half, 1.75, -ext, 1.75), speed_limit),
        Lane("X_right", arc_pts(half, -half, half - 1.75, math.pi,
                                math.pi / 2), speed_limit,
             successors=("E_out",)),
        Lane("E_out", straight_pts(half, -1.75, ext, -1.75), speed_limit),
        # southbound through (the conflicting stream for a left turn)
        Lane("O_in", straight_pts(-1.75, ext, -1.75, half), speed_limit,
             successors=("O_mid",)),
        Lane("O_mid", straight_pts(-1.75, half, -1.75, -half), speed_limit,
             successors=("O_out",)),
        Lane("O_out", straight_pts(-1.75, -half, -1.75, -ext), speed_limit),
        # westbound through
        Lane("W_in", straight_pts(ext, 1.75, half, 1.75), speed_limit,
             successors=("W_mid",)),
        Lane("W_mid", straight_pts(half, 1.75, -half, 1.75), speed_limit,
             successors=("W_out",)),
    ]
    vertical = rect_poly(-5.25, -ext - 5.0, 5.25, ext + 5.0)
    horizontal = rect_poly(-ext - 5.0, -5.25, ext + 5.0, 5.25)
    stop_lines = []
    if with_stop_for_conflict:
        stop_lines.append(StopLine("O_mid", (-3.5, half + 0.5), (0.0, half + 0.5)))
    if with_ego_stop:
        stop_lines.append(StopLine("X_straight", (0.0, -half - 0.5),
                                   (3.5, -half - 0.5)))
    return SemanticMap(lanes, [vertical, horizontal], [], stop_lines)


# ---------- per-kind builders ----------

def _mk(scenario_id, kind, city, smap, expert, agents, goal=None, idm=None,
        seed=0) -> Scenario:
    scn = Scenario(scenario_id, kind, city, smap, expert, agents,
                   goal or expert[-1].pose, seed=seed)
    if idm is not None:
        scn.idm = idm
    scn.tags = tag_scenario(expert, agents, smap)
    return scn


def _dims_limits_gains():
    return VehicleDims(), ModelLimits(), ControllerGains()


def _build_straight(rng, city, ident):
    n_lanes = 8 if city == "las_vegas" else int(rng.integers(2, 4))
    length = float(rng.uniform(220.0, 300.0))
    v = float(rng.uniform(8.0, 12.0))
    lanes, poly = one_way_road(n_lanes, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    duration = min(18.0, (length - 40.0) / v)
    duration = round(duration / DT) * DT
    path = ReferencePath(straight_pts(2.0, 0.0, length - 5.0, 0.0))
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    agents = [straight_track("v0", "vehicle", 2.0 + 30.0 + v * 0.8, 0.0, 0.0,
                             v, duration)]
    if n_lanes > 1:
        agents.append(straight_track("v1", "vehicle",
                                     float(rng.uniform(10.0, 40.0)), LANE_W,
                                     0.0, v + 1.0, duration))
    return _mk(ident, "straight", city, smap, expert, agents)


def _build_curve(rng, city, ident):
    radius = float(rng.uniform(70.0, 110.0))
    sweep = float(rng.uniform(math.radians(50), math.radians(80)))
    v = min(10.0, math.sqrt(2.0 * radius) * 0.95)
    lanes, poly = curve_road(radius, sweep)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    arc_total = radius * sweep
    duration = round(min(18.0, (arc_total - 25.0) / v) / DT) * DT
    lane = smap.lanes["C0"]
    path = ReferencePath(np.column_stack([lane.xs, lane.ys]))
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    agents = [path_track("v0", "vehicle", path, 30.0 + v, v, duration)]
    return _mk(ident, "curve", city, smap, expert, agents)


def _lane_change_core(rng, city, ident, with_merge_traffic: bool):
    length = float(rng.uniform(220.0, 260.0))
    v = float(rng.uniform(9.0, 11.0))
    lanes, poly = one_way_road(2, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    x_sw = float(rng.uniform(60.0, 90.0))
    path = ReferencePath(join_paths(
        straight_pts(2.0, 0.0, x_sw, 0.0),
        blend_pts(x_sw, x_sw + 30.0, 0.0, LANE_W),
        straight_pts(x_sw + 30.0, LANE_W, length - 5.0, LANE_W)))
    duration = round(min(18.0, (path.length - 20.0) / v) / DT) * DT
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    agents = []
    if with_merge_traffic:
        # target-lane vehicle inside the 30 m merge window at the switch
        t_sw = (x_sw + 15.0) / v
        x_agent = (x_sw + 15.0) - float(rng.uniform(14.0, 22.0)) - v * t_sw
        agents.append(straight_track("v0", "vehicle", x_agent, LANE_W, 0.0,
                                     v, duration))
    else:
        agents.append(straight_track("v0", "vehicle", length * 0.7, LANE_W,
                                     0.0, v + 2.0, duration))
    kind = "merge" if with_merge_traffic else "lane_change"
    return _mk(ident, kind, city, smap, expert, agents)


def _build_lane_change(rng, city, ident):
    return _lane_change_core(rng, city, ident, False)


def _build_merge(rng, city, ident):
    return _lane_change_core(rng, city, ident, True)


def _turn_core(rng, city, ident, direction: str, protected: bool):
    smap = intersection_map(with_stop_for_conflict=protected)
    dims, limits, gains = _dims_limits_gains()
    v = 10.0
    vt = 5.0  # turn speed
    if direction == "left":
        lane_seq = ["S_in", "X_left", "W_out"]
    else:
        lane_seq = ["S_in", "X_right", "E_out"]
    pts = np.vstack([np.column_stack([smap.lanes[lid].xs, smap.lanes[lid].ys])
                     for lid in lane_seq])
    path = ReferencePath(pts)
    # brake to turn speed before the corner arc (arc 82 from the start),
    # hold it through the arc, then pick up again
    t_brake = (66.0 + float(rng.uniform(0.0, 4.0))) / v
    t_turn = t_brake + 2.2
    t_exit = t_turn + 28.0 / vt
    knots = [(0.0, v), (t_brake, v), (t_turn, vt), (t_exit, vt),
             (t_exit + 3.0, 9.0), (60.0, 9.0)]
    duration = round(min(20.0, (path.length - 25.0) / 7.0) / DT) * DT
    expert = synthesize_expert(path, knots, duration, dims, limits, gains)
    # oncoming southbound car that clears the junction before the turn
    agents = [straight_track("v0", "vehicle", -1.75, 60.0, -math.pi / 2.0,
                             9.0, duration)]
    kind = {"left": ("turn_left_protected" if protected
                     else "turn_left_unprotected"),
            "right": "turn_right"}[direction]
    return _mk(ident, kind, city, smap, expert, agents)


def _build_turn_left_unprotected(rng, city, ident):
    return _turn_core(rng, city, ident, "left", False)


def _build_turn_left_protected(rng, city, ident):
    return _turn_core(rng, city, ident, "left", True)


def _build_turn_right(rng, city, ident):
    return _turn_core(rng, city, ident, "right", False)


def _build_pedestrian(rng, city, ident):
    length = 200.0
    v = float(rng.uniform(8.0, 10.0))
    lanes, poly = one_way_road(2, length)
    x_cross = float(rng.uniform(55.0, 70.0))
    crosswalk = rect_poly(x_cross - 1.5, -LANE_W / 2 - 1.75,
                          x_cross + 1.5, LANE_W * 1.5 + 1.75)
    smap = SemanticMap(lanes, [poly], [crosswalk])
    dims, limits, gains = _dims_limits_gains()
    path = ReferencePath(straight_pts(2.0, 0.0, length - 10.0, 0.0))
    x_stop = x_cross - 9.0
    t_brake = (x_stop - 14.0) / v
    t_stop = t_brake + v / 2.4  # ~2.4 m/s^2 ramp, below the comfort bound
    wait = 4.0
    knots = [(0.0, v), (t_brake, v), (t_stop, 0.0), (t_stop + wait, 0.0),
             (t_stop + wait + 4.0, v), (60.0, v)]
    duration = round(min(24.0, t_stop + wait + 10.0) / DT) * DT
    expert = synthesize_expert(path, knots, duration, dims, limits, gains)
    ped = straight_track("ped0", "pedestrian", x_cross, -6.0, math.pi / 2.0,
                         1.4, duration, PED_L, PED_W)
    return _mk(ident, "pedestrian_interaction", city, smap, expert, [ped])


def _build_cyclist(rng, city, ident):
    length = 240.0
    v = float(rng.uniform(8.0, 10.0))
    lanes, poly = one_way_road(2, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    vc = 4.0
    x_c0 = float(rng.uniform(40.0, 55.0))
    y_c = -1.2
    # abeam position, used to time the avoidance bulge
    t_pass = (x_c0 - 2.0) / (v - vc)
    x_pass = 2.0 + v * t_pass
    path = ReferencePath(join_paths(
        straight_pts(2.0, 0.0, x_pass - 25.0, 0.0),
        blend_pts(x_pass - 25.0, x_pass - 6.0, 0.0, 1.3),
        straight_pts(x_pass - 6.0, 1.3, x_pass + 6.0, 1.3),
        blend_pts(x_pass + 6.0, x_pass + 25.0, 1.3, 0.0),
        straight_pts(x_pass + 25.0, 0.0, length - 10.0, 0.0)))
    duration = round(min(20.0, (length - 40.0) / v) / DT) * DT
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    cyc = straight_track("cyc0", "cyclist", x_c0, y_c, 0.0, vc, duration,
                         CYCLIST_L, CYCLIST_W)
    return _mk(ident, "cyclist_interaction", city, smap, expert, [cyc])


def _build_close_proximity(rng, city, ident):
    length = 200.0
    v = float(rng.uniform(7.0, 9.0))
    lanes, poly = one_way_road(2, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    x_parked = float(rng.uniform(70.0, 90.0))
    y_parked = 2.0  # half a car into the lane from the left edge
    path = ReferencePath(join_paths(
        straight_pts(2.0, 0.0, x_parked - 25.0, 0.0),
        blend_pts(x_parked - 25.0, x_parked - 6.0, 0.0, -0.55),
        straight_pts(x_parked - 6.0, -0.55, x_parked + 6.0, -0.55),
        blend_pts(x_parked + 6.0, x_parked + 25.0, -0.55, 0.0),
        straight_pts(x_parked + 25.0, 0.0, length - 10.0, 0.0)))
    duration = round(min(20.0, (length - 35.0) / v) / DT) * DT
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    parked = stationary_track("v0", x_parked, y_parked, 0.0, duration)
    return _mk(ident, "close_proximity", city, smap, expert, [parked])


def _build_high_acceleration(rng, city, ident):
    length = 260.0
    lanes, poly = one_way_road(2, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    v_hi = 12.0
    v_lo = 3.5
    t0 = float(rng.uniform(4.0, 6.0))
    t1 = t0 + (v_hi - v_lo) / 3.6  # ~ -3.6 m/s^2 braking ramp
    knots = [(0.0, v_hi), (t0, v_hi), (t1, v_lo), (t1 + 2.0, v_lo),
             (t1 + 6.0, 10.0), (60.0, 10.0)]
    path = ReferencePath(straight_pts(2.0, 0.0, length - 10.0, 0.0))
    duration = round(18.0 / DT) * DT
    expert = synthesize_expert(path, knots, duration, dims, limits, gains)
    agents = [straight_track("v0", "vehicle", 150.0, LANE_W, 0.0, 9.0,
                             duration)]
    return _mk(ident, "high_acceleration", city, smap, expert, agents)


def _build_stop_controlled(rng, city, ident):
    smap = intersection_map(with_ego_stop=True)
    dims, limits, gains = _dims_limits_gains()
    v = 9.0
    lane_seq = ["S_in", "X_straight", "N_out"]
    pts = np.vstack([np.column_stack([smap.lanes[lid].xs, smap.lanes[lid].ys])
                     for lid in lane_seq])
    path = ReferencePath(pts)
    # stop just before the line at y = -8.5 (approach starts at y = -90);
    # the tracking lag overshoots the reference stop by a couple of meters
    stop_arc = 90.0 - 14.0
    t_brake = (stop_arc - 14.0) / v
    t_stop = t_brake + v / 2.4
    wait = 4.0
    knots = [(0.0, v), (t_brake, v), (t_stop, 0.0), (t_stop + wait, 0.0),
             (t_stop + wait + 4.0, v), (60.0, v)]
    duration = round(min(26.0, t_stop + wait + 12.0) / DT) * DT
    expert = synthesize_expert(path, knots, duration, dims, limits, gains)
    agents = [straight_track("v0", "vehicle", -1.75, 70.0, -math.pi / 2.0,
                             8.0, duration)]
    return _mk(ident, "stop_controlled_intersection", city, smap, expert,
               agents)


# ---------- regression fixtures ----------

def _build_overtake_oncoming(rng, city, ident):
    """Blind replay of the recorded overtake meets a faster oncoming car.

    The opposing lane is slow (8 m/s limit); the shipped oncoming track
    runs 2 m/s above it, so the recorded overtake window no longer exists.
    Open-loop evaluation still scores the maneuver as perfectly human.
    """
    length = 220.0
    lanes, poly = two_way_road(length, fwd_limit=15.0, opp_limit=8.0)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    v = 10.0
    path = ReferencePath(join_paths(
        straight_pts(2.0, 0.0, 42.0, 0.0),
        blend_pts(42.0, 72.0, 0.0, LANE_W),
        straight_pts(72.0, LANE_W, 92.0, LANE_W),
        blend_pts(92.0, 122.0, LANE_W, 0.0),
        straight_pts(122.0, 0.0, length - 12.0, 0.0)))
    duration = 18.0
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    cyclist = straight_track("cyc0", "cyclist", 55.0, 0.0, 0.0, 3.0,
                             duration, CYCLIST_L, CYCLIST_W)
    oncoming = straight_track("v0", "vehicle", 150.0, LANE_W, math.pi,
                              10.0, duration)
    return _mk(ident, "overtake_oncoming", city, smap, expert,
               [cyclist, oncoming])


def _build_follower_tailgate(rng, city, ident):
    """Constant-speed cruise with a follower 12 m behind at equal speed."""
    length = 260.0
    lanes, poly = one_way_road(2, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    v = 10.0
    path = ReferencePath(straight_pts(40.0, 0.0, length - 10.0, 0.0))
    duration = 15.0
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    follower = straight_track("v0", "vehicle", 40.0 - 12.0 - CAR_L, 0.0, 0.0,
                              v, duration)
    return _mk(ident, "follower_tailgate", city, smap, expert, [follower])


def _build_intersection_fork(rng, city, ident):
    """Left and right exits both plausible; the goal resolves the fork."""
    scn = _turn_core(rng, city, ident, "left", False)
    scn.kind = "intersection_fork"
    return scn


def _build_merge_gap(rng, city, ident):
    """Two target-lane gaps; the expert takes the later one."""
    length = 260.0
    v = 10.0
    lanes, poly = one_way_road(2, length)
    smap = SemanticMap(lanes, [poly])
    dims, limits, gains = _dims_limits_gains()
    x_sw = 70.0
    path = ReferencePath(join_paths(
        straight_pts(2.0, 0.0, x_sw, 0.0),
        blend_pts(x_sw, x_sw + 30.0, 0.0, LANE_W),
        straight_pts(x_sw + 30.0, LANE_W, length - 10.0, LANE_W)))
    duration = 18.0
    expert = synthesize_expert(path, [(0.0, v), (duration, v)], duration,
                               dims, limits, gains)
    # two same-speed vehicles on the target lane: constant leads of 18 m
    # (near gap) and 45 m (far gap); the expert slots in behind the near one
    agents = [
        straight_track("v0", "vehicle", 2.0 + 45.0, LANE_W, 0.0, v, duration),
        straight_track("v1", "vehicle", 2.0 + 18.0, LANE_W, 0.0, v, duration),
    ]
    return _mk(ident, "merge_gap", city, smap, expert, agents)


_BUILDERS = {
    "straight": _build_straight,
    "curve": _build_curve,
    "lane_change": _build_lane_change,
    "merge": _build_merge,
    "turn_left_unprotected": _build_turn_left_unprotected,
    "turn_left_protected": _build_turn_left_protected,
    "turn_right": _build_turn_right,
    "pedestrian_interaction": _build_pedestrian,
    "cyclist_interaction": _build_cyclist,
    "close_proximity": _build_close_proximity,
    "high_acceleration": _build_high_acceleration,
    "stop_controlled_intersection": _build_stop_controlled,
    "overtake_oncoming": _build_overtake_oncoming,
    "follower_tailgate": _build_follower_tailgate,
    "intersection_fork": _build_intersection_fork,
    "merge_gap": _build_merge_gap,
}


# ---------- mirroring (left-hand traffic) ----------

def mirror_scenario(scn: Scenario) -> Scenario:
    """Reflect a scenario about the x axis (right-hand -> left-hand traffic)."""
    lanes = []
    for lane in scn.smap.lanes.values():
        lanes.append(Lane(lane.lane_id,
                          np.column_stack([lane.xs, -lane.ys]),
                          lane.speed_limit, lane.successors,
                          left_neighbor=lane.right_neighbor,
                          right_neighbor=lane.left_neighbor))
    smap = SemanticMap(
        lanes,
        [np.column_stack([p[:, 0], -p[:, 1]]) for p in scn.smap.driveable_area],
        [np.column_stack([p[:, 0], -p[:, 1]]) for p in scn.smap.crosswalks],
        [StopLine(sl.lane_id, (sl.p0[0], -sl.p0[1]), (sl.p1[0], -sl.p1[1]))
         for sl in scn.smap.stop_lines])
    expert = [EgoState(s.time, Pose2D(s.pose.x, -s.pose.y, -s.pose.heading),
                       s.velocity, s.acceleration, -s.steering_angle,
                       s.footprint) for s in scn.expert_log]
    agents = [TrackedObject(tr.object_id, tr.category, tr.times, tr.xs,
                            -tr.ys, np.array([norm_angle(-h) for h in
                                              tr.headings]),
                            tr.vxs, -tr.vys, tr.length, tr.width)
              for tr in scn.agents]
    goal = Pose2D(scn.goal.x, -scn.goal.y, -scn.goal.heading)
    out = Scenario(scn.scenario_id, scn.kind, scn.city, smap, expert, agents,
                   goal, scn.dims, scn.limits, scn.gains, scn.idm, [],
                   scn.seed)
    out.tags = tag_scenario(expert, agents, smap)
    return out


# ---------- public API ----------

def generate_scenarios(seed: int, counts: dict[str, int],
                       city: str = "boston",
                       include_regression: bool = True) -> list[Scenario]:
    """Deterministic scenario set: requested kinds plus regression fixtures."""
    if city not in CITIES:
        raise ValidationError(f"unknown city preset {city!r}")
    for kind in counts:
        if kind not in _BUILDERS:
            raise ValidationError(f"unsupported scenario kind {kind!r}")
    mirror = city == "singapore"
    out = []
    plan: list[tuple[str, int]] = []
    for kind in sorted(counts):
        for i in range(counts[kind]):
            plan.append((kind, i))
    if include_regression:
        for kind in REGRESSION_KINDS:
            if kind not in counts:
                plan.append((kind, 0))
    for kind, i in sorted(plan):
        rng = np.random.default_rng([seed, _kind_stream(kind), i])
        ident = f"{city}-{kind}-{i:03d}"
        scn = _BUILDERS[kind](rng, city, ident)
        scn.seed = seed
        if mirror:
            scn = mirror_scenario(scn)
        out.append(scn)
    out.sort(key=lambda s: s.scenario_id)
    return out


def _kind_stream(kind: str) -> int:
    return ALL_KINDS.index(kind)


def generate_to_dir(seed: int, counts: dict[str, int], out_dir: str | Path,
                    city: str = "boston",
                    include_regression: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for scn in generate_scenarios(seed, counts, city, include_regression):
        paths.append(save_scenario(scn, out_dir / f"{scn.scenario_id}.json"))
    return paths
