"""Scenario tagging and the tag-specific metric set.

Detectors are rule based and deterministic; detection thresholds are
declared here and echoed into report headers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from planbench import kernels
from planbench.errors import ValidationError
from planbench.geometry import (Pose2D, angle_diff, point_in_polygon,
                                segment_intersection_point,
                                segment_point_distance)
from planbench.semantic_map import LanePath, SemanticMap
from planbench.trajectory import (DT, EgoState, ObjectState, TrackedObject,
                                  differentiate, ego_log_trajectory)

TAG_KINDS = ("lane_change", "merge", "turn_left_unprotected",
             "turn_left_protected", "turn_right", "pedestrian_interaction",
             "cyclist_interaction", "close_proximity", "high_acceleration",
             "stop_controlled_intersection")

# detection thresholds (report-header constants)
LANE_CHANGE_DISPLACEMENT = 1.5   # m within the 6 s window
LANE_CHANGE_WINDOW = 6.0         # s
MERGE_AGENT_RANGE = 30.0         # m on the target lane
TURN_HEADING_CHANGE = math.radians(60.0)
TURN_ZONE_HALF = 6.0             # m, in-zone box half-size around a crossing
TURN_PAD = 1.5                   # s of approach/exit included in the turn
CROSSING_HEADING_MIN = math.radians(30.0)
VRU_PATH_RADIUS = 10.0           # m around the ego path
VRU_EGO_RANGE = 50.0             # m around the ego itself
CLOSE_PROXIMITY_CLEARANCE = 1.0  # m footprint clearance
HIGH_ACCEL = 3.0                 # m/s^2
HIGH_ACCEL_HOLD = 0.5            # s
STOP_LINE_RADIUS = 5.0           # m
STOP_SPEED = 0.1                 # m/s
LANE_WIDTH = 3.5                 # m, assumed constant for conflict zones
VRU_CLEARANCE_WINDOW = 3.0       # m for passing records


@dataclass(frozen=True)
class ScenarioTag:
    kind: str
    t_start: float
    t_end: float
    subjects: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in TAG_KINDS:
            raise ValidationError(f"unknown tag kind {self.kind!r}")
        if not self.t_start < self.t_end:
            raise ValidationError("tag interval must have t_start < t_end")


@dataclass(frozen=True)
class DecisionRecord:
    zone: tuple            # polygon vertices
    agent_id: str | None
    planner_decision: str  # yield | go
    expert_decision: str

    @property
    def agree(self) -> bool:
        return self.planner_decision == self.expert_decision


def _merge_intervals(tags: list[ScenarioTag]) -> list[ScenarioTag]:
    """Union overlapping intervals of the same kind."""
    by_kind: dict[str, list[ScenarioTag]] = {}
    for t in tags:
        by_kind.setdefault(t.kind, []).append(t)
    merged = []
    for kind, group in by_kind.items():
        group.sort(key=lambda t: t.t_start)
        cur = group[0]
        for t in group[1:]:
            if t.t_start <= cur.t_end + 1e-9:
                cur = ScenarioTag(kind, cur.t_start, max(cur.t_end, t.t_end),
                                  tuple(sorted(set(cur.subjects + t.subjects))))
            else:
                merged.append(cur)
                cur = t
        merged.append(cur)
    merged.sort(key=lambda t: (t.t_start, t.kind))
    return merged


def _steps_to_intervals(times, flags, subjects=None, max_gap_steps=0):
    """Contiguous flagged step runs as (t_start, t_end, subject set)."""
    out = []
    start = None
    subj: set[str] = set()
    gap = 0
    for i, f in enumerate(flags):
        if f:
            if start is None:
                start = times[i]
                subj = set()
            gap = 0
            if subjects is not None:
                subj |= subjects[i]
        elif start is not None:
            gap += 1
            if gap > max_gap_steps:
                end = times[i - gap]
                if end > start:
                    out.append((start, end, subj))
                start = None
    if start is not None and times[-1] > start:
        out.append((start, times[-1], subj))
    return out


def intersection_zones(smap: SemanticMap) -> list[tuple[float, float, set[str]]]:
    """Crossing points of lanes with strongly different headings.

    Each zone is (x, y, involved lane ids); the zone polygon is a square of
    one lane width around the crossing point.
    """
    zones = []
    lids = sorted(smap.lanes)
    for i, la in enumerate(lids):
        lane_a = smap.lanes[la]
        for lb in lids[i + 1:]:
            lane_b = smap.lanes[lb]
            if lb in lane_a.successors or la in lane_b.successors:
                continue
            if lb in lane_a.neighbors() or la in lane_b.neighbors():
                continue
            for ia in range(len(lane_a.xs) - 1):
                pa0 = (lane_a.xs[ia], lane_a.ys[ia])
                pa1 = (lane_a.xs[ia + 1], lane_a.ys[ia + 1])
                ha = math.atan2(pa1[1] - pa0[1], pa1[0] - pa0[0])
                for ib in range(len(lane_b.xs) - 1):
                    pb0 = (lane_b.xs[ib], lane_b.ys[ib])
                    pb1 = (lane_b.xs[ib + 1], lane_b.ys[ib + 1])
                    hb = math.atan2(pb1[1] - pb0[1], pb1[0] - pb0[0])
                    if abs(angle_diff(ha, hb)) < CROSSING_HEADING_MIN:
                        continue
                    pt = segment_intersection_point(pa0, pa1, pb0, pb1)
                    if pt is not None:
                        zones.append((pt[0], pt[1], {la, lb}))
    return zones


def zone_polygon(x: float, y: float, half: float = LANE_WIDTH) -> np.ndarray:
    return np.array([[x - half, y - half], [x + half, y - half],
                     [x + half, y + half], [x - half, y + half]])


def ego_lane_ids(smap: SemanticMap, states: list[EgoState]) -> list[str]:
    """Nearest lane per step, gated on heading agreement (a lane crossed
    sideways, e.g. oncoming traffic under a turn arc, does not count)."""
    out: list[str] = []
    for s in states:
        lid, arc, _ = smap.nearest_lane(s.pose.x, s.pose.y)
        lane_heading = smap.lanes[lid].pose_at(arc).heading
        if abs(angle_diff(s.pose.heading, lane_heading)) > math.radians(60.0) \
                and out:
            out.append(out[-1])
        else:
            out.append(lid)
    return out


def tag_scenario(expert_log: list[EgoState], agents: list[TrackedObject],
                 smap: SemanticMap) -> list[ScenarioTag]:
    """Run all rule-based detectors over the expert log."""
    traj = ego_log_trajectory(expert_log)
    times = [s.time for s in expert_log]
    n = len(expert_log)
    t_end_log = times[-1]
    tags: list[ScenarioTag] = []

    lane_ids = ego_lane_ids(smap, expert_log)

    # --- lane change / merge ---
    for k in range(1, n):
        prev, cur = lane_ids[k - 1], lane_ids[k]
        if cur == prev:
            continue
        prev_lane = smap.lanes[prev]
        if cur not in prev_lane.neighbors():
            continue
        half = LANE_CHANGE_WINDOW / 2.0
        k0 = max(0, k - int(half / DT))
        k1 = min(n - 1, k + int(half / DT))
        _, _, d0 = prev_lane.project(expert_log[k0].pose.x,
                                     expert_log[k0].pose.y)
        _, _, d1 = prev_lane.project(expert_log[k1].pose.x,
                                     expert_log[k1].pose.y)
        if abs(d1 - d0) <= LANE_CHANGE_DISPLACEMENT:
            continue
        t0, t1 = times[k0], times[k1]
        # a merge is a lane change with traffic on the target lane
        target = smap.lanes[cur]
        subjects = []
        _, ego_arc, _ = target.project(expert_log[k].pose.x,
                                       expert_log[k].pose.y)
        for tr in agents:
            if tr.category != "vehicle":
                continue
            if not tr.t_start - 1e-9 <= times[k] <= tr.t_end + 1e-9:
                continue
            i = int(round((times[k] - tr.t_start) / DT))
            i = min(max(i, 0), len(tr.times) - 1)
            dist, arc, lat = target.project(float(tr.xs[i]), float(tr.ys[i]))
            if abs(lat) <= LANE_WIDTH / 2.0 and abs(arc - ego_arc) <= MERGE_AGENT_RANGE:
                subjects.append(tr.object_id)
        kind = "merge" if subjects else "lane_change"
        tags.append(ScenarioTag(kind, max(0.0, t0), min(t1, t_end_log),
                                tuple(sorted(subjects))))

    # --- turns inside intersection zones ---
    zones = intersection_zones(smap)
    if zones:
        in_zone = []
        for s in expert_log:
            hit = False
            for zx, zy, lids in zones:
                if (abs(s.pose.x - zx) <= TURN_ZONE_HALF
                        and abs(s.pose.y - zy) <= TURN_ZONE_HALF):
                    hit = True
                    break
            in_zone.append(hit)
        pad = int(round(TURN_PAD / DT))
        for t0, t1, _ in _steps_to_intervals(times, in_zone, max_gap_steps=10):
            # heading change measured over the padded interval: the zone
            # box only covers part of a compact corner arc
            k0 = max(0, int(round(t0 / DT)) - pad)
            k1 = min(n - 1, int(round(t1 / DT)) + pad)
            dh = 0.0
            for k in range(k0 + 1, k1 + 1):
                dh += angle_diff(expert_log[k].pose.heading,
                                 expert_log[k - 1].pose.heading)
            if abs(dh) < TURN_HEADING_CHANGE:
                continue
            if dh < 0:
                kind = "turn_right"
            else:
                # protected iff a stop line governs a conflicting lane
                ego_lanes = set(lane_ids[k0:k1 + 1])
                conflicting: set[str] = set()
                for zx, zy, lids in zones:
                    if lids & ego_lanes:
                        conflicting |= lids - ego_lanes
                governed = {sl.lane_id for sl in smap.stop_lines}
                kind = ("turn_left_protected" if conflicting & governed
                        else "turn_left_unprotected")
            tags.append(ScenarioTag(kind, times[k0], max(times[k1], times[k0] + DT)))

    # --- VRU interactions ---
    for tr in agents:
        if tr.category not in ("pedestrian", "cyclist"):
            continue
        flags = []
        for k, s in enumerate(expert_log):
            t = times[k]
            if not tr.t_start - 1e-9 <= t <= tr.t_end + 1e-9:
                flags.append(False)
                continue
            i = min(max(int(round((t - tr.t_start) / DT)), 0),
                    len(tr.times) - 1)
            vx, vy = float(tr.xs[i]), float(tr.ys[i])
            d_path, _, _ = kernels.project_polyline(vx, vy, traj.xs, traj.ys)
            d_ego = math.hypot(vx - s.pose.x, vy - s.pose.y)
            flags.append(d_path < VRU_PATH_RADIUS and d_ego < VRU_EGO_RANGE)
        kind = ("pedestrian_interaction" if tr.category == "pedestrian"
                else "cyclist_interaction")
        for t0, t1, _ in _steps_to_intervals(times, flags, max_gap_steps=5):
            tags.append(ScenarioTag(kind, t0, t1, (tr.object_id,)))

    # --- close proximity ---
    flags = []
    subjects_per_step = []
    for k, s in enumerate(expert_log):
        ebox = s.box()
        ea = (ebox.center.x, ebox.center.y, ebox.center.heading,
              ebox.half_length, ebox.half_width)
        close: set[str] = set()
        for tr in agents:
            t = times[k]
            if not tr.t_start - 1e-9 <= t <= tr.t_end + 1e-9:
                continue
            i = min(max(int(round((t - tr.t_start) / DT)), 0),
                    len(tr.times) - 1)
            c = kernels.box_clearance(ea[0], ea[1], ea[2], ea[3], ea[4],
                                      float(tr.xs[i]), float(tr.ys[i]),
                                      float(tr.headings[i]),
                                      tr.length / 2.0, tr.width / 2.0)
            if c < CLOSE_PROXIMITY_CLEARANCE:
                close.add(tr.object_id)
        flags.append(bool(close))
        subjects_per_step.append(close)
    for t0, t1, subj in _steps_to_intervals(times, flags, subjects_per_step,
                                            max_gap_steps=5):
        tags.append(ScenarioTag("close_proximity", t0, t1,
                                tuple(sorted(subj))))

    # --- high acceleration ---
    prof = differentiate(traj)
    hold = int(round(HIGH_ACCEL_HOLD / DT))
    hot = np.abs(prof.accel) > HIGH_ACCEL
    run = 0
    for k in range(n):
        if hot[k]:
            run += 1
        else:
            if run >= hold:
                tags.append(ScenarioTag("high_acceleration",
                                        times[k - run], times[k - 1]))
            run = 0
    if run >= hold:
        tags.append(ScenarioTag("high_acceleration", times[n - run],
                                times[n - 1]))

    # --- stop-controlled intersection ---
    if smap.stop_lines:
        flags = []
        for s in expert_log:
            stopped = abs(s.velocity) < STOP_SPEED
            near_line = any(
                segment_point_distance(s.pose.x, s.pose.y, sl.p0, sl.p1)
                < STOP_LINE_RADIUS for sl in smap.stop_lines)
            flags.append(stopped and near_line)
        for t0, t1, _ in _steps_to_intervals(times, flags, max_gap_steps=2):
            tags.append(ScenarioTag("stop_controlled_intersection", t0, t1))

    return _merge_intervals(tags)


# ---------- tag-specific metrics ----------

def _steps_in(simlog, tag: ScenarioTag):
    steps = [s for s in simlog.steps if tag.t_start - 1e-9 <= s.time <= tag.t_end + 1e-9]
    if not steps:
        raise ValidationError("tag interval outside the simulation log")
    return steps


def lane_change_metrics(simlog, tag: ScenarioTag, smap: SemanticMap) -> dict:
    """Min TTC and min time gap to lead/rear agents on the target lane."""
    from planbench.metrics.common import MetricValue, ttc_at_step
    if tag.kind not in ("lane_change", "merge"):
        raise ValidationError("tag must be a lane change or merge")
    steps = _steps_in(simlog, tag)
    final = steps[-1].ego
    target_id = smap.nearest_lane(final.pose.x, final.pose.y)[0]
    target = LanePath(smap, [target_id])

    lead_gaps: list[float] = []
    rear_gaps: list[float] = []
    ttcs: list[float] = []
    for st in steps:
        ecx, ecy = st.ego.center()
        _, ego_arc, _ = target.project(ecx, ecy)
        on_target = []
        for obj in st.agents:
            d, arc, lat = target.project(obj.pose.x, obj.pose.y)
            if abs(lat) > LANE_WIDTH / 2.0:
                continue
            on_target.append(obj)
            gap = abs(arc - ego_arc) - (st.ego.footprint.length + obj.length) / 2.0
            if arc > ego_arc:
                lead_gaps.append(max(gap, 0.0)
                                 / max(st.ego.velocity, 0.5))
            else:
                rear_gaps.append(max(gap, 0.0) / max(obj.speed(), 0.5))
        tau = ttc_at_step(st.ego, on_target)
        if tau is not None:
            ttcs.append(tau)
    return {
        "lc_lead_time_gap_min": MetricValue("lc_lead_time_gap_min",
                                            min(lead_gaps, default=None), "s"),
        "lc_rear_time_gap_min": MetricValue("lc_rear_time_gap_min",
                                            min(rear_gaps, default=None), "s"),
        "lc_ttc_min": MetricValue("lc_ttc_min", min(ttcs, default=None), "s"),
    }


def vru_interaction_metrics(simlog, tag: ScenarioTag, smap: SemanticMap) -> dict:
    """Per-step passing records against the tagged VRU."""
    from planbench.metrics.common import MetricValue
    if tag.kind not in ("pedestrian_interaction", "cyclist_interaction"):
        raise ValidationError("tag must be a VRU interaction")
    steps = _steps_in(simlog, tag)
    records = []
    for st in steps:
        for obj in st.agents:
            if obj.object_id not in tag.subjects:
                continue
            ebox = st.ego.box()
            clearance = kernels.box_clearance(
                ebox.center.x, ebox.center.y, ebox.center.heading,
                ebox.half_length, ebox.half_width,
                obj.pose.x, obj.pose.y, obj.pose.heading,
                obj.length / 2.0, obj.width / 2.0)
            if clearance >= VRU_CLEARANCE_WINDOW:
                continue
            evx, evy = st.ego.velocity_xy()
            rel = math.hypot(evx - obj.vx, evy - obj.vy)
            if smap.point_on_crosswalk(obj.pose.x, obj.pose.y):
                where = "on_crosswalk"
            elif smap.point_in_driveable(obj.pose.x, obj.pose.y):
                where = "on_road"
            else:
                where = "off_road"
            records.append([round(rel, 6), round(clearance, 6), where])
    return {"vru_passes": MetricValue("vru_passes", float(len(records)),
                                      "records", series=records)}


def _zone_entry_time(times, xs, ys, zone: np.ndarray) -> float | None:
    for t, x, y in zip(times, xs, ys):
        if point_in_polygon(float(x), float(y), zone):
            return float(t)
    return None


def decision_agreement(simlog, expert_log: list[EgoState], tag: ScenarioTag,
                       agents: list[TrackedObject],
                       smap: SemanticMap) -> DecisionRecord | None:
    """Yield/go agreement at a crosswalk or unprotected left turn."""
    if tag.kind not in ("pedestrian_interaction", "turn_left_unprotected"):
        raise ValidationError("decision agreement needs a crosswalk or "
                              "unprotected left turn tag")

    if tag.kind == "pedestrian_interaction":
        zone = None
        for tr in agents:
            if tr.object_id in tag.subjects:
                for poly in smap.crosswalks:
                    for x, y in zip(tr.xs, tr.ys):
                        if point_in_polygon(float(x), float(y), poly):
                            zone = poly
                            break
                    if zone is not None:
                        break
            if zone is not None:
                break
        if zone is None:
            return None
    else:
        mid = None
        k0 = int(round(tag.t_start / DT))
        k1 = min(int(round(tag.t_end / DT)), len(expert_log) - 1)
        ego_lanes = set(ego_lane_ids(smap, expert_log[k0:k1 + 1]))
        for zx, zy, lids in intersection_zones(smap):
            if lids & ego_lanes:
                mid = (zx, zy)
                break
        if mid is None:
            return None
        zone = zone_polygon(mid[0], mid[1])

    drv = simlog.ego_states()
    t_sim = _zone_entry_time([s.time for s in drv],
                             [s.pose.x for s in drv],
                             [s.pose.y for s in drv], zone)
    t_exp = _zone_entry_time([s.time for s in expert_log],
                             [s.pose.x for s in expert_log],
                             [s.pose.y for s in expert_log], zone)
    if t_sim is None and t_exp is None:
        return None

    t_agent = None
    agent_id = None
    for tr in sorted(agents, key=lambda a: a.object_id):
        if tag.subjects and tr.object_id not in tag.subjects:
            continue
        t = _zone_entry_time(tr.times, tr.xs, tr.ys, zone)
        if t is not None and (t_agent is None or t < t_agent):
            t_agent = t
            agent_id = tr.object_id

    def decide(t_ego):
        if t_ego is None:
            return "yield"
        if t_agent is None or t_ego < t_agent:
            return "go"
        return "yield"

    return DecisionRecord(tuple(map(tuple, zone.tolist())), agent_id,
                          decide(t_sim), decide(t_exp))
