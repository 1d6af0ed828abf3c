"""Semantic map: lane graph, spatial queries, routing and route progress.

The map is immutable after construction; all queries are read-only.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from planbench import kernels
from planbench.errors import RouteNotFound, ValidationError
from planbench.geometry import (OrientedBox, Pose2D, interp_angle, norm_angle,
                                point_in_polygon, segments_intersect)
from planbench.trajectory import EgoState, ObjectState

GRID_CELL = 10.0          # m, uniform spatial index cell
NEIGHBOR_PENALTY = 5.0    # m, routing cost of one lane change
SAME_LANE_GATE = 1.0      # m, lateral gate for "on this lane path"


class Lane:
    """Directed lane centerline with graph links."""

    __slots__ = ("lane_id", "xs", "ys", "speed_limit", "successors",
                 "left_neighbor", "right_neighbor", "cum", "length",
                 "vertex_headings")

    def __init__(self, lane_id: str, centerline, speed_limit: float = 15.0,
                 successors=(), left_neighbor: str | None = None,
                 right_neighbor: str | None = None):
        pts = np.asarray(centerline, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValidationError(f"lane {lane_id}: centerline needs >= 2 points")
        seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        if np.any(seg <= 0.0):
            raise ValidationError(f"lane {lane_id}: repeated centerline points")
        self.lane_id = lane_id
        self.xs = np.ascontiguousarray(pts[:, 0])
        self.ys = np.ascontiguousarray(pts[:, 1])
        self.speed_limit = float(speed_limit)
        self.successors = tuple(successors)
        self.left_neighbor = left_neighbor
        self.right_neighbor = right_neighbor
        self.cum = np.concatenate(([0.0], np.cumsum(seg)))
        self.length = float(self.cum[-1])
        seg_h = np.arctan2(np.diff(self.ys), np.diff(self.xs))
        # vertex tangents: adjacent-segment circular mean at interior vertices
        vh = [float(seg_h[0])]
        for i in range(1, len(seg_h)):
            vh.append(interp_angle(float(seg_h[i - 1]), float(seg_h[i]), 0.5))
        vh.append(float(seg_h[-1]))
        self.vertex_headings = np.array(vh)

    def project(self, px: float, py: float) -> tuple[float, float, float]:
        """(euclidean distance, arc length clamped to [0, length], signed lateral)."""
        return kernels.project_polyline(float(px), float(py), self.xs, self.ys)

    def pose_at(self, arc: float) -> Pose2D:
        arc = min(max(arc, 0.0), self.length)
        i = int(np.searchsorted(self.cum, arc, side="right")) - 1
        i = min(max(i, 0), len(self.cum) - 2)
        seg = self.cum[i + 1] - self.cum[i]
        t = 0.0 if seg <= 0.0 else (arc - self.cum[i]) / seg
        x = self.xs[i] + t * (self.xs[i + 1] - self.xs[i])
        y = self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
        h = interp_angle(float(self.vertex_headings[i]),
                         float(self.vertex_headings[i + 1]), t)
        return Pose2D(float(x), float(y), h)

    def neighbors(self) -> list[str]:
        out = []
        if self.left_neighbor is not None:
            out.append(self.left_neighbor)
        if self.right_neighbor is not None:
            out.append(self.right_neighbor)
        return out


@dataclass(frozen=True)
class StopLine:
    lane_id: str
    p0: tuple[float, float]
    p1: tuple[float, float]


def _polygon_is_simple(poly: np.ndarray) -> bool:
    n = len(poly)
    for i in range(n):
        a0, a1 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(a0, a1, poly[j], poly[(j + 1) % n]):
                return False
    return True


class SemanticMap:
    """Lane set plus driveable-area, crosswalk and stop-line geometry."""

    def __init__(self, lanes: list[Lane], driveable_area=(), crosswalks=(),
                 stop_lines=()):
        self.lanes: dict[str, Lane] = {}
        for lane in lanes:
            if lane.lane_id in self.lanes:
                raise ValidationError(f"duplicate lane id {lane.lane_id}")
            self.lanes[lane.lane_id] = lane
        for lane in lanes:
            for ref in list(lane.successors) + lane.neighbors():
                if ref not in self.lanes:
                    raise ValidationError(
                        f"lane {lane.lane_id}: unresolved reference {ref!r}")
        self.driveable_area = [np.ascontiguousarray(p, dtype=np.float64)
                               for p in driveable_area]
        self.crosswalks = [np.ascontiguousarray(p, dtype=np.float64)
                           for p in crosswalks]
        for poly in list(self.driveable_area) + list(self.crosswalks):
            if len(poly) < 3:
                raise ValidationError("polygon needs >= 3 vertices")
            if not _polygon_is_simple(poly):
                raise ValidationError("self-intersecting map polygon")
        self.stop_lines = list(stop_lines)
        for sl in self.stop_lines:
            if sl.lane_id not in self.lanes:
                raise ValidationError(f"stop line references {sl.lane_id!r}")
        self._poly_bboxes = [(p[:, 0].min(), p[:, 1].min(),
                              p[:, 0].max(), p[:, 1].max())
                             for p in self.driveable_area]
        self._grid: dict[tuple[int, int], set[str]] = {}
        self._build_grid()

    # ---------- spatial index ----------

    def _build_grid(self):
        for lane in self.lanes.values():
            for i in range(len(lane.xs) - 1):
                x0, x1 = sorted((lane.xs[i], lane.xs[i + 1]))
                y0, y1 = sorted((lane.ys[i], lane.ys[i + 1]))
                for cx in range(int(x0 // GRID_CELL), int(x1 // GRID_CELL) + 1):
                    for cy in range(int(y0 // GRID_CELL),
                                    int(y1 // GRID_CELL) + 1):
                        self._grid.setdefault((cx, cy), set()).add(lane.lane_id)

    def _candidate_lanes(self, px: float, py: float):
        """Lane ids near a point, expanding grid rings until provably safe."""
        if not self._grid:
            return []
        cx = int(px // GRID_CELL)
        cy = int(py // GRID_CELL)
        seen: set[str] = set()
        best = math.inf
        ring = 0
        max_ring = 1 + int(max(abs(k[0] - cx) + abs(k[1] - cy)
                               for k in self._grid))
        result = []
        while ring <= max_ring:
            fresh = []
            for gx in range(cx - ring, cx + ring + 1):
                for gy in range(cy - ring, cy + ring + 1):
                    if max(abs(gx - cx), abs(gy - cy)) != ring:
                        continue
                    for lid in self._grid.get((gx, gy), ()):
                        if lid not in seen:
                            seen.add(lid)
                            fresh.append(lid)
            for lid in fresh:
                d, _, _ = self.lanes[lid].project(px, py)
                if d < best:
                    best = d
                result.append(lid)
            # cells farther than this ring cannot hold a closer segment
            if result and (ring - 1) * GRID_CELL > best:
                break
            ring += 1
        return result

    # ---------- queries ----------

    def nearest_lane(self, px: float, py: float) -> tuple[str, float, float]:
        """Lane id, clamped arc length and signed lateral offset of the
        closest lane (euclidean distance to centerline, ties by lateral
        offset then lane id)."""
        if not self.lanes:
            raise ValidationError("map has no lanes")
        candidates = self._candidate_lanes(px, py) or list(self.lanes)
        best = None
        for lid in sorted(candidates):
            d, arc, lat = self.lanes[lid].project(px, py)
            key = (d, abs(lat), lid)
            if best is None or key < best[0]:
                best = (key, lid, arc, lat)
        return best[1], best[2], best[3]

    def in_driveable_area(self, box: OrientedBox) -> bool:
        """True iff all four footprint corners lie in the driveable union."""
        for corner in box.corners():
            px, py = float(corner[0]), float(corner[1])
            ok = False
            for bbox, poly in zip(self._poly_bboxes, self.driveable_area):
                if (bbox[0] <= px <= bbox[2] and bbox[1] <= py <= bbox[3]
                        and kernels.point_in_polygon(px, py, poly)):
                    ok = True
                    break
            if not ok:
                return False
        return True

    def point_on_crosswalk(self, px: float, py: float) -> bool:
        return any(point_in_polygon(px, py, p) for p in self.crosswalks)

    def point_in_driveable(self, px: float, py: float) -> bool:
        for bbox, poly in zip(self._poly_bboxes, self.driveable_area):
            if (bbox[0] <= px <= bbox[2] and bbox[1] <= py <= bbox[3]
                    and kernels.point_in_polygon(px, py, poly)):
                return True
        return False

    def bounding_box(self) -> tuple[float, float, float, float]:
        xs = np.concatenate([l.xs for l in self.lanes.values()])
        ys = np.concatenate([l.ys for l in self.lanes.values()])
        for p in self.driveable_area:
            xs = np.concatenate([xs, p[:, 0]])
            ys = np.concatenate([ys, p[:, 1]])
        return float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max())


# ---------- routing ----------

@dataclass(frozen=True)
class RouteSegment:
    lane_id: str
    arc_in: float
    arc_out: float

    @property
    def length(self) -> float:
        return max(0.0, self.arc_out - self.arc_in)


@dataclass(frozen=True)
class Route:
    lane_ids: tuple[str, ...]
    segments: tuple[RouteSegment, ...]
    total_length: float
    goal: Pose2D
    cost: float = 0.0

    def __post_init__(self):
        if self.total_length <= 0.0:
            raise ValidationError("route must have positive length")


def path_cost(smap: SemanticMap, lane_seq: list[str], s0: float,
              g: float) -> float | None:
    """Routing cost of a concrete lane sequence (travel + 5 m per change).

    Shared by the planner and the exhaustive test oracle. Returns None when
    the sequence is not connected. Lane changes happen at the entry arc
    (fraction preserved across neighbor lanes).
    """
    if not lane_seq:
        return None
    cost = 0.0
    entry = s0
    for i in range(len(lane_seq) - 1):
        cur = smap.lanes[lane_seq[i]]
        nxt = lane_seq[i + 1]
        if nxt in cur.successors:
            cost += cur.length - entry
            entry = 0.0
        elif nxt in cur.neighbors():
            cost += NEIGHBOR_PENALTY
            entry = entry * smap.lanes[nxt].length / cur.length
        else:
            return None
    if g < entry - 1e-9:
        return None
    return cost + (g - entry)


def _route_segments(smap: SemanticMap, lane_seq: list[str], s0: float,
                    g: float) -> list[RouteSegment]:
    segs = []
    entry = s0
    for i, lid in enumerate(lane_seq):
        lane = smap.lanes[lid]
        if i + 1 < len(lane_seq):
            nxt = lane_seq[i + 1]
            if nxt in lane.successors:
                segs.append(RouteSegment(lid, entry, lane.length))
                entry = 0.0
            else:  # neighbor change at the entry point
                segs.append(RouteSegment(lid, entry, entry))
                entry = entry * smap.lanes[nxt].length / lane.length
        else:
            segs.append(RouteSegment(lid, entry, g))
    return segs


def plan_route(smap: SemanticMap, start: Pose2D, goal: Pose2D) -> Route:
    """Minimum-cost lane sequence from start to goal.

    Successor edges cost the traversed centerline length, lateral neighbor
    changes a flat 5 m. Deterministic tie-break by lexicographic lane id.
    """
    start_lane, s0, _ = smap.nearest_lane(start.x, start.y)
    goal_lane, g, _ = smap.nearest_lane(goal.x, goal.y)

    best_goal: tuple[float, tuple[str, ...]] | None = None
    if start_lane == goal_lane and g >= s0:
        best_goal = (g - s0, (start_lane,))

    start_cost = smap.lanes[start_lane].length - s0
    dist: dict[str, float] = {start_lane: start_cost}
    pred: dict[str, str] = {}
    heap: list[tuple[float, str]] = [(start_cost, start_lane)]
    done: set[str] = set()

    def seq_of(lid: str) -> tuple[str, ...]:
        seq = [lid]
        while seq[-1] in pred:
            seq.append(pred[seq[-1]])
        return tuple(reversed(seq))

    while heap:
        d, lid = heapq.heappop(heap)
        if lid in done or d > dist.get(lid, math.inf):
            continue
        done.add(lid)
        lane = smap.lanes[lid]
        # candidate goal entries from this lane
        for nxt in lane.successors:
            if nxt == goal_lane:
                cand = d + g
                if best_goal is None or (cand, seq_of(lid) + (goal_lane,)) < best_goal:
                    best_goal = (cand, seq_of(lid) + (goal_lane,))
        for nxt in lane.neighbors():
            if nxt == goal_lane:
                cand = d - lane.length + NEIGHBOR_PENALTY + g
                if best_goal is None or (cand, seq_of(lid) + (goal_lane,)) < best_goal:
                    best_goal = (cand, seq_of(lid) + (goal_lane,))
        for nxt in lane.successors:
            cand = d + smap.lanes[nxt].length
            if cand < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = cand
                pred[nxt] = lid
                heapq.heappush(heap, (cand, nxt))
        for nxt in lane.neighbors():
            cand = d + NEIGHBOR_PENALTY
            if cand < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = cand
                pred[nxt] = lid
                heapq.heappush(heap, (cand, nxt))

    if best_goal is None:
        raise RouteNotFound(f"no lane path from {start_lane} to {goal_lane}")
    cost, seq = best_goal
    segs = _route_segments(smap, list(seq), s0, g)
    total = sum(s.length for s in segs)
    if total <= 0.0:
        total = 1e-9  # degenerate zero-length route: start equals goal
    return Route(tuple(seq), tuple(segs), total, goal, cost)


def route_progress(smap: SemanticMap, route: Route, px: float, py: float) -> float:
    """Fraction of the route arc length completed at a point, in [0, 1]."""
    best = None
    for idx, seg in enumerate(route.segments):
        d, arc, _ = smap.lanes[seg.lane_id].project(px, py)
        key = (d, idx)
        if best is None or key < best[0]:
            best = (key, idx, arc)
    _, idx, arc = best
    completed = sum(s.length for s in route.segments[:idx])
    seg = route.segments[idx]
    completed += min(max(arc - seg.arc_in, 0.0), seg.length)
    return min(max(completed / route.total_length, 0.0), 1.0)


# ---------- lane paths (ordered lane sequences) ----------

class LanePath:
    """Concatenated lane sequence with a shared arc-length coordinate."""

    def __init__(self, smap: SemanticMap, lane_ids):
        if not lane_ids:
            raise ValidationError("empty lane path")
        self.map = smap
        self.lane_ids = list(lane_ids)
        self.offsets = []
        off = 0.0
        for lid in self.lane_ids:
            self.offsets.append(off)
            off += smap.lanes[lid].length
        self.total_length = off

    def project(self, px: float, py: float) -> tuple[float, float, float]:
        """(distance, path arc, lateral) of the best projection."""
        best = None
        for i, lid in enumerate(self.lane_ids):
            d, arc, lat = self.map.lanes[lid].project(px, py)
            key = (d, abs(lat), i)
            if best is None or key < best[0]:
                best = (key, self.offsets[i] + arc, lat, d)
        return best[3], best[1], best[2]

    def pose_at(self, arc: float) -> Pose2D:
        arc = min(max(arc, 0.0), self.total_length)
        i = len(self.lane_ids) - 1
        while i > 0 and arc < self.offsets[i]:
            i -= 1
        lane = self.map.lanes[self.lane_ids[i]]
        return lane.pose_at(arc - self.offsets[i])

    def speed_limit_at(self, arc: float) -> float:
        i = len(self.lane_ids) - 1
        while i > 0 and arc < self.offsets[i]:
            i -= 1
        return self.map.lanes[self.lane_ids[i]].speed_limit

    def last_lane(self) -> Lane:
        return self.map.lanes[self.lane_ids[-1]]


def lead_agent(smap: SemanticMap, lane_path, ego: EgoState,
               agents: list[ObjectState]):
    """Nearest agent ahead of the ego on a lane path.

    Agents gate on |lateral| <= 1 m; returns (agent id, bumper gap) or None.
    """
    path = lane_path if isinstance(lane_path, LanePath) else LanePath(smap, lane_path)
    ecx, ecy = ego.center()
    _, ego_arc, _ = path.project(ecx, ecy)
    best = None
    for obj in agents:
        d, arc, lat = path.project(obj.pose.x, obj.pose.y)
        if abs(lat) > SAME_LANE_GATE:
            continue
        if arc <= ego_arc:
            continue
        gap = (arc - ego_arc) - (ego.footprint.length / 2.0 + obj.length / 2.0)
        key = (arc, obj.object_id)
        if best is None or key < best[0]:
            best = (key, obj.object_id, gap)
    if best is None:
        return None
    return best[1], best[2]
