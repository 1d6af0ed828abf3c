"""Planar geometry primitives shared by every module.

Conventions: x/y in meters, headings in radians normalized to (-pi, pi],
positive lateral offsets are to the left of the travel direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from planbench import kernels

TWO_PI = 2.0 * math.pi


def norm_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def angle_diff(a: float, b: float) -> float:
    """Shortest signed arc from b to a."""
    return norm_angle(a - b)


def interp_angle(a: float, b: float, frac: float) -> float:
    """Interpolate from a to b along the shortest arc."""
    return norm_angle(a + frac * angle_diff(b, a))


@dataclass(frozen=True)
class Pose2D:
    """Position plus heading; heading is normalized on construction."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", norm_angle(self.heading))

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle given by center pose and half-dimensions."""

    center: Pose2D
    half_length: float
    half_width: float

    def __post_init__(self):
        if self.half_length <= 0.0 or self.half_width <= 0.0:
            raise ValueError("box half-dimensions must be positive")

    def corners(self) -> np.ndarray:
        c = math.cos(self.center.heading)
        s = math.sin(self.center.heading)
        hl = self.half_length
        hw = self.half_width
        x = self.center.x
        y = self.center.y
        return np.array([
            [x + c * hl - s * hw, y + s * hl + c * hw],
            [x - c * hl - s * hw, y - s * hl + c * hw],
            [x - c * hl + s * hw, y - s * hl - c * hw],
            [x + c * hl + s * hw, y + s * hl - c * hw],
        ])

    def as_array(self, vx: float = 0.0, vy: float = 0.0) -> np.ndarray:
        """Flat (cx, cy, heading, hl, hw, vx, vy) form used by the kernels."""
        return np.array([self.center.x, self.center.y, self.center.heading,
                         self.half_length, self.half_width, vx, vy])


def box_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """True iff the closed rectangles intersect (touching counts)."""
    return kernels.box_overlap(
        a.center.x, a.center.y, a.center.heading, a.half_length, a.half_width,
        b.center.x, b.center.y, b.center.heading, b.half_length, b.half_width)


def box_clearance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum distance between two box footprints; 0 when they overlap."""
    return kernels.box_clearance(
        a.center.x, a.center.y, a.center.heading, a.half_length, a.half_width,
        b.center.x, b.center.y, b.center.heading, b.half_length, b.half_width)


def box_separation(a: OrientedBox, b: OrientedBox) -> float:
    """Signed SAT margin: positive separated, negative penetrating."""
    return kernels.box_separation(
        a.center.x, a.center.y, a.center.heading, a.half_length, a.half_width,
        b.center.x, b.center.y, b.center.heading, b.half_length, b.half_width)


def point_in_polygon(px: float, py: float, polygon: np.ndarray) -> bool:
    return kernels.point_in_polygon(float(px), float(py),
                                    np.ascontiguousarray(polygon, dtype=np.float64))


def point_in_any_polygon(px: float, py: float, polygons) -> bool:
    for poly in polygons:
        if kernels.point_in_polygon(float(px), float(py), poly):
            return True
    return False


def segment_point_distance(px: float, py: float, a, b) -> float:
    ex = b[0] - a[0]
    ey = b[1] - a[1]
    ll = ex * ex + ey * ey
    if ll <= 0.0:
        return math.hypot(px - a[0], py - a[1])
    t = min(1.0, max(0.0, ((px - a[0]) * ex + (py - a[1]) * ey) / ll))
    return math.hypot(px - (a[0] + t * ex), py - (a[1] + t * ey))


def segments_intersect(p0, p1, q0, q1) -> bool:
    """Proper or touching intersection of two closed segments."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    d1 = orient(q0, q1, p0)
    d2 = orient(q0, q1, p1)
    d3 = orient(p0, p1, q0)
    d4 = orient(p0, p1, q1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    if d1 == 0 and on_seg(q0, q1, p0):
        return True
    if d2 == 0 and on_seg(q0, q1, p1):
        return True
    if d3 == 0 and on_seg(p0, p1, q0):
        return True
    if d4 == 0 and on_seg(p0, p1, q1):
        return True
    return False


def segment_intersection_point(p0, p1, q0, q1):
    """Intersection point of two segments, or None when parallel/disjoint."""
    rx = p1[0] - p0[0]
    ry = p1[1] - p0[1]
    sx = q1[0] - q0[0]
    sy = q1[1] - q0[1]
    denom = rx * sy - ry * sx
    if abs(denom) < 1e-12:
        return None
    t = ((q0[0] - p0[0]) * sy - (q0[1] - p0[1]) * sx) / denom
    u = ((q0[0] - p0[0]) * ry - (q0[1] - p0[1]) * rx) / denom
    if -1e-9 <= t <= 1.0 + 1e-9 and -1e-9 <= u <= 1.0 + 1e-9:
        return (p0[0] + t * rx, p0[1] + t * ry)
    return None
