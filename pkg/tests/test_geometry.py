"""Geometry primitives: angles, oriented boxes, the Monte-Carlo oracle."""

import math

import numpy as np
import pytest

from planbench.geometry import (OrientedBox, Pose2D, box_clearance,
                                box_overlap, box_separation, interp_angle,
                                norm_angle, point_in_polygon)


def box(x, y, h, length, width):
    return OrientedBox(Pose2D(x, y, h), length / 2.0, width / 2.0)


def mc_overlap_oracle(a: OrientedBox, b: OrientedBox, rng, n=1_000_000,
                      chunk=20_000) -> bool:
    """Monte-Carlo membership: sample points in a, test containment in b.

    Exact per point; only the 'no overlap found' verdict is probabilistic,
    so sampling continues (up to n) until a hit is found.
    """
    ca, sa = math.cos(a.center.heading), math.sin(a.center.heading)
    cb, sb = math.cos(b.center.heading), math.sin(b.center.heading)
    drawn = 0
    while drawn < n:
        m = min(chunk, n - drawn)
        drawn += m
        u = rng.uniform(-a.half_length, a.half_length, m)
        v = rng.uniform(-a.half_width, a.half_width, m)
        px = a.center.x + ca * u - sa * v
        py = a.center.y + sa * u + ca * v
        rx = px - b.center.x
        ry = py - b.center.y
        lon = cb * rx + sb * ry
        lat = -sb * rx + cb * ry
        if np.any((np.abs(lon) <= b.half_length) & (np.abs(lat) <= b.half_width)):
            return True
    return False


def test_norm_angle_range():
    for a in np.linspace(-25.0, 25.0, 1001):
        na = norm_angle(float(a))
        assert -math.pi < na <= math.pi
        # same direction
        assert abs(math.sin(na) - math.sin(a)) < 1e-12
        assert abs(math.cos(na) - math.cos(a)) < 1e-12
    assert norm_angle(-math.pi) == math.pi
    assert norm_angle(math.pi) == math.pi


def test_pose_normalizes_heading():
    p = Pose2D(0.0, 0.0, 3 * math.pi)
    assert abs(p.heading - math.pi) < 1e-12


def test_interp_angle_shortest_arc():
    mid = interp_angle(3.0, -3.0, 0.5)
    assert abs(abs(mid) - math.pi) < 1e-9


def test_box_overlap_gap():
    # two 4x2 boxes, centers 5 m apart on x: 1 m gap
    assert not box_overlap(box(0, 0, 0, 4, 2), box(5, 0, 0, 4, 2))


def test_box_overlap_identity():
    b = box(1.0, -2.0, 0.7, 4, 2)
    assert box_overlap(b, b)


def test_box_overlap_rotated_against_mc_oracle():
    a = box(0, 0, 0, 4, 2)
    b = box(3.4, 0, math.pi / 4, 4, 2)
    rng = np.random.default_rng(42)
    assert box_overlap(a, b) == mc_overlap_oracle(a, b, rng)


def test_box_overlap_touching_counts():
    assert box_overlap(box(0, 0, 0, 4, 2), box(4.0, 0, 0, 4, 2))


def test_box_overlap_symmetry_and_mc_agreement():
    """SAT vs two oracles on 10^4 random pairs.

    Every pair outside the 1e-6 m edge band is checked against shapely's
    exact polygon intersection. The Monte-Carlo membership oracle is
    additionally applied wherever the intersection is large enough to be
    resolvable by sampling (thin corner grazes have areas far below any
    sane sample count). Symmetry is asserted for all pairs.
    """
    from shapely.geometry import Polygon

    rng = np.random.default_rng(7)
    mc_rng = np.random.default_rng(1234)
    checked = mc_checked = 0
    for _ in range(10_000):
        a = box(rng.uniform(-4, 4), rng.uniform(-4, 4),
                rng.uniform(-math.pi, math.pi),
                rng.uniform(2.0, 6.0), rng.uniform(1.0, 2.5))
        b = box(rng.uniform(-4, 4), rng.uniform(-4, 4),
                rng.uniform(-math.pi, math.pi),
                rng.uniform(2.0, 6.0), rng.uniform(1.0, 2.5))
        assert box_overlap(a, b) == box_overlap(b, a)
        margin = box_separation(a, b)
        if abs(margin) <= 1e-6:  # edge band excluded
            continue
        result = box_overlap(a, b)
        pa = Polygon(a.corners())
        pb = Polygon(b.corners())
        assert result == pa.intersects(pb), (a, b, margin)
        checked += 1
        if result and pa.intersection(pb).area > 1e-4:
            assert mc_overlap_oracle(a, b, mc_rng, n=400_000)
            mc_checked += 1
        elif not result and margin < 0.05:
            # near miss: a modest sample must not produce a false hit
            assert not mc_overlap_oracle(a, b, mc_rng, n=10_000)
    assert checked > 9000 and mc_checked > 1000


def test_box_clearance_zero_when_overlapping():
    assert box_clearance(box(0, 0, 0, 4, 2), box(1, 0, 0.3, 4, 2)) == 0.0


def test_box_clearance_axis_aligned_gap():
    c = box_clearance(box(0, 0, 0, 4, 2), box(7, 0, 0, 4, 2))
    assert abs(c - 3.0) < 1e-12


def test_box_clearance_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = box(rng.uniform(-5, 5), rng.uniform(-5, 5),
                rng.uniform(-math.pi, math.pi), 4.0, 1.8)
        b = box(rng.uniform(-5, 5), rng.uniform(-5, 5),
                rng.uniform(-math.pi, math.pi), 4.0, 1.8)
        c = box_clearance(a, b)
        if c == 0.0:
            continue
        # dense boundary sampling oracle
        pa = a.corners()
        pb = b.corners()
        best = np.inf
        for corners, others in ((pa, pb), (pb, pa)):
            ring = np.vstack([others, others[0]])
            dense = []
            for p0, p1 in zip(ring[:-1], ring[1:]):
                for t in np.linspace(0, 1, 60):
                    dense.append(p0 + t * (p1 - p0))
            dense = np.asarray(dense)
            ringa = np.vstack([corners, corners[0]])
            densea = []
            for p0, p1 in zip(ringa[:-1], ringa[1:]):
                for t in np.linspace(0, 1, 60):
                    densea.append(p0 + t * (p1 - p0))
            densea = np.asarray(densea)
            d = np.min(np.hypot(dense[:, None, 0] - densea[None, :, 0],
                                dense[:, None, 1] - densea[None, :, 1]))
            best = min(best, float(d))
        assert abs(c - best) < 2e-3


def test_point_in_polygon_even_odd():
    square = np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]])
    assert point_in_polygon(2.0, 2.0, square)
    assert not point_in_polygon(5.0, 2.0, square)
    concave = np.array([[0, 0], [6, 0], [6, 6], [3, 3.0], [0, 6]])
    assert point_in_polygon(1.0, 1.0, concave)
    assert not point_in_polygon(3.0, 5.0, concave)
