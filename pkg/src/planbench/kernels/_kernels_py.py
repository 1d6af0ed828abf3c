"""Pure-Python geometry kernels.

Reference implementations of the hot inner loops (oriented-box overlap,
constant-velocity collision sweep, point-in-polygon, polyline projection).
The compiled extension in ``_ckernels.pyx`` mirrors these algorithms
operation for operation; parity is enforced by tests/test_kernels.py.

Boxes are passed as 5 scalars: center x, center y, heading, half_length,
half_width. Polygons and polylines are (n, 2) float arrays.
"""

from __future__ import annotations

import math


def box_overlap(ax: float, ay: float, ah: float, al: float, aw: float,
                bx: float, by: float, bh: float, bl: float, bw: float) -> bool:
    """Closed-rectangle intersection via the separating-axis test (4 axes)."""
    dx = bx - ax
    dy = by - ay
    ca = math.cos(ah)
    sa = math.sin(ah)
    cb = math.cos(bh)
    sb = math.sin(bh)
    # |cos|, |sin| of the relative rotation
    rc = abs(ca * cb + sa * sb)
    rs = abs(ca * sb - sa * cb)
    # axes of A
    if abs(ca * dx + sa * dy) > al + rc * bl + rs * bw:
        return False
    if abs(-sa * dx + ca * dy) > aw + rs * bl + rc * bw:
        return False
    # axes of B
    if abs(cb * dx + sb * dy) > bl + rc * al + rs * aw:
        return False
    if abs(-sb * dx + cb * dy) > bw + rs * al + rc * aw:
        return False
    return True


def box_separation(ax: float, ay: float, ah: float, al: float, aw: float,
                   bx: float, by: float, bh: float, bl: float, bw: float) -> float:
    """Largest gap over the 4 SAT axes; > 0 means disjoint, <= 0 overlapping."""
    dx = bx - ax
    dy = by - ay
    ca = math.cos(ah)
    sa = math.sin(ah)
    cb = math.cos(bh)
    sb = math.sin(bh)
    rc = abs(ca * cb + sa * sb)
    rs = abs(ca * sb - sa * cb)
    g = abs(ca * dx + sa * dy) - (al + rc * bl + rs * bw)
    g2 = abs(-sa * dx + ca * dy) - (aw + rs * bl + rc * bw)
    if g2 > g:
        g = g2
    g2 = abs(cb * dx + sb * dy) - (bl + rc * al + rs * aw)
    if g2 > g:
        g = g2
    g2 = abs(-sb * dx + cb * dy) - (bw + rs * al + rc * aw)
    if g2 > g:
        g = g2
    return g


def _box_corners(cx, cy, ch, hl, hw):
    c = math.cos(ch)
    s = math.sin(ch)
    return (
        (cx + c * hl - s * hw, cy + s * hl + c * hw),
        (cx - c * hl - s * hw, cy - s * hl + c * hw),
        (cx - c * hl + s * hw, cy - s * hl - c * hw),
        (cx + c * hl + s * hw, cy + s * hl - c * hw),
    )


def _point_segment_dist(px, py, x0, y0, x1, y1):
    ex = x1 - x0
    ey = y1 - y0
    ll = ex * ex + ey * ey
    if ll <= 0.0:
        return math.hypot(px - x0, py - y0)
    t = ((px - x0) * ex + (py - y0) * ey) / ll
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - (x0 + t * ex), py - (y0 + t * ey))


def box_clearance(ax: float, ay: float, ah: float, al: float, aw: float,
                  bx: float, by: float, bh: float, bl: float, bw: float) -> float:
    """Minimum footprint distance between two oriented boxes, 0 when overlapping."""
    if box_overlap(ax, ay, ah, al, aw, bx, by, bh, bl, bw):
        return 0.0
    pa = _box_corners(ax, ay, ah, al, aw)
    pb = _box_corners(bx, by, bh, bl, bw)
    best = math.inf
    for i in range(4):
        px, py = pa[i]
        for j in range(4):
            x0, y0 = pb[j]
            x1, y1 = pb[(j + 1) % 4]
            d = _point_segment_dist(px, py, x0, y0, x1, y1)
            if d < best:
                best = d
    for i in range(4):
        px, py = pb[i]
        for j in range(4):
            x0, y0 = pa[j]
            x1, y1 = pa[(j + 1) % 4]
            d = _point_segment_dist(px, py, x0, y0, x1, y1)
            if d < best:
                best = d
    return best


def point_in_polygon(px: float, py: float, poly) -> bool:
    """Even-odd rule; ``poly`` is an (n, 2) array-like of vertices."""
    n = len(poly)
    inside = False
    j = n - 1
    for i in range(n):
        xi = poly[i][0]
        yi = poly[i][1]
        xj = poly[j][0]
        yj = poly[j][1]
        if (yi > py) != (yj > py):
            xcross = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < xcross:
                inside = not inside
        j = i
    return inside


def project_polyline(px: float, py: float, xs, ys):
    """Project a point onto a polyline.

    Returns (distance, arc_length, lateral_offset); lateral is positive to
    the left of the travel direction of the closest segment. Ties between
    adjacent segments resolve to the earlier one.
    """
    n = len(xs)
    best_d2 = math.inf
    best_arc = 0.0
    best_lat = 0.0
    arc0 = 0.0
    for i in range(n - 1):
        x0 = xs[i]
        y0 = ys[i]
        ex = xs[i + 1] - x0
        ey = ys[i + 1] - y0
        seg = math.hypot(ex, ey)
        if seg <= 0.0:
            continue
        t = ((px - x0) * ex + (py - y0) * ey) / (seg * seg)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        qx = x0 + t * ex
        qy = y0 + t * ey
        rx = px - qx
        ry = py - qy
        d2 = rx * rx + ry * ry
        if d2 < best_d2 - 1e-18:
            best_d2 = d2
            best_arc = arc0 + t * seg
            # cross(dir_unit, rel): positive when the point is left of travel
            best_lat = (ex * ry - ey * rx) / seg
        arc0 += seg
    return math.sqrt(best_d2), best_arc, best_lat


def first_collision_time(ego, others, horizon: float, coarse: float, tol: float) -> float:
    """Earliest constant-velocity collision time of ego against any other body.

    ``ego`` is a 7-vector (cx, cy, heading, half_len, half_wid, vx, vy),
    ``others`` an (n, 7) array. Sweeps tau on a coarse grid, then bisects
    the bracketing interval down to ``tol``. Returns -1.0 when nothing
    overlaps within the horizon; 0.0 when already overlapping.
    """
    n = len(others)
    if n == 0:
        return -1.0
    ex, ey, eh, el, ew, evx, evy = (ego[0], ego[1], ego[2], ego[3], ego[4],
                                    ego[5], ego[6])

    def any_overlap(tau):
        ax = ex + evx * tau
        ay = ey + evy * tau
        for k in range(n):
            o = others[k]
            if box_overlap(ax, ay, eh, el, ew,
                           o[0] + o[5] * tau, o[1] + o[6] * tau,
                           o[2], o[3], o[4]):
                return True
        return False

    if any_overlap(0.0):
        return 0.0
    lo = 0.0
    tau = 0.0
    found = False
    while tau < horizon - 1e-12:
        nxt = tau + coarse
        if nxt > horizon:
            nxt = horizon
        if any_overlap(nxt):
            lo = tau
            tau = nxt
            found = True
            break
        tau = nxt
    if not found:
        return -1.0
    hi = tau
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if any_overlap(mid):
            hi = mid
        else:
            lo = mid
    return hi
