# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; algorithm-identical to _kernels_py."""

from libc.math cimport cos, sin, fabs, hypot, sqrt, INFINITY


cdef inline bint _overlap(double ax, double ay, double ah, double al, double aw,
                          double bx, double by, double bh, double bl, double bw) nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double ca = cos(ah), sa = sin(ah)
    cdef double cb = cos(bh), sb = sin(bh)
    cdef double rc = fabs(ca * cb + sa * sb)
    cdef double rs = fabs(ca * sb - sa * cb)
    if fabs(ca * dx + sa * dy) > al + rc * bl + rs * bw:
        return False
    if fabs(-sa * dx + ca * dy) > aw + rs * bl + rc * bw:
        return False
    if fabs(cb * dx + sb * dy) > bl + rc * al + rs * aw:
        return False
    if fabs(-sb * dx + cb * dy) > bw + rs * al + rc * aw:
        return False
    return True


def box_overlap(double ax, double ay, double ah, double al, double aw,
                double bx, double by, double bh, double bl, double bw):
    return bool(_overlap(ax, ay, ah, al, aw, bx, by, bh, bl, bw))


def box_separation(double ax, double ay, double ah, double al, double aw,
                   double bx, double by, double bh, double bl, double bw):
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double ca = cos(ah), sa = sin(ah)
    cdef double cb = cos(bh), sb = sin(bh)
    cdef double rc = fabs(ca * cb + sa * sb)
    cdef double rs = fabs(ca * sb - sa * cb)
    cdef double g = fabs(ca * dx + sa * dy) - (al + rc * bl + rs * bw)
    cdef double g2 = fabs(-sa * dx + ca * dy) - (aw + rs * bl + rc * bw)
    if g2 > g:
        g = g2
    g2 = fabs(cb * dx + sb * dy) - (bl + rc * al + rs * aw)
    if g2 > g:
        g = g2
    g2 = fabs(-sb * dx + cb * dy) - (bw + rs * al + rc * aw)
    if g2 > g:
        g = g2
    return g


cdef inline void _corners(double cx, double cy, double ch, double hl, double hw,
                          double* xs, double* ys) nogil:
    cdef double c = cos(ch), s = sin(ch)
    xs[0] = cx + c * hl - s * hw; ys[0] = cy + s * hl + c * hw
    xs[1] = cx - c * hl - s * hw; ys[1] = cy - s * hl + c * hw
    xs[2] = cx - c * hl + s * hw; ys[2] = cy - s * hl - c * hw
    xs[3] = cx + c * hl + s * hw; ys[3] = cy + s * hl - c * hw


cdef inline double _pt_seg(double px, double py, double x0, double y0,
                           double x1, double y1) nogil:
    cdef double ex = x1 - x0
    cdef double ey = y1 - y0
    cdef double ll = ex * ex + ey * ey
    cdef double t
    if ll <= 0.0:
        return hypot(px - x0, py - y0)
    t = ((px - x0) * ex + (py - y0) * ey) / ll
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return hypot(px - (x0 + t * ex), py - (y0 + t * ey))


def box_clearance(double ax, double ay, double ah, double al, double aw,
                  double bx, double by, double bh, double bl, double bw):
    cdef double pax[4]
    cdef double pay[4]
    cdef double pbx[4]
    cdef double pby[4]
    cdef double best = INFINITY
    cdef double d
    cdef int i, j
    if _overlap(ax, ay, ah, al, aw, bx, by, bh, bl, bw):
        return 0.0
    _corners(ax, ay, ah, al, aw, pax, pay)
    _corners(bx, by, bh, bl, bw, pbx, pby)
    for i in range(4):
        for j in range(4):
            d = _pt_seg(pax[i], pay[i], pbx[j], pby[j],
                        pbx[(j + 1) % 4], pby[(j + 1) % 4])
            if d < best:
                best = d
            d = _pt_seg(pbx[i], pby[i], pax[j], pay[j],
                        pax[(j + 1) % 4], pay[(j + 1) % 4])
            if d < best:
                best = d
    return best


def point_in_polygon(double px, double py, double[:, :] poly):
    cdef Py_ssize_t n = poly.shape[0]
    cdef bint inside = False
    cdef Py_ssize_t i, j
    cdef double xi, yi, xj, yj, xcross
    j = n - 1
    for i in range(n):
        xi = poly[i, 0]; yi = poly[i, 1]
        xj = poly[j, 0]; yj = poly[j, 1]
        if (yi > py) != (yj > py):
            xcross = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < xcross:
                inside = not inside
        j = i
    return bool(inside)


def project_polyline(double px, double py, double[:] xs, double[:] ys):
    cdef Py_ssize_t n = xs.shape[0]
    cdef double best_d2 = INFINITY
    cdef double best_arc = 0.0
    cdef double best_lat = 0.0
    cdef double arc0 = 0.0
    cdef Py_ssize_t i
    cdef double x0, y0, ex, ey, seg, t, qx, qy, rx, ry, d2
    for i in range(n - 1):
        x0 = xs[i]; y0 = ys[i]
        ex = xs[i + 1] - x0
        ey = ys[i + 1] - y0
        seg = hypot(ex, ey)
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
            best_lat = (ex * ry - ey * rx) / seg
        arc0 += seg
    return sqrt(best_d2), best_arc, best_lat


cdef bint _any_overlap(double tau, double ex, double ey, double eh, double el,
                       double ew, double evx, double evy,
                       double[:, :] others, Py_ssize_t n) nogil:
    cdef double ax = ex + evx * tau
    cdef double ay = ey + evy * tau
    cdef Py_ssize_t k
    for k in range(n):
        if _overlap(ax, ay, eh, el, ew,
                    others[k, 0] + others[k, 5] * tau,
                    others[k, 1] + others[k, 6] * tau,
                    others[k, 2], others[k, 3], others[k, 4]):
            return True
    return False


def first_collision_time(double[:] ego, double[:, :] others,
                         double horizon, double coarse, double tol):
    cdef Py_ssize_t n = others.shape[0]
    if n == 0:
        return -1.0
    cdef double ex = ego[0], ey = ego[1], eh = ego[2]
    cdef double el = ego[3], ew = ego[4], evx = ego[5], evy = ego[6]
    cdef double lo = 0.0, tau = 0.0, nxt, hi, mid
    cdef bint found = False
    if _any_overlap(0.0, ex, ey, eh, el, ew, evx, evy, others, n):
        return 0.0
    while tau < horizon - 1e-12:
        nxt = tau + coarse
        if nxt > horizon:
            nxt = horizon
        if _any_overlap(nxt, ex, ey, eh, el, ew, evx, evy, others, n):
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
        if _any_overlap(mid, ex, ey, eh, el, ew, evx, evy, others, n):
            hi = mid
        else:
            lo = mid
    return hi
