"""Benchmark: compiled kernels vs the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--n 20000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from planbench.kernels import _kernels_py

try:
    from planbench.kernels import _ckernels
except ImportError:
    _ckernels = None


def _boxes(rng, n):
    return rng.uniform([-20, -20, -np.pi, 1.0, 0.5],
                       [20, 20, np.pi, 3.0, 1.2], size=(n, 5))


def bench_box_overlap(impl, a, b):
    t0 = time.perf_counter()
    hits = 0
    for i in range(len(a)):
        if impl.box_overlap(a[i, 0], a[i, 1], a[i, 2], a[i, 3], a[i, 4],
                            b[i, 0], b[i, 1], b[i, 2], b[i, 3], b[i, 4]):
            hits += 1
    return time.perf_counter() - t0, hits


def bench_ttc(impl, egos, others):
    t0 = time.perf_counter()
    acc = 0.0
    for i in range(len(egos)):
        acc += impl.first_collision_time(egos[i], others[i], 5.0, 0.05, 1e-3)
    return time.perf_counter() - t0, acc


def bench_project(impl, pts, xs, ys):
    t0 = time.perf_counter()
    acc = 0.0
    for p in pts:
        acc += impl.project_polyline(p[0], p[1], xs, ys)[0]
    return time.perf_counter() - t0, acc


def bench_pip(impl, pts, poly):
    t0 = time.perf_counter()
    hits = 0
    for p in pts:
        if impl.point_in_polygon(p[0], p[1], poly):
            hits += 1
    return time.perf_counter() - t0, hits


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    n = args.n

    a = _boxes(rng, n)
    b = _boxes(rng, n)
    egos = rng.uniform([-10, -10, -np.pi, 2.0, 0.9, -10, -10],
                       [10, 10, np.pi, 2.5, 1.0, 10, 10], size=(n // 20, 7))
    others = [rng.uniform([-30, -30, -np.pi, 2.0, 0.9, -10, -10],
                          [30, 30, np.pi, 2.5, 1.0, 10, 10], size=(4, 7))
              for _ in range(n // 20)]
    theta = np.linspace(0, np.pi / 3, 120)
    xs = np.ascontiguousarray(100.0 * np.cos(theta))
    ys = np.ascontiguousarray(100.0 * np.sin(theta))
    pts = rng.uniform(-50, 150, size=(n, 2))
    poly = np.ascontiguousarray(
        np.column_stack([40 * np.cos(np.linspace(0, 2 * np.pi, 24, False)),
                         40 * np.sin(np.linspace(0, 2 * np.pi, 24, False))]))

    cases = [
        ("box_overlap", bench_box_overlap, (a, b)),
        ("first_collision_time", bench_ttc, (egos, others)),
        ("project_polyline", bench_project, (pts, xs, ys)),
        ("point_in_polygon", bench_pip, (pts, poly)),
    ]
    print(f"{'kernel':24s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, fn, data in cases:
        t_py, chk_py = fn(_kernels_py, *data)
        if _ckernels is None:
            print(f"{name:24s} {t_py * 1e3:9.1f}ms {'n/a':>10s}")
            continue
        t_cy, chk_cy = fn(_ckernels, *data)
        assert np.isclose(float(chk_py), float(chk_cy)), (name, chk_py, chk_cy)
        print(f"{name:24s} {t_py * 1e3:9.1f}ms {t_cy * 1e3:9.1f}ms "
              f"{t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
