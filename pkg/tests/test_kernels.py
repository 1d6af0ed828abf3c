"""Parity between the compiled and pure-Python kernel lanes."""

import math

import numpy as np
import pytest

from planbench import kernels
from planbench.kernels import _kernels_py

_ckernels = pytest.importorskip("planbench.kernels._ckernels")


def test_backend_selected():
    assert kernels.backend_name() in ("cython", "python")


def test_box_overlap_parity():
    rng = np.random.default_rng(0)
    for _ in range(5000):
        a = rng.uniform([-5, -5, -math.pi, 0.5, 0.3],
                        [5, 5, math.pi, 3.0, 1.5])
        b = rng.uniform([-5, -5, -math.pi, 0.5, 0.3],
                        [5, 5, math.pi, 3.0, 1.5])
        assert (_kernels_py.box_overlap(*a, *b)
                == _ckernels.box_overlap(*a, *b))
        assert abs(_kernels_py.box_separation(*a, *b)
                   - _ckernels.box_separation(*a, *b)) < 1e-12
        assert abs(_kernels_py.box_clearance(*a, *b)
                   - _ckernels.box_clearance(*a, *b)) < 1e-12


def test_point_in_polygon_parity():
    rng = np.random.default_rng(1)
    ang = np.linspace(0, 2 * math.pi, 9, endpoint=False)
    poly = np.ascontiguousarray(
        np.column_stack([3 * np.cos(ang) + rng.uniform(-0.5, 0.5, 9),
                         3 * np.sin(ang) + rng.uniform(-0.5, 0.5, 9)]))
    for _ in range(5000):
        px, py = rng.uniform(-4, 4, 2)
        assert (_kernels_py.point_in_polygon(px, py, poly)
                == _ckernels.point_in_polygon(px, py, poly))


def test_project_polyline_parity():
    rng = np.random.default_rng(2)
    t = np.linspace(0, 4 * math.pi, 200)
    xs = np.ascontiguousarray(10 * t)
    ys = np.ascontiguousarray(5 * np.sin(t))
    for _ in range(2000):
        px = rng.uniform(-10, 140)
        py = rng.uniform(-10, 10)
        rp = _kernels_py.project_polyline(px, py, xs, ys)
        rc = _ckernels.project_polyline(px, py, xs, ys)
        assert np.allclose(rp, rc, atol=1e-12)


def test_first_collision_time_parity():
    rng = np.random.default_rng(3)
    for _ in range(500):
        ego = rng.uniform([-5, -5, -math.pi, 2.0, 0.8, -8, -8],
                          [5, 5, math.pi, 2.5, 1.0, 8, 8])
        others = rng.uniform([-30, -30, -math.pi, 2.0, 0.8, -8, -8],
                             [30, 30, math.pi, 2.5, 1.0, 8, 8],
                             size=(3, 7))
        tp = _kernels_py.first_collision_time(ego, others, 5.0, 0.05, 1e-3)
        tc = _ckernels.first_collision_time(ego, others, 5.0, 0.05, 1e-3)
        assert abs(tp - tc) < 1e-9
