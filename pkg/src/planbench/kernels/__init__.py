"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python lane
is the fallback. PLANBENCH_KERNELS=py forces the fallback (useful for the
benchmark and for debugging), PLANBENCH_KERNELS=c demands the extension.
"""

from __future__ import annotations

import os

from planbench.kernels import _kernels_py

_requested = os.environ.get("PLANBENCH_KERNELS", "").strip().lower()

if _requested in ("py", "python", "pure"):
    _impl = _kernels_py
    BACKEND = "python"
elif _requested in ("c", "cython", "ext"):
    from planbench.kernels import _ckernels as _impl  # hard requirement
    BACKEND = "cython"
else:
    try:
        from planbench.kernels import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

box_overlap = _impl.box_overlap
box_separation = _impl.box_separation
box_clearance = _impl.box_clearance
point_in_polygon = _impl.point_in_polygon
project_polyline = _impl.project_polyline
first_collision_time = _impl.first_collision_time


def backend_name() -> str:
    return BACKEND
