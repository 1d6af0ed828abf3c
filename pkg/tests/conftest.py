"""Shared fixtures: tiny maps, synthetic logs, generated scenario sets."""

from __future__ import annotations

import math

import numpy as np
import pytest

from planbench.geometry import Pose2D
from planbench.scenario_io import Scenario
from planbench.semantic_map import Lane, SemanticMap
from planbench.simulation import SimLog, SimStep
from planbench.trajectory import DT, EgoState, TrackedObject, VehicleDims


def straight_line_pts(x0, y0, x1, y1, n=40):
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    return np.column_stack([xs, ys])


def simple_map(length=200.0, n_lanes=2, lane_w=3.5, speed_limit=15.0):
    lanes = []
    for i in range(n_lanes):
        y = i * lane_w
        lanes.append(Lane(f"L{i}", straight_line_pts(0, y, length, y),
                          speed_limit,
                          left_neighbor=f"L{i + 1}" if i + 1 < n_lanes else None,
                          right_neighbor=f"L{i - 1}" if i > 0 else None))
    poly = np.array([[-5.0, -lane_w / 2 - 1.5], [length + 5.0, -lane_w / 2 - 1.5],
                     [length + 5.0, (n_lanes - 1) * lane_w + lane_w / 2 + 1.5],
                     [-5.0, (n_lanes - 1) * lane_w + lane_w / 2 + 1.5]])
    return SemanticMap(lanes, [poly])


def cruise_log(v=10.0, duration=15.0, y=0.0, dims=None):
    """Constant-velocity expert log on the dt grid."""
    dims = dims or VehicleDims()
    n = int(round(duration / DT)) + 1
    return [EgoState(k * DT, Pose2D(2.0 + v * k * DT, y, 0.0), v, 0.0, 0.0,
                     dims) for k in range(n)]


def straight_agent(object_id, x0, y0, v, duration, category="vehicle",
                   length=4.6, width=1.8, heading=0.0):
    n = int(round(duration / DT)) + 1
    times = np.array([k * DT for k in range(n)])
    c, s = math.cos(heading), math.sin(heading)
    return TrackedObject(object_id, category, times,
                         x0 + v * c * times, y0 + v * s * times,
                         np.full(n, heading), np.full(n, v * c),
                         np.full(n, v * s), length, width)


def log_from_states(states, scenario_id="test", mode="closed_loop_nonreactive",
                    agents_per_step=None):
    log = SimLog(scenario_id, mode)
    for k, st in enumerate(states):
        agents = agents_per_step[k] if agents_per_step else ()
        log.steps.append(SimStep(st.time, st, tuple(agents), 0))
    log.termination = "max_duration"
    return log


def make_scenario(expert, smap=None, agents=(), goal=None, scenario_id="test",
                  kind="straight"):
    smap = smap or simple_map()
    return Scenario(scenario_id, kind, "boston", smap, list(expert),
                    list(agents), goal or expert[-1].pose)


@pytest.fixture(scope="session")
def small_batch(tmp_path_factory):
    """A small generated scenario set shared by integration tests."""
    from planbench.generator import generate_to_dir

    out = tmp_path_factory.mktemp("scen_small")
    generate_to_dir(11, {"straight": 2, "curve": 1, "lane_change": 1,
                         "pedestrian_interaction": 1}, out)
    return out
