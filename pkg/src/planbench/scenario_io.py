"""Scenario file schema, loading, saving and validation.

One scenario per UTF-8 JSON file, sorted keys, shortest round-trip float
formatting: byte-identical output for identical inputs, human-diffable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from planbench.agents import IdmParams
from planbench.control import ControllerGains
from planbench.errors import ValidationError
from planbench.geometry import Pose2D
from planbench.metrics.scenario import ScenarioTag
from planbench.semantic_map import Lane, SemanticMap, StopLine
from planbench.trajectory import DT, EgoState, TrackedObject, VehicleDims
from planbench.vehicle import ModelLimits

SCHEMA_VERSION = 1


@dataclass
class Scenario:
    """One evaluation unit: map slice, expert log, agent tracks and goal."""

    scenario_id: str
    kind: str
    city: str
    smap: SemanticMap
    expert_log: list[EgoState]
    agents: list[TrackedObject]
    goal: Pose2D
    dims: VehicleDims = field(default_factory=VehicleDims)
    limits: ModelLimits = field(default_factory=ModelLimits)
    gains: ControllerGains = field(default_factory=ControllerGains)
    idm: IdmParams = field(default_factory=IdmParams)
    tags: list[ScenarioTag] = field(default_factory=list)
    seed: int = 0

    @property
    def duration(self) -> float:
        return self.expert_log[-1].time

    def start_state(self) -> EgoState:
        return self.expert_log[0]


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _round7(values):
    # trims float noise in generated geometry; loads back exactly
    return [round(float(v), 7) for v in values]


def map_to_dict(smap: SemanticMap) -> dict:
    lanes = []
    for lid in sorted(smap.lanes):
        lane = smap.lanes[lid]
        lanes.append({
            "id": lane.lane_id,
            "centerline": [_round7(p) for p in
                           zip(lane.xs.tolist(), lane.ys.tolist())],
            "speed_limit": lane.speed_limit,
            "successors": list(lane.successors),
            "left_neighbor": lane.left_neighbor,
            "right_neighbor": lane.right_neighbor,
        })
    return {
        "lanes": lanes,
        "driveable_area": [[_round7(p) for p in poly.tolist()]
                           for poly in smap.driveable_area],
        "crosswalks": [[_round7(p) for p in poly.tolist()]
                       for poly in smap.crosswalks],
        "stop_lines": [{"lane": sl.lane_id, "p0": _round7(sl.p0),
                        "p1": _round7(sl.p1)}
                       for sl in smap.stop_lines],
    }


def scenario_to_dict(scn: Scenario) -> dict:
    d = {
        "schema_version": SCHEMA_VERSION,
        "meta": {"id": scn.scenario_id, "kind": scn.kind, "city": scn.city,
                 "seed": scn.seed},
        "map": map_to_dict(scn.smap),
        "ego": {
            "dims": {"length": scn.dims.length, "width": scn.dims.width,
                     "wheelbase": scn.dims.wheelbase,
                     "rear_axle_to_center": scn.dims.rear_axle_to_center},
            "ego_model": {"max_speed": scn.limits.max_speed,
                          "min_accel": scn.limits.min_accel,
                          "max_accel": scn.limits.max_accel,
                          "max_steer": scn.limits.max_steer,
                          "max_steer_rate": scn.limits.max_steer_rate},
            "controller": {"lookahead_base": scn.gains.lookahead_base,
                           "lookahead_speed_gain": scn.gains.lookahead_speed_gain,
                           "speed_kp": scn.gains.speed_kp,
                           "steer_kp": scn.gains.steer_kp},
        },
        "idm": {"min_gap": scn.idm.min_gap,
                "time_headway": scn.idm.time_headway,
                "max_accel": scn.idm.max_accel,
                "comfort_decel": scn.idm.comfort_decel,
                "exponent": scn.idm.exponent,
                "desired_speed": scn.idm.desired_speed},
        "expert_log": [[s.time, s.pose.x, s.pose.y, s.pose.heading,
                        s.velocity, s.acceleration, s.steering_angle]
                       for s in scn.expert_log],
        "agents": [{
            "id": tr.object_id,
            "category": tr.category,
            "length": tr.length,
            "width": tr.width,
            "states": [[float(tr.times[i]), float(tr.xs[i]), float(tr.ys[i]),
                        float(tr.headings[i]), float(tr.vxs[i]),
                        float(tr.vys[i])] for i in range(len(tr.times))],
        } for tr in scn.agents],
        "goal": [scn.goal.x, scn.goal.y, scn.goal.heading],
        "tags": [{"kind": t.kind, "t_start": t.t_start, "t_end": t.t_end,
                  "subjects": list(t.subjects)} for t in scn.tags],
    }
    return d


def scenario_from_dict(d: dict) -> Scenario:
    try:
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported schema_version {d.get('schema_version')!r}")
        meta = d["meta"]
        m = d["map"]
        lanes = [Lane(ld["id"], ld["centerline"], ld["speed_limit"],
                      ld.get("successors", ()), ld.get("left_neighbor"),
                      ld.get("right_neighbor")) for ld in m["lanes"]]
        smap = SemanticMap(
            lanes,
            [np.asarray(p, dtype=np.float64) for p in m.get("driveable_area", [])],
            [np.asarray(p, dtype=np.float64) for p in m.get("crosswalks", [])],
            [StopLine(s["lane"], tuple(s["p0"]), tuple(s["p1"]))
             for s in m.get("stop_lines", [])])

        ego = d["ego"]
        dims = VehicleDims(**ego["dims"])
        limits = ModelLimits(**ego.get("ego_model", {}))
        gains = ControllerGains(**ego.get("controller", {}))
        idm = IdmParams(**d.get("idm", {}))

        log = []
        for row in d["expert_log"]:
            t, x, y, h, v, a, steer = row
            log.append(EgoState(float(t), Pose2D(float(x), float(y), float(h)),
                                float(v), float(a), float(steer), dims))
        agents = []
        for ad in d.get("agents", []):
            states = np.asarray(ad["states"], dtype=np.float64)
            agents.append(TrackedObject(
                ad["id"], ad["category"], states[:, 0], states[:, 1],
                states[:, 2], states[:, 3], states[:, 4], states[:, 5],
                float(ad["length"]), float(ad["width"])))
        goal = Pose2D(*[float(v) for v in d["goal"]])
        tags = [ScenarioTag(t["kind"], float(t["t_start"]), float(t["t_end"]),
                            tuple(t.get("subjects", ())))
                for t in d.get("tags", [])]
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed scenario file: {exc!r}") from exc

    scn = Scenario(meta["id"], meta.get("kind", "unknown"),
                   meta.get("city", "boston"), smap, log, agents, goal,
                   dims, limits, gains, idm, tags, int(meta.get("seed", 0)))
    _check_invariants(scn)
    return scn


def _check_invariants(scn: Scenario):
    if len(scn.expert_log) < 2:
        raise ValidationError("expert log needs >= 2 states")
    times = [s.time for s in scn.expert_log]
    for i, t in enumerate(times):
        if abs(t - i * DT) > 1e-6:
            raise ValidationError(f"expert log not on the {DT}s grid at #{i}")
    for tr in scn.agents:
        k0 = round(float(tr.times[0]) / DT)
        for i, t in enumerate(tr.times):
            if abs(float(t) - (k0 + i) * DT) > 1e-6:
                raise ValidationError(
                    f"agent {tr.object_id} not on the {DT}s grid")
    ids = [tr.object_id for tr in scn.agents]
    if len(ids) != len(set(ids)):
        raise ValidationError("duplicate agent ids")
    for tag in scn.tags:
        if not (0.0 <= tag.t_start < tag.t_end <= scn.duration + 1e-9):
            raise ValidationError(f"tag {tag.kind} outside the log span")
    if not math.isfinite(scn.goal.x + scn.goal.y):
        raise ValidationError("goal must be finite")


def save_scenario(scn: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dump_json(scenario_to_dict(scn)), encoding="utf-8")
    return path


def load_scenario(path: str | Path) -> Scenario:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(d)


def validate_scenario_file(path: str | Path) -> list[str]:
    """Returns a list of problems; empty means the file is valid."""
    try:
        load_scenario(path)
        return []
    except ValidationError as exc:
        return [str(exc)]


def load_scenario_dir(dirpath: str | Path) -> list[Scenario]:
    files = sorted(Path(dirpath).glob("*.json"))
    scenarios = [load_scenario(f) for f in files]
    scenarios.sort(key=lambda s: s.scenario_id)
    return scenarios
