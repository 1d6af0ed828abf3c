"""Closed- and open-loop simulation of one scenario.

The loop queries the planner every replan period, tracks the active plan
with the controller, integrates the bicycle model, and advances background
agents by replay or by the reactive IDM policy. Collisions and off-road
excursions never stop a run; they are metrics.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from planbench import agents as agents_mod
from planbench.control import track
from planbench.errors import (MalformedPlan, PlanHorizonError, PlannerCrash,
                              PlannerError, TrackExpired, ValidationError)
from planbench.geometry import Pose2D
from planbench.planners import Planner, PlannerQuery
from planbench.scenario_io import Scenario, dump_json
from planbench.semantic_map import Route, plan_route, route_progress
from planbench.trajectory import (DT, EgoState, ObjectState, Trajectory,
                                  resample_trajectory)
from planbench.vehicle import step as model_step

MODE_OPEN = "open_loop"
MODE_CLOSED = "closed_loop_nonreactive"
MODE_REACTIVE = "closed_loop_reactive"
MODES = (MODE_OPEN, MODE_CLOSED, MODE_REACTIVE)

PERCEPTION_RANGE = 100.0       # m, ground-truth visibility around the ego
ROUTE_COMPLETE_FRACTION = 0.995
PLAN_MARGIN = 100.0            # m allowed outside the map bounding box
HARD_DURATION_CAP = 120.0      # s


@dataclass(frozen=True)
class SimConfig:
    mode: str = MODE_CLOSED
    dt: float = DT
    replan_period: float = 0.5
    planner_horizon: float = 8.0
    max_duration: float | None = None  # default: expert log duration

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        steps = self.replan_period / self.dt
        if abs(steps - round(steps)) > 1e-9 or steps < 1:
            raise ValidationError("replan_period must be a multiple of dt")
        if not 3.0 <= self.planner_horizon <= 8.0:
            raise ValidationError("planner_horizon must be within [3, 8] s")

    @property
    def replan_every(self) -> int:
        return int(round(self.replan_period / self.dt))


@dataclass(frozen=True)
class SimStep:
    time: float
    ego: EgoState
    agents: tuple[ObjectState, ...]
    plan_id: int


@dataclass
class SimLog:
    scenario_id: str
    mode: str
    steps: list[SimStep] = field(default_factory=list)
    plans: list[tuple[int, float, Trajectory]] = field(default_factory=list)
    termination: str = ""

    def ego_states(self) -> list[EgoState]:
        return [s.ego for s in self.steps]

    def digest(self) -> str:
        """Stable content hash of the whole log."""
        payload = {
            "scenario": self.scenario_id,
            "mode": self.mode,
            "termination": self.termination,
            "steps": [[s.time, s.ego.pose.x, s.ego.pose.y,
                       s.ego.pose.heading, s.ego.velocity,
                       s.ego.acceleration, s.ego.steering_angle, s.plan_id,
                       [[o.object_id, o.pose.x, o.pose.y, o.pose.heading,
                         o.vx, o.vy] for o in s.agents]]
                      for s in self.steps],
            "plans": [[pid, t, traj.times.tolist(), traj.xs.tolist(),
                       traj.ys.tolist(), traj.headings.tolist()]
                      for pid, t, traj in self.plans],
        }
        return hashlib.sha256(dump_json(payload).encode()).hexdigest()


def validate_plan(plan: Trajectory, t: float, config: SimConfig,
                  bbox: tuple[float, float, float, float]) -> Trajectory:
    """Check and resample a planner trajectory onto the dt grid."""
    if plan.t_start > t + 1e-6:
        raise MalformedPlan(f"plan starts at {plan.t_start:.3f}s, after {t:.3f}s")
    if plan.t_end < t + config.planner_horizon - 1e-6:
        raise MalformedPlan(
            f"horizon shortfall: plan ends {plan.t_end:.3f}s, "
            f"need {t + config.planner_horizon:.3f}s")
    x0, y0, x1, y1 = bbox
    if (plan.xs.min() < x0 - PLAN_MARGIN or plan.xs.max() > x1 + PLAN_MARGIN
            or plan.ys.min() < y0 - PLAN_MARGIN
            or plan.ys.max() > y1 + PLAN_MARGIN):
        raise MalformedPlan("plan leaves the map bounding box + 100 m margin")
    if abs(plan.t_start - t) < 1e-9 and _on_grid(plan, config.dt):
        return plan
    return resample_trajectory(plan, config.dt)


def _on_grid(plan: Trajectory, dt: float) -> bool:
    steps = np.diff(plan.times)
    return bool(np.all(np.abs(steps - dt) < 1e-9))


def query_planner(planner: Planner, query: PlannerQuery, config: SimConfig,
                  bbox) -> Trajectory:
    """One planner query with output validation; raises PlannerError."""
    try:
        plan = planner.plan(query)
    except PlannerError:
        raise
    except Exception as exc:  # in-process planner bug
        raise PlannerCrash(f"planner raised {type(exc).__name__}: {exc}") from exc
    if not isinstance(plan, Trajectory):
        raise MalformedPlan("planner returned no trajectory")
    return validate_plan(plan, query.time, config, bbox)


def _visible(ego: EgoState, objects: list[ObjectState]) -> tuple[ObjectState, ...]:
    ex, ey = ego.pose.x, ego.pose.y
    return tuple(o for o in objects
                 if math.hypot(o.pose.x - ex, o.pose.y - ey) <= PERCEPTION_RANGE)


def _replay_all(scenario: Scenario, t: float) -> list[ObjectState]:
    out = []
    for tr in scenario.agents:
        try:
            out.append(agents_mod.replay_state(tr, t))
        except TrackExpired:
            continue
    out.sort(key=lambda o: o.object_id)
    return out


def _ego_object(ego: EgoState) -> ObjectState:
    cx, cy = ego.center()
    vx, vy = ego.velocity_xy()
    return ObjectState("ego", "vehicle", Pose2D(cx, cy, ego.pose.heading),
                       vx, vy, ego.footprint.length, ego.footprint.width)


class _ReactiveWorld:
    """Vehicle agents as IDM runtime states; VRUs stay on replay."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.pending = sorted(
            (tr for tr in scenario.agents if tr.category == "vehicle"),
            key=lambda tr: tr.object_id)
        self.runtime: dict[str, agents_mod.AgentRuntimeState] = {}

    def spawn_due(self, t: float):
        still = []
        for tr in self.pending:
            if tr.t_start <= t + 1e-9:
                self.runtime[tr.object_id] = agents_mod.initial_runtime_state(
                    self.scenario.smap, tr)
            else:
                still.append(tr)
        self.pending = still

    def states(self, t: float) -> list[ObjectState]:
        out = [st.object_state() for st in self.runtime.values()]
        for tr in self.scenario.agents:
            if tr.category == "vehicle":
                continue
            try:
                out.append(agents_mod.replay_state(tr, t))
            except TrackExpired:
                continue
        out.sort(key=lambda o: o.object_id)
        return out

    def advance(self, snapshot: list[ObjectState], dt: float):
        updated = {}
        for oid in sorted(self.runtime):
            nxt = agents_mod.reactive_step(self.runtime[oid], snapshot,
                                           self.scenario.smap, dt,
                                           self.scenario.idm)
            if nxt is not None:
                updated[oid] = nxt
        self.runtime = updated


def build_route(scenario: Scenario) -> Route:
    return plan_route(scenario.smap, scenario.expert_log[0].pose,
                      scenario.goal)


def run_open_loop(scenario: Scenario, planner: Planner,
                  config: SimConfig | None = None) -> SimLog:
    """Query the planner along the expert log; the world never diverges."""
    config = config or SimConfig(mode=MODE_OPEN)
    route = build_route(scenario)
    bbox = scenario.smap.bounding_box()
    planner.init(scenario, route, config.dt, config.planner_horizon)
    log = SimLog(scenario.scenario_id, MODE_OPEN)
    n = len(scenario.expert_log)
    plan_id = -1
    try:
        for k in range(n):
            ego = scenario.expert_log[k]
            objects = _replay_all(scenario, ego.time)
            if k % config.replan_every == 0 and k < n - 1:
                query = PlannerQuery(ego.time, ego, _visible(ego, objects),
                                     route, scenario.goal)
                plan = query_planner(planner, query, config, bbox)
                plan_id += 1
                log.plans.append((plan_id, ego.time, plan))
            log.steps.append(SimStep(ego.time, ego, tuple(objects),
                                     max(plan_id, 0)))
        log.termination = "log_end"
    except PlannerError as exc:
        log.termination = f"planner_error:{type(exc).__name__}: {exc}"
    finally:
        planner.close()
    return log


def run_closed_loop(scenario: Scenario, planner: Planner, reactive: bool,
                    config: SimConfig | None = None) -> SimLog:
    """Drive the simulated ego with the planner through controller + model."""
    config = config or SimConfig(
        mode=MODE_REACTIVE if reactive else MODE_CLOSED)
    route = build_route(scenario)
    bbox = scenario.smap.bounding_box()
    planner.init(scenario, route, config.dt, config.planner_horizon)
    log = SimLog(scenario.scenario_id, config.mode)
    max_duration = min(config.max_duration or scenario.duration,
                       HARD_DURATION_CAP)

    ego = scenario.start_state()
    world = _ReactiveWorld(scenario) if reactive else None
    if world is not None:
        world.spawn_due(0.0)
    active_plan: Trajectory | None = None
    plan_id = -1
    k = 0
    try:
        while True:
            t = k * config.dt
            objects = (world.states(t) if world is not None
                       else _replay_all(scenario, t))
            if k % config.replan_every == 0:
                query = PlannerQuery(t, ego, _visible(ego, objects), route,
                                     scenario.goal)
                active_plan = query_planner(planner, query, config, bbox)
                plan_id += 1
                log.plans.append((plan_id, t, active_plan))
            log.steps.append(SimStep(t, ego, tuple(objects), plan_id))

            if t >= max_duration - 1e-9:
                log.termination = "max_duration"
                break
            progress = route_progress(scenario.smap, route, ego.pose.x,
                                      ego.pose.y)
            if progress >= ROUTE_COMPLETE_FRACTION:
                log.termination = "route_completed"
                break

            u = track(ego, active_plan, scenario.gains, scenario.limits,
                      config.dt)
            # pin sim times to the exact grid (no additive drift)
            ego = replace(model_step(ego, u, config.dt),
                          time=(k + 1) * config.dt)
            if world is not None:
                snapshot = [_ego_object(log.steps[-1].ego)] + list(objects)
                world.advance(snapshot, config.dt)
                world.spawn_due(t + config.dt)
            k += 1
    except (PlannerError, PlanHorizonError) as exc:
        log.termination = f"planner_error:{type(exc).__name__}: {exc}"
    finally:
        planner.close()
    return log


def run_scenario(scenario: Scenario, planner: Planner, mode: str,
                 config: SimConfig | None = None) -> SimLog:
    if config is None:
        config = SimConfig(mode=mode)
    if mode == MODE_OPEN:
        return run_open_loop(scenario, planner, config)
    return run_closed_loop(scenario, planner, mode == MODE_REACTIVE, config)
