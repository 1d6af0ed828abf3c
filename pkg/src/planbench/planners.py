"""Planner interface, built-in baselines and the external stdio client.

A planner receives a PlannerQuery each replan period and returns a
trajectory covering the configured horizon. Built-ins run in-process;
external planners are subprocesses speaking the line-delimited JSON
protocol documented in the README.
"""

from __future__ import annotations

import json
import math
import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from planbench.agents import IdmParams, idm_accel
from planbench.errors import (MalformedPlan, PlannerCrash, PlannerTimeout,
                              ProtocolViolation, ValidationError)
from planbench.geometry import Pose2D
from planbench.scenario_io import Scenario, map_to_dict
from planbench.semantic_map import LanePath, Route, lead_agent
from planbench.trajectory import (DT, EgoState, ObjectState, Trajectory,
                                  ego_log_trajectory, grid_index)

DEFAULT_TIMEOUT_MS = 1000
TIMEOUT_ENV = "PLANBENCH_PLANNER_TIMEOUT_MS"


@dataclass(frozen=True)
class PlannerQuery:
    """World snapshot handed to the planner at one replan time."""

    time: float
    ego: EgoState
    agents: tuple[ObjectState, ...]
    route: Route
    goal: Pose2D


class Planner:
    """Base planner; subclasses override plan()."""

    name = "base"

    def init(self, scenario: Scenario, route: Route, dt: float,
             horizon: float) -> None:
        self.scenario = scenario
        self.route = route
        self.dt = dt
        self.horizon = horizon

    def plan(self, query: PlannerQuery) -> Trajectory:
        raise NotImplementedError

    def close(self) -> None:
        pass


class LogReplayPlanner(Planner):
    """Emits the expert future; holds the final pose past the log end."""

    name = "log_replay"

    def plan(self, query: PlannerQuery) -> Trajectory:
        log = self.scenario.expert_log
        n = int(round(self.horizon / self.dt)) + 1
        k0 = grid_index(query.time, self.dt)
        times, xs, ys, hs, sp = [], [], [], [], []
        last = log[-1]
        for k in range(k0, k0 + n):
            t = k * self.dt
            if k < len(log):
                s = log[k]
                times.append(s.time)
                xs.append(s.pose.x)
                ys.append(s.pose.y)
                hs.append(s.pose.heading)
                sp.append(s.velocity)
            else:
                times.append(t)
                xs.append(last.pose.x)
                ys.append(last.pose.y)
                hs.append(last.pose.heading)
                sp.append(0.0)
        return Trajectory(times, xs, ys, hs, sp)


class ConstantVelocityPlanner(Planner):
    """Extrapolates the current state at fixed speed and heading."""

    name = "constant_velocity"

    def plan(self, query: PlannerQuery) -> Trajectory:
        ego = query.ego
        n = int(round(self.horizon / self.dt)) + 1
        c = math.cos(ego.pose.heading)
        s = math.sin(ego.pose.heading)
        times = [query.time + k * self.dt for k in range(n)]
        xs = [ego.pose.x + ego.velocity * c * (k * self.dt) for k in range(n)]
        ys = [ego.pose.y + ego.velocity * s * (k * self.dt) for k in range(n)]
        hs = [ego.pose.heading] * n
        sp = [ego.velocity] * n
        return Trajectory(times, xs, ys, hs, sp)


class BrakeToStopPlanner(Planner):
    """Plans a straight-line stop at comfortable deceleration."""

    name = "brake_to_stop"
    decel = 3.0  # m/s^2

    def plan(self, query: PlannerQuery) -> Trajectory:
        ego = query.ego
        n = int(round(self.horizon / self.dt)) + 1
        c = math.cos(ego.pose.heading)
        s = math.sin(ego.pose.heading)
        times, xs, ys, hs, sp = [], [], [], [], []
        for k in range(n):
            tau = k * self.dt
            v = max(0.0, ego.velocity - self.decel * tau)
            t_stop = ego.velocity / self.decel
            if tau < t_stop:
                dist = ego.velocity * tau - 0.5 * self.decel * tau * tau
            else:
                dist = ego.velocity * t_stop / 2.0
            times.append(query.time + tau)
            xs.append(ego.pose.x + dist * c)
            ys.append(ego.pose.y + dist * s)
            hs.append(ego.pose.heading)
            sp.append(v)
        return Trajectory(times, xs, ys, hs, sp)


class IdmRouteFollowerPlanner(Planner):
    """Follows the route centerline at IDM speed w.r.t. the lead agent."""

    name = "idm_route_follower"

    def init(self, scenario, route, dt, horizon):
        super().init(scenario, route, dt, horizon)
        self.path = LanePath(scenario.smap, route.lane_ids)
        self.params = scenario.idm

    def plan(self, query: PlannerQuery) -> Trajectory:
        ego = query.ego
        ecx, ecy = ego.center()
        _, arc0, _ = self.path.project(ecx, ecy)
        lead = lead_agent(self.scenario.smap, self.path, ego,
                          list(query.agents))
        lead_gap = lead_speed = None
        if lead is not None:
            lead_gap = lead[1]
            obj = next(o for o in query.agents if o.object_id == lead[0])
            ph = self.path.pose_at(arc0 + lead_gap).heading
            lead_speed = obj.vx * math.cos(ph) + obj.vy * math.sin(ph)

        n = int(round(self.horizon / self.dt)) + 1
        offset = ego.footprint.rear_axle_to_center
        arc = arc0
        v = ego.velocity
        times, xs, ys, hs, sp = [], [], [], [], []
        for k in range(n):
            pose = self.path.pose_at(arc)
            # report the rear-axle point, consistent with the ego pose
            times.append(query.time + k * self.dt)
            xs.append(pose.x - offset * math.cos(pose.heading))
            ys.append(pose.y - offset * math.sin(pose.heading))
            hs.append(pose.heading)
            sp.append(v)
            p = IdmParams(desired_speed=min(self.params.desired_speed,
                                            self.path.speed_limit_at(arc)),
                          min_gap=self.params.min_gap,
                          time_headway=self.params.time_headway,
                          max_accel=self.params.max_accel,
                          comfort_decel=self.params.comfort_decel,
                          exponent=self.params.exponent)
            if lead_gap is None:
                a = idm_accel(v, None, 0.0, p)
            else:
                gap = lead_gap + lead_speed * (k * self.dt) - (arc - arc0)
                a = idm_accel(v, max(gap, 1e-3), max(lead_speed, 0.0), p)
            v = max(0.0, v + a * self.dt)
            arc = min(arc + v * self.dt, self.path.total_length)
        return Trajectory(times, xs, ys, hs, sp)


BUILTIN_PLANNERS = {
    "log_replay": LogReplayPlanner,
    "constant_velocity": ConstantVelocityPlanner,
    "brake_to_stop": BrakeToStopPlanner,
    "idm_route_follower": IdmRouteFollowerPlanner,
}


# ---------- external stdio planner ----------

def _query_timeout_s() -> float:
    ms = os.environ.get(TIMEOUT_ENV, "")
    try:
        return max(1.0, float(ms)) / 1000.0 if ms else DEFAULT_TIMEOUT_MS / 1000.0
    except ValueError:
        return DEFAULT_TIMEOUT_MS / 1000.0


class ExternalPlanner(Planner):
    """Subprocess planner speaking line-delimited JSON on stdin/stdout."""

    name = "external"

    def __init__(self, command: str):
        self.command = command
        self.proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()

    def _reader(self, stream):
        for line in stream:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _send(self, obj: dict):
        if self.proc is None or self.proc.poll() is not None:
            raise PlannerCrash("planner process is not running")
        try:
            self.proc.stdin.write(json.dumps(obj) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise PlannerCrash(f"planner stdin closed: {exc}") from exc

    def _recv(self, timeout: float) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise PlannerTimeout(
                f"no reply within {timeout * 1000:.0f} ms") from None
        if line is None:
            raise PlannerCrash("planner closed stdout")
        line = line.strip()
        if not line:
            raise ProtocolViolation("blank line from planner")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolViolation(f"invalid JSON from planner: {exc}") from exc
        if not isinstance(msg, dict) or "type" not in msg:
            raise ProtocolViolation("planner message must be an object "
                                    "with a 'type' field")
        return msg

    def init(self, scenario, route, dt, horizon):
        super().init(scenario, route, dt, horizon)
        self.proc = subprocess.Popen(
            shlex.split(self.command), stdin=subprocess.PIPE,
            stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
            text=True, encoding="utf-8", bufsize=1)
        threading.Thread(target=self._reader, args=(self.proc.stdout,),
                         daemon=True).start()
        self._send({
            "type": "init",
            "map": map_to_dict(scenario.smap),
            "route": list(route.lane_ids),
            "goal": {"x": route.goal.x, "y": route.goal.y,
                     "heading": route.goal.heading},
            "dt": dt,
            "horizon": horizon,
        })
        # model loading may be slow; allow 10 query budgets for the handshake
        msg = self._recv(timeout=10.0 * _query_timeout_s())
        if msg.get("type") != "ready":
            raise ProtocolViolation(f"expected ready, got {msg.get('type')!r}")

    def plan(self, query: PlannerQuery) -> Trajectory:
        self._send({
            "type": "plan_request",
            "time": query.time,
            "ego": {"time": query.ego.time, "x": query.ego.pose.x,
                    "y": query.ego.pose.y, "heading": query.ego.pose.heading,
                    "velocity": query.ego.velocity,
                    "acceleration": query.ego.acceleration,
                    "steering_angle": query.ego.steering_angle},
            "agents": [{"id": o.object_id, "category": o.category,
                        "x": o.pose.x, "y": o.pose.y,
                        "heading": o.pose.heading, "vx": o.vx, "vy": o.vy,
                        "length": o.length, "width": o.width}
                       for o in query.agents],
        })
        msg = self._recv(timeout=_query_timeout_s())
        if msg.get("type") != "plan":
            raise ProtocolViolation(f"expected plan, got {msg.get('type')!r}")
        states = msg.get("states")
        if not isinstance(states, list) or not states:
            raise MalformedPlan("plan without states")
        try:
            times = [float(s["t"]) for s in states]
            xs = [float(s["x"]) for s in states]
            ys = [float(s["y"]) for s in states]
            hs = [float(s["heading"]) for s in states]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedPlan(f"bad plan state: {exc!r}") from exc
        try:
            return Trajectory(times, xs, ys, hs)
        except ValidationError as exc:
            raise MalformedPlan(str(exc)) from exc

    def close(self):
        if self.proc is None:
            return
        try:
            if self.proc.poll() is None:
                self._send({"type": "shutdown"})
                self.proc.wait(timeout=2.0)
        except (PlannerCrash, subprocess.TimeoutExpired):
            self.proc.kill()
        finally:
            if self.proc.poll() is None:
                self.proc.kill()
            self.proc = None


def resolve_planner(spec: str) -> Planner:
    """Planner factory for 'builtin:NAME' or 'exec:COMMAND' specs."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTIN_PLANNERS:
            raise ValidationError(
                f"unknown builtin planner {name!r}; "
                f"choose from {sorted(BUILTIN_PLANNERS)}")
        return BUILTIN_PLANNERS[name]()
    if spec.startswith("exec:"):
        return ExternalPlanner(spec.split(":", 1)[1])
    raise ValidationError(f"planner spec must start with builtin: or exec:, "
                          f"got {spec!r}")
