"""Batch evaluation: run scenarios, compute metrics, emit reports.

Reports are deterministic: scenario entries are sorted by id, JSON keys
are sorted, floats use shortest round-trip formatting. Worker-pool
execution changes nothing about the bytes.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from planbench import __version__, kernels
from planbench.errors import ValidationError
from planbench.geometry import Pose2D
from planbench.metrics import scenario as mscen
from planbench.metrics.common import (ComfortLimits, MetricValue,
                                      dynamics_metrics, goal_metrics,
                                      safety_metrics, similarity_metrics)
from planbench.planners import resolve_planner
from planbench.scenario_io import Scenario, dump_json, load_scenario
from planbench.scoring import (GROUPS, REGISTRY_VERSION, ScoringPolicy,
                               aggregate, scenario_weighted_score)
from planbench.simulation import (MODE_OPEN, SimConfig, SimLog, SimStep,
                                  build_route, run_scenario)
from planbench.trajectory import DT, EgoState, Trajectory, ego_log_trajectory

REPORT_SCHEMA_VERSION = 1


def _plan_pseudo_log(scenario: Scenario, plan: Trajectory) -> SimLog:
    """Treat one planned trajectory as if it had been driven."""
    from planbench.simulation import _replay_all

    log = SimLog(scenario.scenario_id, "plan")
    speeds = (plan.speeds if plan.speeds is not None
              else np.hypot(np.gradient(plan.xs, DT, edge_order=2),
                            np.gradient(plan.ys, DT, edge_order=2)))
    for i in range(len(plan)):
        t = float(plan.times[i])
        ego = EgoState(t, Pose2D(float(plan.xs[i]), float(plan.ys[i]),
                                 float(plan.headings[i])),
                       float(speeds[i]), 0.0, 0.0, scenario.dims)
        agents = tuple(_replay_all(scenario, t))
        log.steps.append(SimStep(t, ego, agents, 0))
    return log


def _mean_metrics(per_plan: list[dict[str, MetricValue]]) -> dict[str, MetricValue]:
    out: dict[str, MetricValue] = {}
    names = sorted({n for d in per_plan for n in d})
    for name in names:
        vals = [d[name].value for d in per_plan
                if name in d and d[name].value is not None]
        unit = next(d[name].unit for d in per_plan if name in d)
        out[name] = MetricValue(name, (sum(vals) / len(vals)) if vals else None,
                                unit)
    return out


def open_loop_metrics(scenario: Scenario, simlog: SimLog,
                      route) -> dict[str, MetricValue]:
    """Score the planned trajectories (the driven log equals the expert)."""
    per_plan = []
    for _pid, _t, plan in simlog.plans:
        plog = _plan_pseudo_log(scenario, plan)
        metrics = {}
        metrics.update(similarity_metrics(plog, scenario.expert_log, route))
        metrics.update(dynamics_metrics(plog))
        metrics.update(safety_metrics(plog, scenario.smap, route))
        per_plan.append(metrics)
    out = _mean_metrics(per_plan) if per_plan else {}
    # boolean metrics: any plan violating counts as a violation
    for name in ("collision", "off_road_any"):
        vals = [d[name].value for d in per_plan if name in d]
        if vals:
            out[name] = MetricValue(name, 1.0 if any(vals) else 0.0, "bool")
    if simlog.plans:
        final_plan = simlog.plans[-1][2]
        plog = _plan_pseudo_log(scenario, final_plan)
        out.update(goal_metrics(plog, scenario.smap, route))
    return out


def closed_loop_metrics(scenario: Scenario, simlog: SimLog, route,
                        tags) -> dict[str, MetricValue]:
    metrics: dict[str, MetricValue] = {}
    metrics.update(safety_metrics(simlog, scenario.smap, route))
    metrics.update(similarity_metrics(simlog, scenario.expert_log, route))
    metrics.update(dynamics_metrics(simlog, ComfortLimits()))
    metrics.update(goal_metrics(simlog, scenario.smap, route))

    decisions = []
    for tag in tags:
        try:
            if tag.kind in ("lane_change", "merge"):
                metrics.update(mscen.lane_change_metrics(simlog, tag,
                                                         scenario.smap))
            elif tag.kind in ("pedestrian_interaction", "cyclist_interaction"):
                metrics.update(mscen.vru_interaction_metrics(simlog, tag,
                                                             scenario.smap))
            if tag.kind in ("pedestrian_interaction", "turn_left_unprotected"):
                rec = mscen.decision_agreement(simlog, scenario.expert_log,
                                               tag, scenario.agents,
                                               scenario.smap)
                if rec is not None:
                    decisions.append(rec)
        except ValidationError:
            continue  # tag interval outside a truncated run
    if decisions:
        agree = all(r.agree for r in decisions)
        metrics["decision_agreement"] = MetricValue(
            "decision_agreement", 1.0 if agree else 0.0, "bool",
            series=[[r.agent_id, r.planner_decision, r.expert_decision]
                    for r in decisions])
    return metrics


@dataclass
class ScenarioResult:
    scenario_id: str
    kind: str
    city: str
    status: str          # scored | failed
    termination: str
    tags: list
    metrics: dict[str, MetricValue]
    digest: str
    error: str = ""


def evaluate_scenario(scenario: Scenario, planner_spec: str, mode: str,
                      retag: bool = False,
                      config: SimConfig | None = None) -> ScenarioResult:
    planner = resolve_planner(planner_spec)
    route = build_route(scenario)
    tags = (mscen.tag_scenario(scenario.expert_log, scenario.agents,
                               scenario.smap) if retag else scenario.tags)
    simlog = run_scenario(scenario, planner, mode, config)
    if simlog.termination.startswith("planner_error"):
        return ScenarioResult(scenario.scenario_id, scenario.kind,
                              scenario.city, "failed", simlog.termination,
                              tags, {}, simlog.digest(),
                              error=simlog.termination)
    if mode == MODE_OPEN:
        metrics = open_loop_metrics(scenario, simlog, route)
    else:
        metrics = closed_loop_metrics(scenario, simlog, route, tags)
    return ScenarioResult(scenario.scenario_id, scenario.kind, scenario.city,
                          "scored", simlog.termination, tags, metrics,
                          simlog.digest())


def _metric_to_dict(m: MetricValue) -> dict:
    d = {"value": None if m.value is None else float(m.value), "unit": m.unit}
    if m.series is not None:
        d["series"] = m.series
    return d


def result_to_dict(r: ScenarioResult) -> dict:
    return {
        "id": r.scenario_id,
        "kind": r.kind,
        "city": r.city,
        "status": r.status,
        "termination": r.termination,
        "error": r.error,
        "tags": [{"kind": t.kind, "t_start": t.t_start, "t_end": t.t_end,
                  "subjects": list(t.subjects)} for t in r.tags],
        "metrics": {name: _metric_to_dict(m)
                    for name, m in sorted(r.metrics.items())},
        "sim_digest": r.digest,
    }


def metrics_from_dict(d: dict) -> dict[str, MetricValue]:
    return {name: MetricValue(name, md.get("value"), md.get("unit", ""),
                              md.get("series"))
            for name, md in d.items()}


def _eval_worker(args) -> dict:
    path, planner_spec, mode, retag, trace_dir = args
    scenario = load_scenario(path)
    config = SimConfig(mode=mode)
    planner = resolve_planner(planner_spec)
    route = build_route(scenario)
    tags = (mscen.tag_scenario(scenario.expert_log, scenario.agents,
                               scenario.smap) if retag else scenario.tags)
    simlog = run_scenario(scenario, planner, mode, config)
    if trace_dir:
        _write_trace(Path(trace_dir) / f"{scenario.scenario_id}.csv", simlog)
    if simlog.termination.startswith("planner_error"):
        res = ScenarioResult(scenario.scenario_id, scenario.kind,
                             scenario.city, "failed", simlog.termination,
                             tags, {}, simlog.digest(),
                             error=simlog.termination)
    else:
        if mode == MODE_OPEN:
            metrics = open_loop_metrics(scenario, simlog, route)
        else:
            metrics = closed_loop_metrics(scenario, simlog, route, tags)
        res = ScenarioResult(scenario.scenario_id, scenario.kind,
                             scenario.city, "scored", simlog.termination,
                             tags, metrics, simlog.digest())
    return result_to_dict(res)


def _write_trace(path: Path, simlog: SimLog):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["time", "x", "y", "heading", "velocity", "acceleration",
                    "steering_angle", "plan_id"])
        for s in simlog.steps:
            w.writerow([s.time, s.ego.pose.x, s.ego.pose.y,
                        s.ego.pose.heading, s.ego.velocity,
                        s.ego.acceleration, s.ego.steering_angle, s.plan_id])


def run_batch(scenario_dir: str | Path, planner_spec: str, mode: str,
              policy: ScoringPolicy | None = None, jobs: int = 1,
              retag: bool = False, trace_dir: str | Path | None = None
              ) -> tuple[dict, int]:
    """Evaluate a scenario directory; returns (report dict, exit code)."""
    policy = policy or ScoringPolicy()
    files = sorted(Path(scenario_dir).glob("*.json"))
    if not files:
        raise ValidationError(f"no scenario files in {scenario_dir}")
    args = [(str(f), planner_spec, mode, retag,
             str(trace_dir) if trace_dir else "") for f in files]
    if jobs <= 1:
        entries = [_eval_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_eval_worker, args))
    entries.sort(key=lambda e: e["id"])

    scored = [e for e in entries if e["status"] == "scored"]
    failed = [e for e in entries if e["status"] != "scored"]
    agg = {}
    if scored:
        metric_sets = [metrics_from_dict(e["metrics"]) for e in scored]
        score = aggregate(metric_sets, policy)
        agg = {
            "policy": {"kind": policy.kind, "weights": policy.weights,
                       "thresholds": policy.thresholds},
            "weighted_sum": score.value if policy.kind != "threshold_violations"
                            else aggregate(metric_sets,
                                           ScoringPolicy("weighted_sum")).value,
            "threshold_violations": aggregate(
                metric_sets, ScoringPolicy("threshold_violations")).value,
            "hierarchy": {g: score.hierarchy[i]
                          for i, g in enumerate(GROUPS)},
            "scored_scenarios": len(scored),
            "failed_scenarios": len(failed),
        }
    report = {
        "report_schema_version": REPORT_SCHEMA_VERSION,
        "config": {
            "planner": planner_spec,
            "mode": mode,
            "dt": DT,
            "replan_period": SimConfig(mode=mode).replan_period,
            "planner_horizon": SimConfig(mode=mode).planner_horizon,
            "registry_version": REGISTRY_VERSION,
            "kernel_backend": kernels.backend_name(),
            "planbench_version": __version__,
            "comfort_limits": vars(ComfortLimits()),
            "tagger_thresholds": {
                "lane_change_displacement_m": mscen.LANE_CHANGE_DISPLACEMENT,
                "turn_heading_change_rad": mscen.TURN_HEADING_CHANGE,
                "vru_path_radius_m": mscen.VRU_PATH_RADIUS,
                "close_proximity_clearance_m": mscen.CLOSE_PROXIMITY_CLEARANCE,
                "high_accel_mps2": mscen.HIGH_ACCEL,
                "passing_lateral_window_m": 3.0,
            },
        },
        "scenarios": entries,
        "aggregate": agg,
    }
    exit_code = 2 if failed else 0
    return report, exit_code


def write_report(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(report), encoding="utf-8")
    return path


def rescore_reports(report_paths: list[str | Path],
                    policy: ScoringPolicy) -> dict:
    """Re-aggregate existing report files under one policy."""
    import json

    out = []
    for p in report_paths:
        d = json.loads(Path(p).read_text(encoding="utf-8"))
        scored = [e for e in d.get("scenarios", [])
                  if e.get("status") == "scored"]
        if not scored:
            out.append({"report": str(p), "score": None})
            continue
        metric_sets = [metrics_from_dict(e["metrics"]) for e in scored]
        score = aggregate(metric_sets, policy)
        out.append({
            "report": str(p),
            "planner": d.get("config", {}).get("planner", "?"),
            "kind": policy.kind,
            "score": score.value if policy.kind != "hierarchy" else None,
            "hierarchy": {g: score.hierarchy[i] for i, g in enumerate(GROUPS)},
            "sort_key": list(score.sort_key()),
        })
    out.sort(key=lambda e: e.get("sort_key") or [-math.inf], reverse=True)
    return {"policy": policy.kind, "ranking": out}
