"""Metric normalization and benchmark-score aggregation.

Three selectable schemes: weighted sum of normalized metrics, weighted sum
of threshold violations (lower is better), and a lexicographic hierarchy
over the groups safety > rule > comfort > progress. The registry below is
versioned; policy files may override weights and thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from planbench.errors import UnknownMetric, ValidationError
from planbench.metrics.common import MetricValue

REGISTRY_VERSION = "planbench-registry-1"

GROUPS = ("safety", "rule", "comfort", "progress")

LOWER = "lower"            # smaller value scores higher
HIGHER = "higher"          # larger value scores higher (capped at scale)
BOOL_VIOLATION = "bool"    # 0 -> score 1, nonzero -> score 0


@dataclass(frozen=True)
class MetricSpec:
    direction: str
    scale: float
    group: str
    weight: float
    threshold: float | None = None  # violation boundary for threshold scheme


REGISTRY: dict[str, MetricSpec] = {
    # safety
    "collision":        MetricSpec(BOOL_VIOLATION, 1.0, "safety", 4.0, 0.5),
    "ttc_min":          MetricSpec(HIGHER, 5.0, "safety", 1.0, 1.0),
    "time_gap_min":     MetricSpec(HIGHER, 3.0, "safety", 1.0, 0.5),
    # rule
    "off_road_any":     MetricSpec(BOOL_VIOLATION, 1.0, "rule", 2.0, 0.5),
    "off_road_fraction": MetricSpec(LOWER, 0.25, "rule", 1.0, 0.01),
    # comfort
    "jerk_rms":         MetricSpec(LOWER, 5.0, "comfort", 1.0, 5.0),
    "accel_rms":        MetricSpec(LOWER, 3.0, "comfort", 1.0, 3.0),
    "steer_rate_rms":   MetricSpec(LOWER, 0.5, "comfort", 1.0, 0.5),
    "yaw_rate_rms":     MetricSpec(LOWER, 1.0, "comfort", 1.0, 1.0),
    "oscillation":      MetricSpec(LOWER, 30.0, "comfort", 1.0, 30.0),
    "jerk_ratio":       MetricSpec(LOWER, 3.0, "comfort", 0.5, 2.0),
    "accel_ratio":      MetricSpec(LOWER, 3.0, "comfort", 0.5, 2.0),
    "long_accel_violation": MetricSpec(LOWER, 0.25, "comfort", 1.0, 0.05),
    "lat_accel_violation":  MetricSpec(LOWER, 0.25, "comfort", 1.0, 0.05),
    "jerk_violation":   MetricSpec(LOWER, 0.25, "comfort", 1.0, 0.05),
    "yaw_rate_violation": MetricSpec(LOWER, 0.25, "comfort", 1.0, 0.05),
    "steer_rate_violation": MetricSpec(LOWER, 0.25, "comfort", 1.0, 0.05),
    # progress / human similarity
    "route_progress":   MetricSpec(HIGHER, 1.0, "progress", 2.0, 0.5),
    "final_goal_distance": MetricSpec(LOWER, 50.0, "progress", 1.0, 25.0),
    "long_vel_err":     MetricSpec(LOWER, 5.0, "progress", 1.0, 3.0),
    "lat_pos_err":      MetricSpec(LOWER, 2.0, "progress", 1.0, 1.0),
    "stop_pos_err":     MetricSpec(LOWER, 10.0, "progress", 0.5, 5.0),
}

SIMILARITY_METRICS = ("long_vel_err", "lat_pos_err", "stop_pos_err",
                      "jerk_ratio", "accel_ratio")


@dataclass
class ScoringPolicy:
    kind: str = "hierarchy"  # hierarchy | weighted_sum | threshold_violations
    weights: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("hierarchy", "weighted_sum",
                             "threshold_violations"):
            raise ValidationError(f"unknown scoring policy {self.kind!r}")
        for name in list(self.weights) + list(self.thresholds):
            if name not in REGISTRY:
                raise UnknownMetric(name)
        if self.weights:
            if any(w < 0.0 for w in self.weights.values()):
                raise ValidationError("weights must be >= 0")
            if sum(self.weights.values()) <= 0.0:
                raise ValidationError("weights must not sum to zero")

    def weight(self, name: str) -> float:
        return self.weights.get(name, REGISTRY[name].weight)

    def threshold(self, name: str) -> float | None:
        return self.thresholds.get(name, REGISTRY[name].threshold)

    @classmethod
    def from_dict(cls, d: dict) -> "ScoringPolicy":
        return cls(d.get("kind", "hierarchy"), dict(d.get("weights", {})),
                   dict(d.get("thresholds", {})))


def normalize(metric: MetricValue) -> float | None:
    """Map a metric value to [0, 1]; None stays absent."""
    if metric.name not in REGISTRY:
        raise UnknownMetric(metric.name)
    if metric.value is None:
        return None
    spec = REGISTRY[metric.name]
    v = float(metric.value)
    if spec.direction == BOOL_VIOLATION:
        return 0.0 if v != 0.0 else 1.0
    if spec.direction == LOWER:
        return max(0.0, 1.0 - v / spec.scale)
    return min(1.0, max(0.0, v / spec.scale))


def _is_violation(name: str, value: float, threshold: float) -> bool:
    spec = REGISTRY[name]
    if spec.direction == BOOL_VIOLATION:
        return value >= threshold
    if spec.direction == LOWER:
        return value > threshold
    return value < threshold


def scenario_weighted_score(metrics: dict[str, MetricValue],
                            policy: ScoringPolicy,
                            group: str | None = None) -> float | None:
    """Weighted mean over normalized, present metrics (optionally one group)."""
    num = den = 0.0
    for name, metric in sorted(metrics.items()):
        if name not in REGISTRY:
            continue
        if group is not None and REGISTRY[name].group != group:
            continue
        w = policy.weight(name)
        if w <= 0.0:
            continue
        score = normalize(metric)
        if score is None:
            continue
        num += w * score
        den += w
    return None if den == 0.0 else num / den


def scenario_violation_score(metrics: dict[str, MetricValue],
                             policy: ScoringPolicy) -> float:
    total = 0.0
    for name, metric in sorted(metrics.items()):
        if name not in REGISTRY or metric.value is None:
            continue
        th = policy.threshold(name)
        if th is None:
            continue
        if _is_violation(name, float(metric.value), th):
            total += policy.weight(name)
    return total


@dataclass
class ScoreReport:
    kind: str
    value: float | None            # weighted_sum / threshold_violations
    hierarchy: tuple[float, ...] | None
    per_scenario: list[dict]

    def sort_key(self):
        """Higher is better under every scheme."""
        if self.kind == "weighted_sum":
            return (self.value,)
        if self.kind == "threshold_violations":
            return (-self.value,)
        return self.hierarchy


def aggregate(reports: list[dict[str, MetricValue]],
              policy: ScoringPolicy) -> ScoreReport:
    """Aggregate per-scenario metric sets into one benchmark score."""
    if not reports:
        raise ValidationError("no scenario reports to aggregate")

    per_scenario = []
    for metrics in reports:
        entry = {
            "weighted_sum": scenario_weighted_score(metrics, policy),
            "threshold_violations": scenario_violation_score(metrics, policy),
            "groups": {g: scenario_weighted_score(metrics, policy, g)
                       for g in GROUPS},
        }
        per_scenario.append(entry)

    ws_vals = [e["weighted_sum"] for e in per_scenario
               if e["weighted_sum"] is not None]
    ws = sum(ws_vals) / len(ws_vals) if ws_vals else None
    tv = sum(e["threshold_violations"] for e in per_scenario) / len(per_scenario)
    hier = []
    for g in GROUPS:
        vals = [e["groups"][g] for e in per_scenario
                if e["groups"][g] is not None]
        hier.append(sum(vals) / len(vals) if vals else 1.0)
    hierarchy = tuple(hier)

    if policy.kind == "weighted_sum":
        return ScoreReport("weighted_sum", ws, hierarchy, per_scenario)
    if policy.kind == "threshold_violations":
        return ScoreReport("threshold_violations", tv, hierarchy, per_scenario)
    return ScoreReport("hierarchy", ws, hierarchy, per_scenario)


def better_than(a: ScoreReport, b: ScoreReport) -> bool:
    """True when a ranks strictly above b under a's scheme."""
    return a.sort_key() > b.sort_key()
