"""Typed errors raised across the harness."""


class ValidationError(ValueError):
    """Malformed input data (trajectory, scenario file, config)."""


class RouteNotFound(Exception):
    """Goal unreachable in the lane graph."""


class TrackExpired(Exception):
    """Replay query outside a track's (extended) time span."""


class PlanHorizonError(Exception):
    """Active plan does not cover the controller's required window."""


class PlannerError(Exception):
    """Base for planner-side failures; the scenario is failed, not the batch."""


class PlannerTimeout(PlannerError):
    """External planner exceeded the per-query wall-clock budget."""


class MalformedPlan(PlannerError):
    """Planner returned an unusable trajectory."""


class ProtocolViolation(PlannerError):
    """External planner broke the stdio message protocol."""


class PlannerCrash(PlannerError):
    """External planner process exited or raised unexpectedly."""


class UnknownMetric(KeyError):
    """Metric name missing from the scoring registry."""
