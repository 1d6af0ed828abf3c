"""planbench: deterministic closed-loop benchmark for vehicle motion planners."""

__version__ = "0.1.0"
