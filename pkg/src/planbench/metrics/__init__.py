"""Per-scenario metric computation (common + scenario-based families)."""
