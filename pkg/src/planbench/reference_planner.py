"""Reference external planner: constant velocity over the stdio protocol.

Speaks the line-delimited JSON protocol (init/ready, plan_request/plan,
shutdown) using only the standard library, as an external submission
would. Run with: python -m planbench.reference_planner
"""

from __future__ import annotations

import json
import math
import sys


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def main() -> int:
    dt = 0.1
    horizon = 8.0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        msg = json.loads(line)
        kind = msg.get("type")
        if kind == "init":
            dt = float(msg.get("dt", 0.1))
            horizon = float(msg.get("horizon", 8.0))
            emit({"type": "ready"})
        elif kind == "plan_request":
            ego = msg["ego"]
            x = float(ego["x"])
            y = float(ego["y"])
            heading = float(ego["heading"])
            v = float(ego["velocity"])
            t0 = float(msg["time"])
            c, s = math.cos(heading), math.sin(heading)
            n = int(round(horizon / dt)) + 1
            states = [{"t": t0 + k * dt,
                       "x": x + v * c * k * dt,
                       "y": y + v * s * k * dt,
                       "heading": heading} for k in range(n)]
            emit({"type": "plan", "states": states})
        elif kind == "shutdown":
            return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
