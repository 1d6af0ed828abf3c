"""planbench command line: generate / run / score / validate.

Exit codes: 0 success, 2 planner protocol failure in a batch,
3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from planbench.errors import ValidationError
from planbench.generator import ALL_KINDS, generate_to_dir
from planbench.runner import rescore_reports, run_batch, write_report
from planbench.scenario_io import dump_json, validate_scenario_file
from planbench.scoring import ScoringPolicy
from planbench.simulation import MODE_CLOSED, MODE_OPEN, MODE_REACTIVE

DEFAULT_COUNTS = {"straight": 2, "curve": 1, "lane_change": 1, "merge": 1,
                  "pedestrian_interaction": 1, "cyclist_interaction": 1}

MODE_ALIASES = {"open": MODE_OPEN, "closed": MODE_CLOSED,
                "closed-reactive": MODE_REACTIVE}


def _load_policy(path: str | None) -> ScoringPolicy:
    if not path:
        return ScoringPolicy()
    try:
        return ScoringPolicy.from_dict(
            json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read policy file {path}: {exc}") from exc


def cmd_generate(args) -> int:
    if args.spec:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    else:
        spec = {}
    counts = spec.get("counts", DEFAULT_COUNTS)
    city = args.city or spec.get("city", "boston")
    include_regression = spec.get("include_regression", True)
    paths = generate_to_dir(args.seed, counts, args.out, city,
                            include_regression)
    print(f"wrote {len(paths)} scenarios to {args.out}")
    return 0


def cmd_run(args) -> int:
    policy = _load_policy(args.policy)
    report, code = run_batch(args.scenarios, args.planner,
                             MODE_ALIASES[args.mode], policy,
                             jobs=args.jobs, retag=args.retag,
                             trace_dir=args.traces)
    if args.out:
        write_report(report, args.out)
        print(f"report written to {args.out} "
              f"({report['aggregate'].get('scored_scenarios', 0)} scored, "
              f"{report['aggregate'].get('failed_scenarios', 0)} failed)")
    else:
        sys.stdout.write(dump_json(report))
    return code


def cmd_score(args) -> int:
    policy = _load_policy(args.policy)
    ranking = rescore_reports(args.reports, policy)
    sys.stdout.write(dump_json(ranking))
    return 0


def cmd_validate(args) -> int:
    problems = validate_scenario_file(args.file)
    if problems:
        for p in problems:
            print(f"INVALID: {p}", file=sys.stderr)
        return 3
    print(f"{args.file}: valid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="planbench",
        description="Closed-loop benchmark harness for vehicle motion planners")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate synthetic scenarios")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--spec", help="JSON file: {counts: {kind: n}, city: ...}; "
                                  f"kinds: {', '.join(ALL_KINDS)}")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--city", choices=["boston", "pittsburgh", "las_vegas",
                                      "singapore"])
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run a planner over a scenario directory")
    r.add_argument("--scenarios", required=True)
    r.add_argument("--planner", required=True,
                   help="builtin:NAME or exec:COMMAND")
    r.add_argument("--mode", choices=list(MODE_ALIASES), default="closed")
    r.add_argument("--policy", help="scoring policy JSON file")
    r.add_argument("--out", help="report output path (stdout when omitted)")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--retag", action="store_true",
                   help="recompute scenario tags instead of stored ones")
    r.add_argument("--traces", help="directory for per-step CSV traces")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("score", help="re-aggregate existing reports")
    s.add_argument("--reports", nargs="+", required=True)
    s.add_argument("--policy", help="scoring policy JSON file")
    s.set_defaults(func=cmd_score)

    v = sub.add_parser("validate", help="validate one scenario file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
