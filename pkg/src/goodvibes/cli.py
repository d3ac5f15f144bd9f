"""Command-line entry points: batch simulation, schedule export, live service.

    goodvibes simulate --seed 7 --participants 30 --out results/
    goodvibes schedule --seed 7
    goodvibes serve --port 8750 --participant P001 --pattern "1 3" --out live/

GOODVIBES_OUT_DIR sets the default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

from .metrics import format_report
from .scenarios import DEFAULT_COUNTS, build_schedule, export_schedule
from .service import SessionController, serve_session
from .simulate import ConfigError, RunConfig, run_study_to_disk


def _parse_counts(text: str) -> dict[str, int]:
    """Parse "S1=9,S2=6,..." into a counts map."""
    counts = {}
    for part in text.split(","):
        sid, _, value = part.partition("=")
        counts[sid.strip()] = int(value)
    return counts


def _default_out() -> str:
    return os.environ.get("GOODVIBES_OUT_DIR", "out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="goodvibes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a full simulated study")
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--participants", type=int, default=30)
    sim.add_argument("--counts", type=_parse_counts, default=None, help="e.g. S1=9,S2=6,S3=3,S4=3,S5=3")
    sim.add_argument("--policy", choices=("chosen", "assigned", "explicit"), default="chosen")
    sim.add_argument("--pattern", default=None, help="pattern for --policy explicit, e.g. '1 3'")
    sim.add_argument("--profile", default=None, help="perceiver profile file")
    sim.add_argument("--calibrate-experience", action="store_true",
                     help="rescale profiles to the per-experience-group targets")
    sim.add_argument("--schedule-policy", choices=("per_participant", "global"), default="per_participant")
    sim.add_argument("--s4-mode", choices=("supervisor", "phishing"), default="supervisor")
    sim.add_argument("--out", default=None)

    sched = sub.add_parser("schedule", help="print a session schedule")
    sched.add_argument("--seed", type=int, default=1)
    sched.add_argument("--counts", type=_parse_counts, default=None)

    serve = sub.add_parser("serve", help="run the live session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8750)
    serve.add_argument("--seed", type=int, default=1)
    serve.add_argument("--participant", default="P001")
    serve.add_argument("--pattern", default="1 3")
    serve.add_argument("--counts", type=_parse_counts, default=None)
    serve.add_argument("--out", default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "simulate":
        config = RunConfig(
            seed=args.seed,
            participants=args.participants,
            counts=args.counts or dict(DEFAULT_COUNTS),
            pattern_policy=args.policy,
            explicit_pattern=args.pattern,
            profile_path=args.profile,
            calibrate_experience=args.calibrate_experience,
            schedule_policy=args.schedule_policy,
            s4_mode=args.s4_mode,
            out_dir=args.out or _default_out(),
        )
        try:
            report, comparisons = run_study_to_disk(config)
        except (ConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(format_report(report, comparisons), end="")
        print(f"logs written to {config.out_dir}")
        return 0

    if args.command == "schedule":
        schedule = build_schedule(args.seed, args.counts or DEFAULT_COUNTS)
        print(export_schedule(schedule))
        return 0

    if args.command == "serve":
        out_dir = args.out or _default_out()
        controller = SessionController(
            participant_id=args.participant,
            seed=args.seed,
            enrolled_pattern=args.pattern,
            log_path=os.path.join(out_dir, f"{args.participant}-live.log"),
            counts=args.counts,
        )
        serve_session(controller, args.host, args.port)
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
