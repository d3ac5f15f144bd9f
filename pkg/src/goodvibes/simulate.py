"""Batch study simulation: N participants, one session each, logs + report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .metrics import (
    AggregateReport,
    SessionLog,
    TargetComparison,
    aggregate,
    append_record,
    compare_to_reference,
    format_report,
    header_for,
    write_log,
)
from .patterns import DEFAULT_TIMING, PatternSpec, TimingParams, parse_pattern
from .perceiver import DEFAULT_PROFILE, PerceiverProfile, profile_for, read_profile
from .scenarios import (
    DEFAULT_COUNTS,
    DEFAULT_PATTERN_POOL,
    S4_MODE_SUPERVISOR,
    build_schedule,
    default_world,
    run_session,
)
from .seeds import derive_rng, derive_seed

PATTERN_POLICIES = ("chosen", "assigned", "explicit")
SCHEDULE_POLICIES = ("per_participant", "global")

# Smartwatch-experience split of the 30 study participants, used to label
# simulated participants for group breakdowns (daily 9, sometimes 8, none 13).
EXPERIENCE_SPLIT = ("daily",) * 9 + ("sometimes",) * 8 + ("none",) * 13


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    participants: int = 30
    counts: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    timing: TimingParams = DEFAULT_TIMING
    pattern_policy: str = "chosen"  # "chosen" | "assigned" | "explicit"
    explicit_pattern: str | None = None
    pattern_pool: tuple[str, ...] = DEFAULT_PATTERN_POOL
    profile_path: str | None = None
    calibrate_experience: bool = False
    schedule_policy: str = "per_participant"
    s4_mode: str = S4_MODE_SUPERVISOR
    out_dir: str = "out"

    def validate(self) -> None:
        if self.participants < 1:
            raise ConfigError("participants must be >= 1")
        if self.pattern_policy not in PATTERN_POLICIES:
            raise ConfigError(f"unknown pattern policy {self.pattern_policy!r}")
        if self.pattern_policy == "explicit" and not self.explicit_pattern:
            raise ConfigError("explicit pattern policy needs a pattern")
        if self.schedule_policy not in SCHEDULE_POLICIES:
            raise ConfigError(f"unknown schedule policy {self.schedule_policy!r}")
        if not self.pattern_pool:
            raise ConfigError("pattern pool must not be empty")
        for sid, count in self.counts.items():
            if count < 0:
                raise ConfigError(f"count for {sid} must be >= 0")
        for text in self.pattern_pool:
            parse_pattern(text)
        if self.explicit_pattern:
            parse_pattern(self.explicit_pattern)

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "participants": self.participants,
            "counts": dict(sorted(self.counts.items())),
            "timing": {
                "burst_ms": self.timing.burst_ms,
                "intra_gap_ms": self.timing.intra_gap_ms,
                "inter_gap_ms": self.timing.inter_gap_ms,
            },
            "pattern_policy": self.pattern_policy,
            "explicit_pattern": self.explicit_pattern,
            "pattern_pool": list(self.pattern_pool),
            "profile_path": self.profile_path,
            "calibrate_experience": self.calibrate_experience,
            "schedule_policy": self.schedule_policy,
            "s4_mode": self.s4_mode,
        }


def _participant_pattern(config: RunConfig, index: int) -> tuple[PatternSpec, bool]:
    """Enrolled pattern and chosen-by-user flag for participant `index` (1-based)."""
    if config.pattern_policy == "explicit":
        return parse_pattern(config.explicit_pattern or ""), False
    pool = [parse_pattern(t) for t in config.pattern_pool]
    rng = derive_rng(config.seed, f"enroll:{index}")
    return rng.choice(pool), config.pattern_policy == "chosen"


def _participant_profile(config: RunConfig, index: int, experience: str, chosen: bool) -> PerceiverProfile:
    base = read_profile(config.profile_path) if config.profile_path else DEFAULT_PROFILE
    if config.calibrate_experience:
        return profile_for(experience, None, base)
    return replace(base, experience_level=experience, pattern_chosen_by_user=chosen)


def simulate_study(config: RunConfig) -> tuple[list[SessionLog], AggregateReport, list[TargetComparison]]:
    """Run every participant session in memory. Deterministic under seed."""
    config.validate()
    logs = []
    for index in range(1, config.participants + 1):
        pid = f"P{index:03d}"
        experience = EXPERIENCE_SPLIT[(index - 1) % len(EXPERIENCE_SPLIT)]
        pattern, chosen = _participant_pattern(config, index)
        profile = _participant_profile(config, index, experience, chosen)

        schedule_label = "schedule" if config.schedule_policy == "global" else f"schedule:{index}"
        schedule_seed = derive_seed(config.seed, schedule_label)
        schedule = build_schedule(schedule_seed, config.counts, participant_id=pid)

        world_seed = derive_seed(config.seed, f"world:{index}")
        world = default_world(
            world_seed,
            pattern,
            chosen,
            participant_id=pid,
            with_phishing_phone=config.s4_mode == "phishing",
        )
        world.watch.timing = config.timing

        session_rng = derive_rng(config.seed, f"session:{index}")
        records = run_session(schedule, world, profile, session_rng, s4_mode=config.s4_mode)

        log = SessionLog(
            header=header_for(
                pid,
                schedule_seed,
                pattern.canonical(),
                profile,
                burst_ms=config.timing.burst_ms,
                intra_gap_ms=config.timing.intra_gap_ms,
                inter_gap_ms=config.timing.inter_gap_ms,
            )
        )
        for record in records:
            append_record(log, record)
        logs.append(log)

    report = aggregate(logs)
    comparisons = compare_to_reference(report, include_groups=config.calibrate_experience)
    return logs, report, comparisons


def run_study_to_disk(config: RunConfig) -> tuple[AggregateReport, list[TargetComparison]]:
    """simulate_study plus persistence: one log per participant, the run
    config, a JSON report, and a plain-text report with the comparison."""
    logs, report, comparisons = simulate_study(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for log in logs:
        write_log(log, out / f"{log.header.participant_id}.log")
    (out / "config.json").write_text(
        json.dumps(config.as_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out / "report.json").write_text(
        json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out / "report.txt").write_text(format_report(report, comparisons), encoding="utf-8")
    return report, comparisons
