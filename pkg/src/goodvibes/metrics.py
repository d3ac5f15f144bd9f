"""Session logs on disk, recognition-rate aggregation, and comparison
against the study's reference numbers.

Log format (schema version 1): UTF-8 text, one JSON object per line.
The first line has "type": "header"; every trial line has "type": "trial"
and the TrialRecord fields. Live sessions may interleave "command" and
"event" lines, which aggregation skips. Keys are serialized sorted, so a
log written twice from the same data is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from scipy.stats import norm

from .perceiver import EXPERIENCE_LEVELS, PerceiverProfile, SCENARIO_IDS, make_profile
from .scenarios import TrialRecord

SCHEMA_VERSION = 1

# Usability questionnaire means (documentation constants; the simulator
# does not reproduce the questionnaire).
QUESTIONNAIRE_MEANS = {
    "easy_to_use": 4.9,
    "fast_to_use": 5.0,
    "easy_to_adapt": 4.9,
    "would_use": 3.4,
}


class IndexGapError(ValueError):
    """Appended record does not have the next expected trial index."""


class HeaderMissingError(ValueError):
    """Log file has no header line before its records."""


class EmptyInputError(ValueError):
    """Aggregation needs at least one log."""


@dataclass(frozen=True)
class LogHeader:
    participant_id: str
    seed: int
    enrolled_pattern: str
    pattern_chosen_by_user: bool
    experience_level: str
    probabilities: tuple[tuple[str, float], ...]
    burst_ms: int
    intra_gap_ms: int
    inter_gap_ms: int
    schema_version: int = SCHEMA_VERSION

    def as_dict(self) -> dict:
        return {
            "type": "header",
            "schema_version": self.schema_version,
            "participant_id": self.participant_id,
            "seed": self.seed,
            "enrolled_pattern": self.enrolled_pattern,
            "pattern_chosen_by_user": self.pattern_chosen_by_user,
            "experience_level": self.experience_level,
            "probabilities": dict(self.probabilities),
            "burst_ms": self.burst_ms,
            "intra_gap_ms": self.intra_gap_ms,
            "inter_gap_ms": self.inter_gap_ms,
        }


def header_for(
    participant_id: str,
    seed: int,
    enrolled_pattern: str,
    profile: PerceiverProfile,
    burst_ms: int = 60,
    intra_gap_ms: int = 60,
    inter_gap_ms: int = 200,
) -> LogHeader:
    return LogHeader(
        participant_id=participant_id,
        seed=seed,
        enrolled_pattern=enrolled_pattern,
        pattern_chosen_by_user=profile.pattern_chosen_by_user,
        experience_level=profile.experience_level,
        probabilities=profile.probabilities,
        burst_ms=burst_ms,
        intra_gap_ms=intra_gap_ms,
        inter_gap_ms=inter_gap_ms,
    )


@dataclass
class SessionLog:
    """Append-only: header first, then trial records in index order."""

    header: LogHeader
    records: list[TrialRecord] = field(default_factory=list)


def append_record(log: SessionLog, record: TrialRecord) -> SessionLog:
    expected = len(log.records) + 1
    if record.trial_index != expected:
        raise IndexGapError(f"expected trial index {expected}, got {record.trial_index}")
    log.records.append(record)
    return log


def write_log(log: SessionLog, path: str | Path) -> None:
    lines = [json.dumps(log.header.as_dict(), sort_keys=True)]
    for record in log.records:
        lines.append(json.dumps({"type": "trial", **record.as_dict()}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _record_from_dict(data: dict) -> TrialRecord:
    bursts = data["stimulus_bursts"]
    return TrialRecord(
        trial_index=data["trial_index"],
        scenario_id=data["scenario_id"],
        user_initiated_wake=data["user_initiated_wake"],
        stimulus_bursts=None if bursts is None else tuple(tuple(b) for b in bursts),
        stimulus_source=data["stimulus_source"],
        expected_response=data["expected_response"],
        started_at=data["started_at"],
        stimulus_at=data["stimulus_at"],
        s4_mode=data.get("s4_mode"),
        response=data["response"],
        responded_at=data["responded_at"],
    )


def read_log(path: str | Path) -> SessionLog:
    """Parse a session log, skipping live-mode command/event lines."""
    header: LogHeader | None = None
    records: list[TrialRecord] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        kind = data.get("type")
        if kind == "header":
            header = LogHeader(
                participant_id=data["participant_id"],
                seed=data["seed"],
                enrolled_pattern=data["enrolled_pattern"],
                pattern_chosen_by_user=data["pattern_chosen_by_user"],
                experience_level=data["experience_level"],
                probabilities=tuple(sorted(data["probabilities"].items())),
                burst_ms=data["burst_ms"],
                intra_gap_ms=data["intra_gap_ms"],
                inter_gap_ms=data["inter_gap_ms"],
                schema_version=data["schema_version"],
            )
        elif kind == "trial":
            if header is None:
                raise HeaderMissingError(f"{path}: trial record before header")
            records.append(_record_from_dict(data))
        elif kind in ("command", "event"):
            continue
        else:
            raise ValueError(f"{path}: unknown line type {kind!r}")
    if header is None:
        raise HeaderMissingError(f"{path}: no header line")
    log = SessionLog(header=header)
    for record in records:
        append_record(log, record)
    return log


@dataclass(frozen=True)
class RateCell:
    correct: int
    total: int

    @property
    def rate(self) -> float:
        return self.correct / self.total if self.total else float("nan")


@dataclass(frozen=True)
class AggregateReport:
    per_scenario: dict[str, RateCell]
    overall: RateCell
    by_experience: dict[str, RateCell]
    by_chosen: dict[bool, RateCell]

    def as_dict(self) -> dict:
        def cell(c: RateCell) -> dict:
            out = {"correct": c.correct, "total": c.total}
            if c.total:
                out["rate"] = c.rate
                out["wilson_halfwidth_95"] = wilson_halfwidth(c.rate, c.total)
            return out

        return {
            "per_scenario": {sid: cell(c) for sid, c in self.per_scenario.items()},
            "overall": cell(self.overall),
            "by_experience": {lvl: cell(c) for lvl, c in self.by_experience.items()},
            "by_chosen": {
                ("chosen" if k else "assigned"): cell(c) for k, c in self.by_chosen.items()
            },
        }


def aggregate(logs: list[SessionLog]) -> AggregateReport:
    """Correct-response counts and rates; order-independent."""
    if not logs:
        raise EmptyInputError("need at least one session log")
    scen = {sid: [0, 0] for sid in SCENARIO_IDS}
    exp = {lvl: [0, 0] for lvl in EXPERIENCE_LEVELS}
    chosen = {True: [0, 0], False: [0, 0]}
    overall = [0, 0]
    for log in logs:
        for record in log.records:
            hit = 1 if record.correct else 0
            for bucket in (
                scen[record.scenario_id],
                exp[log.header.experience_level],
                chosen[log.header.pattern_chosen_by_user],
                overall,
            ):
                bucket[0] += hit
                bucket[1] += 1
    return AggregateReport(
        per_scenario={sid: RateCell(*scen[sid]) for sid in SCENARIO_IDS},
        overall=RateCell(*overall),
        by_experience={lvl: RateCell(*exp[lvl]) for lvl in EXPERIENCE_LEVELS},
        by_chosen={k: RateCell(*v) for k, v in chosen.items()},
    )


def wilson_halfwidth(p: float, n: int, confidence: float = 0.95) -> float:
    """Half-width of the Wilson score interval at proportion p and size n."""
    if n <= 0:
        raise ValueError("n must be positive")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    z2 = z * z
    return (z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))) / (1.0 + z2 / n)


@dataclass(frozen=True)
class ReferenceTargets:
    """The study's reported rates; comparison tolerance is the Wilson 95%
    half-width at the target rate and the report's sample size."""

    scenario_targets: tuple[tuple[str, float], ...] = (
        ("S1", 0.99),
        ("S2", 0.97),
        ("S3", 0.98),
        ("S4", 0.91),
        ("S5", 0.94),
    )
    experience_targets: tuple[tuple[str, float], ...] = (
        ("daily", 0.97),
        ("sometimes", 0.99),
        ("none", 0.89),
    )
    chosen_targets: tuple[tuple[bool, float], ...] = ((True, 0.98), (False, 0.95))


DEFAULT_TARGETS = ReferenceTargets()


@dataclass(frozen=True)
class TargetComparison:
    name: str
    target: float
    observed: float | None
    n: int
    delta: float | None
    tolerance: float | None
    passed: bool | None  # None when excluded (n == 0)

    @property
    def excluded(self) -> bool:
        return self.passed is None


def _compare_cell(name: str, cell: RateCell, target: float) -> TargetComparison:
    if cell.total == 0:
        return TargetComparison(name, target, None, 0, None, None, None)
    tolerance = wilson_halfwidth(target, cell.total)
    delta = cell.rate - target
    return TargetComparison(
        name, target, cell.rate, cell.total, delta, tolerance, abs(delta) <= tolerance
    )


def compare_to_reference(
    report: AggregateReport,
    targets: ReferenceTargets = DEFAULT_TARGETS,
    include_groups: bool = False,
) -> list[TargetComparison]:
    """Per-target pass/fail with deltas. Targets without any trials are
    flagged as excluded rather than failed. Group (experience / chosen)
    targets are only meaningful when the run was calibrated per group."""
    rows = [
        _compare_cell(sid, report.per_scenario[sid], target)
        for sid, target in targets.scenario_targets
    ]
    if include_groups:
        for lvl, target in targets.experience_targets:
            rows.append(_compare_cell(f"experience:{lvl}", report.by_experience[lvl], target))
        for flag, target in targets.chosen_targets:
            name = "chosen" if flag else "assigned"
            rows.append(_compare_cell(f"pattern:{name}", report.by_chosen[flag], target))
    return rows


def format_report(
    report: AggregateReport, comparisons: list[TargetComparison] | None = None
) -> str:
    """Plain-text table of rates per scenario and group."""
    lines = ["scenario  correct/total   rate", "-" * 36]
    for sid, cell in report.per_scenario.items():
        rate = f"{cell.rate:.4f}" if cell.total else "  n/a "
        lines.append(f"{sid:<9} {cell.correct:>4}/{cell.total:<8} {rate}")
    lines.append("-" * 36)
    lines.append(
        f"overall   {report.overall.correct:>4}/{report.overall.total:<8} "
        f"{report.overall.rate:.4f}"
    )
    lines.append("")
    lines.append("group breakdowns")
    for lvl, cell in report.by_experience.items():
        if cell.total:
            lines.append(f"  experience {lvl:<10} {cell.correct}/{cell.total}  {cell.rate:.4f}")
    for flag, cell in report.by_chosen.items():
        if cell.total:
            name = "chosen" if flag else "assigned"
            lines.append(f"  pattern {name:<13} {cell.correct}/{cell.total}  {cell.rate:.4f}")
    if comparisons:
        lines.append("")
        lines.append("reference comparison (tolerance = Wilson 95% half-width)")
        for row in comparisons:
            if row.excluded:
                lines.append(f"  {row.name:<16} target {row.target:.2f}  EXCLUDED (n=0)")
            else:
                verdict = "pass" if row.passed else "FAIL"
                lines.append(
                    f"  {row.name:<16} target {row.target:.2f}  observed {row.observed:.4f}"
                    f"  delta {row.delta:+.4f}  tol {row.tolerance:.4f}  {verdict}"
                )
    return "\n".join(lines) + "\n"
