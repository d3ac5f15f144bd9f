"""Simulated study participant: stimulus in, response out.

A perceiver profile carries one correct-response probability per scenario;
the defaults are the study's aggregate recognition rates. The perceiver
classifies what it feels (wake flag + vibration vs. its enrolled pattern)
without ever seeing the engine's hidden ground-truth source field.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from random import Random

from scipy.optimize import brentq

from .patterns import (
    DEFAULT_TIMING,
    PatternSpec,
    TimingParams,
    VibrationTimeline,
    render_timeline,
    timelines_match,
)

# Participant response taxonomy.
RECOGNIZED_OWN_ON_WAKE = "recognized_own_on_wake"
REPORT_ABSENT_OR_WRONG = "report_absent_or_wrong"
REPORT_UNEXPECTED_OWN = "report_unexpected_own"
NO_REPORT = "no_report"

RESPONSES = (
    RECOGNIZED_OWN_ON_WAKE,
    REPORT_ABSENT_OR_WRONG,
    REPORT_UNEXPECTED_OWN,
    NO_REPORT,
)

SCENARIO_IDS = ("S1", "S2", "S3", "S4", "S5")

# Correct response per scenario, and the single complementary error
# response a lapse produces (the study reports binary correct/incorrect).
EXPECTED_RESPONSE = {
    "S1": RECOGNIZED_OWN_ON_WAKE,
    "S2": NO_REPORT,
    "S3": REPORT_UNEXPECTED_OWN,
    "S4": REPORT_ABSENT_OR_WRONG,
    "S5": REPORT_ABSENT_OR_WRONG,
}
ERROR_RESPONSE = {
    "S1": REPORT_ABSENT_OR_WRONG,
    "S2": REPORT_UNEXPECTED_OWN,
    "S3": NO_REPORT,
    "S4": RECOGNIZED_OWN_ON_WAKE,  # missed absence
    "S5": RECOGNIZED_OWN_ON_WAKE,  # missed mismatch
}

# Aggregate per-scenario correct-recognition rates from the 30-participant study.
DEFAULT_PROBABILITIES = {"S1": 0.99, "S2": 0.97, "S3": 0.98, "S4": 0.91, "S5": 0.94}

# Trial mix per session (weights for overall-rate calibration).
SCENARIO_MIX = {"S1": 9, "S2": 6, "S3": 3, "S4": 3, "S5": 3}

EXPERIENCE_LEVELS = ("none", "sometimes", "daily")

# Overall correct rates by smartwatch experience and by pattern choice
# (chosen/assigned derive from 2% and 5% overall error).
EXPERIENCE_TARGETS = {"daily": 0.97, "sometimes": 0.99, "none": 0.89}
CHOSEN_TARGET = 0.98
ASSIGNED_TARGET = 0.95


class UnreachableTargetError(ValueError):
    """Requested overall rate cannot be reached with probabilities in [0, 1]."""


@dataclass(frozen=True)
class PerceiverProfile:
    probabilities: tuple[tuple[str, float], ...]
    experience_level: str = "none"
    pattern_chosen_by_user: bool = False

    def __post_init__(self) -> None:
        probs = dict(self.probabilities)
        if set(probs) != set(SCENARIO_IDS):
            raise ValueError("profile needs exactly one probability per scenario")
        for sid, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p({sid})={p} outside [0, 1]")
        if self.experience_level not in EXPERIENCE_LEVELS:
            raise ValueError(f"unknown experience level {self.experience_level!r}")

    def p(self, scenario_id: str) -> float:
        return dict(self.probabilities)[scenario_id]

    def as_dict(self) -> dict[str, float]:
        return dict(self.probabilities)

    def overall_rate(self, mix: dict[str, int] = SCENARIO_MIX) -> float:
        total = sum(mix.values())
        return sum(mix[sid] * self.p(sid) for sid in SCENARIO_IDS) / total


def make_profile(
    probabilities: dict[str, float] | None = None,
    experience_level: str = "none",
    pattern_chosen_by_user: bool = False,
) -> PerceiverProfile:
    probs = DEFAULT_PROBABILITIES if probabilities is None else probabilities
    return PerceiverProfile(
        probabilities=tuple(sorted(probs.items())),
        experience_level=experience_level,
        pattern_chosen_by_user=pattern_chosen_by_user,
    )


DEFAULT_PROFILE = make_profile()


def classify_situation(
    stimulus: VibrationTimeline | None,
    user_initiated_wake: bool,
    enrolled: PatternSpec,
    timing: TimingParams = DEFAULT_TIMING,
) -> str:
    """Scenario id as the participant experiences it: wake flag plus
    whether the felt vibration matches their enrolled pattern."""
    own = render_timeline(enrolled, timing)
    if stimulus is None:
        if not user_initiated_wake:
            raise ValueError("no wake and no stimulus is not a scenario")
        return "S4"
    matches = timelines_match(stimulus, own, 0)
    if user_initiated_wake:
        return "S1" if matches else "S5"
    return "S3" if matches else "S2"


def perceive(
    stimulus: VibrationTimeline | None,
    user_initiated_wake: bool,
    enrolled: PatternSpec,
    profile: PerceiverProfile,
    rng: Random,
    timing: TimingParams = DEFAULT_TIMING,
) -> str:
    """Draw the participant's response: the scenario's correct response
    with probability p(scenario), else its designated error response."""
    sid = classify_situation(stimulus, user_initiated_wake, enrolled, timing)
    if rng.random() < profile.p(sid):
        return EXPECTED_RESPONSE[sid]
    return ERROR_RESPONSE[sid]


def _scaled(probs: dict[str, float], factor: float) -> dict[str, float]:
    # Scale each scenario's odds p/(1-p) by a common factor; p in {0, 1}
    # are fixed points.
    out = {}
    for sid, p in probs.items():
        if p <= 0.0 or p >= 1.0:
            out[sid] = p
        else:
            odds = factor * p / (1.0 - p)
            out[sid] = odds / (1.0 + odds)
    return out


def rescale_to_overall(
    base: PerceiverProfile, target: float, mix: dict[str, int] = SCENARIO_MIX
) -> PerceiverProfile:
    """Rescale all scenario probabilities by a common odds factor so the
    mix-weighted overall rate hits the target.

    Preserves relative scenario difficulty; the factor is solved
    numerically to |overall - target| <= 1e-9.
    """
    if not 0.0 <= target <= 1.0:
        raise UnreachableTargetError(f"target {target} outside [0, 1]")
    total = sum(mix.values())
    probs = base.as_dict()

    def overall(factor: float) -> float:
        scaled = _scaled(probs, factor)
        return sum(mix[sid] * scaled[sid] for sid in mix) / total

    if abs(base.overall_rate(mix) - target) <= 1e-12:
        return base

    # Limits of the odds scaling: factor→0 pins every p<1 to 0, factor→∞
    # pins every p>0 to 1.
    floor = sum(mix[sid] for sid, p in probs.items() if p >= 1.0) / total
    ceiling = sum(mix[sid] for sid, p in probs.items() if p > 0.0) / total
    if target <= floor + 1e-12 or target >= ceiling - 1e-12:
        if abs(target - ceiling) <= 1e-12:
            return replace(
                base,
                probabilities=tuple(
                    sorted((sid, 1.0 if p > 0.0 else 0.0) for sid, p in probs.items())
                ),
            )
        if abs(target - floor) <= 1e-12:
            return replace(
                base,
                probabilities=tuple(
                    sorted((sid, 1.0 if p >= 1.0 else 0.0) for sid, p in probs.items())
                ),
            )
        raise UnreachableTargetError(
            f"target {target} outside achievable range ({floor}, {ceiling})"
        )

    log_factor = brentq(
        lambda x: overall(10.0**x) - target, -12.0, 12.0, xtol=1e-15, rtol=8.9e-16
    )
    scaled = _scaled(probs, 10.0**log_factor)
    result = replace(base, probabilities=tuple(sorted(scaled.items())))
    if abs(result.overall_rate(mix) - target) > 1e-9:
        raise UnreachableTargetError(f"solver failed to reach target {target}")
    return result


def profile_for(
    experience: str | None,
    chosen: bool | None,
    base: PerceiverProfile = DEFAULT_PROFILE,
) -> PerceiverProfile:
    """Profile calibrated to a participant group's overall rate.

    The experience group target applies when an experience level is given;
    otherwise the chosen/assigned target applies. The study reports these
    groupings separately, so exactly one drives the rescaling.
    """
    if experience is not None:
        target = EXPERIENCE_TARGETS[experience]
    elif chosen is not None:
        target = CHOSEN_TARGET if chosen else ASSIGNED_TARGET
    else:
        return base
    profile = rescale_to_overall(base, target)
    return replace(
        profile,
        experience_level=experience if experience is not None else base.experience_level,
        pattern_chosen_by_user=chosen if chosen is not None else base.pattern_chosen_by_user,
    )


def write_profile(profile: PerceiverProfile, path: str) -> None:
    """Key-value text form: five probabilities, experience level, chosen flag."""
    lines = [f"p_{sid.lower()} = {profile.p(sid)!r}" for sid in SCENARIO_IDS]
    lines.append(f"experience = {profile.experience_level}")
    lines.append(f"chosen = {'true' if profile.pattern_chosen_by_user else 'false'}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_profile(path: str) -> PerceiverProfile:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    probs = {sid: float(values[f"p_{sid.lower()}"]) for sid in SCENARIO_IDS}
    return make_profile(
        probs,
        experience_level=values.get("experience", "none"),
        pattern_chosen_by_user=values.get("chosen", "false").lower() == "true",
    )
