"""GoodVibes: phone-to-user authentication via wristwatch vibration patterns.

Reference implementation of the pairing/ping/vibrate protocol plus a
deterministic desk-scale simulator of the 30-participant evaluation study.
"""

from .patterns import (
    DEFAULT_TIMING,
    PatternSpec,
    TimingParams,
    VibrationTimeline,
    enumerate_patterns,
    parse_pattern,
    render_timeline,
    timelines_match,
    total_duration,
)
from .perceiver import (
    DEFAULT_PROFILE,
    PerceiverProfile,
    make_profile,
    perceive,
    profile_for,
)
from .scenarios import (
    DEFAULT_COUNTS,
    SCENARIOS,
    SessionSchedule,
    TrialRecord,
    build_schedule,
    pick_distractor,
    run_session,
    run_trial,
)
from .metrics import (
    AggregateReport,
    SessionLog,
    aggregate,
    compare_to_reference,
    read_log,
    wilson_halfwidth,
    write_log,
)
from .simulate import RunConfig, run_study_to_disk, simulate_study

__all__ = [
    "DEFAULT_COUNTS",
    "DEFAULT_PROFILE",
    "DEFAULT_TIMING",
    "AggregateReport",
    "PatternSpec",
    "PerceiverProfile",
    "RunConfig",
    "SCENARIOS",
    "SessionLog",
    "SessionSchedule",
    "TimingParams",
    "TrialRecord",
    "VibrationTimeline",
    "aggregate",
    "build_schedule",
    "compare_to_reference",
    "enumerate_patterns",
    "make_profile",
    "parse_pattern",
    "perceive",
    "pick_distractor",
    "profile_for",
    "read_log",
    "render_timeline",
    "run_session",
    "run_study_to_disk",
    "run_trial",
    "simulate_study",
    "timelines_match",
    "total_duration",
    "wilson_halfwidth",
    "write_log",
]

__version__ = "0.1.0"
