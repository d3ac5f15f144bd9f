"""Vibration pattern parsing, millisecond timeline rendering, and enumeration.

A pattern is an ordered list of burst-group sizes, written in text as the
group sizes joined by single spaces ("2", "1 3", "2 1 4"). Rendering a
pattern against timing parameters produces a concrete burst schedule in
milliseconds. All values here are immutable; every function is pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

MAX_GROUPS = 4
MAX_BURSTS_PER_GROUP = 9


class PatternError(ValueError):
    """Base class for pattern validation failures."""


class EmptyPatternError(PatternError):
    """Pattern text was empty or whitespace-only."""


class InvalidTokenError(PatternError):
    """Pattern text contained a non-integer token."""


class OutOfRangeError(PatternError):
    """Burst count or group count outside the supported alphabet."""


@dataclass(frozen=True)
class PatternSpec:
    """A vibration pattern: one burst count per group, in playback order."""

    groups: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.groups:
            raise EmptyPatternError("pattern needs at least one group")
        if len(self.groups) > MAX_GROUPS:
            raise OutOfRangeError(
                f"at most {MAX_GROUPS} groups supported, got {len(self.groups)}"
            )
        for count in self.groups:
            if not 1 <= count <= MAX_BURSTS_PER_GROUP:
                raise OutOfRangeError(
                    f"burst count {count} outside [1, {MAX_BURSTS_PER_GROUP}]"
                )

    def canonical(self) -> str:
        """Canonical text form: counts joined by single spaces."""
        return " ".join(str(c) for c in self.groups)

    @property
    def total_bursts(self) -> int:
        return sum(self.groups)

    def __str__(self) -> str:
        return self.canonical()


@dataclass(frozen=True)
class TimingParams:
    """Burst and gap durations in milliseconds.

    The inter-group gap must exceed the intra-group gap so that groups
    stay perceptually separable.
    """

    burst_ms: int = 60
    intra_gap_ms: int = 60
    inter_gap_ms: int = 200

    def __post_init__(self) -> None:
        if self.burst_ms <= 0:
            raise ValueError("burst_ms must be positive")
        if self.intra_gap_ms <= 0:
            raise ValueError("intra_gap_ms must be positive")
        if self.inter_gap_ms <= self.intra_gap_ms:
            raise ValueError("inter_gap_ms must exceed intra_gap_ms")


DEFAULT_TIMING = TimingParams()


@dataclass(frozen=True)
class VibrationTimeline:
    """Concrete burst schedule: (start_ms, duration_ms) pairs from t=0."""

    bursts: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.bursts:
            raise ValueError("timeline needs at least one burst")
        start0, _ = self.bursts[0]
        if start0 != 0:
            raise ValueError("first burst must start at 0")
        prev_end = None
        for start, duration in self.bursts:
            if duration <= 0:
                raise ValueError("burst duration must be positive")
            if prev_end is not None and start < prev_end:
                raise ValueError("bursts must be sorted and non-overlapping")
            prev_end = start + duration

    @property
    def total_duration(self) -> int:
        start, duration = self.bursts[-1]
        return start + duration


def parse_pattern(text: str) -> PatternSpec:
    """Parse the canonical space-separated text form into a PatternSpec."""
    tokens = text.split()
    if not tokens:
        raise EmptyPatternError("empty pattern text")
    counts = []
    for token in tokens:
        try:
            counts.append(int(token, 10))
        except ValueError:
            raise InvalidTokenError(f"not an integer: {token!r}") from None
    return PatternSpec(tuple(counts))


def render_timeline(spec: PatternSpec, timing: TimingParams = DEFAULT_TIMING) -> VibrationTimeline:
    """Render a pattern into its burst schedule.

    Bursts within a group are separated by intra_gap_ms, groups by
    inter_gap_ms; every burst lasts burst_ms; the first burst starts at 0.
    """
    bursts = []
    cursor = 0
    for group_index, count in enumerate(spec.groups):
        if group_index > 0:
            cursor += timing.inter_gap_ms
        for burst_index in range(count):
            if burst_index > 0:
                cursor += timing.intra_gap_ms
            bursts.append((cursor, timing.burst_ms))
            cursor += timing.burst_ms
    return VibrationTimeline(tuple(bursts))


def total_duration(timeline: VibrationTimeline) -> int:
    """Milliseconds from t=0 to the end of the last burst."""
    return timeline.total_duration


def timelines_match(
    observed: VibrationTimeline,
    expected: VibrationTimeline,
    jitter_tolerance_ms: int = 0,
) -> bool:
    """True iff both timelines have the same burst count and each
    corresponding start and duration differs by at most the tolerance."""
    if jitter_tolerance_ms < 0:
        raise ValueError("jitter_tolerance_ms must be >= 0")
    if len(observed.bursts) != len(expected.bursts):
        return False
    for (s1, d1), (s2, d2) in zip(observed.bursts, expected.bursts):
        if abs(s1 - s2) > jitter_tolerance_ms or abs(d1 - d2) > jitter_tolerance_ms:
            return False
    return True


def enumerate_patterns(max_groups: int, max_bursts_per_group: int) -> list[PatternSpec]:
    """All patterns within bounds, in deterministic lexicographic order
    (shorter patterns first, then lexicographic by group counts)."""
    if max_groups < 1 or max_bursts_per_group < 1:
        raise ValueError("bounds must be >= 1")
    if max_groups > MAX_GROUPS or max_bursts_per_group > MAX_BURSTS_PER_GROUP:
        raise OutOfRangeError("bounds exceed the supported pattern alphabet")
    counts = range(1, max_bursts_per_group + 1)
    return [
        PatternSpec(groups)
        for n_groups in range(1, max_groups + 1)
        for groups in itertools.product(counts, repeat=n_groups)
    ]
