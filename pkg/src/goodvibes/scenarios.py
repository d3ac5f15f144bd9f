"""Deterministic orchestration of the five situational scenarios and the
24-trial session schedule, with supervisor inject/suppress controls.

Scenario semantics (wake flag × watch stimulus):
  S1 — user wakes the phone, watch plays the enrolled pattern.
  S2 — no wake, watch plays a distractor (unrelated notification).
  S3 — enrolled pattern plays without the user waking the phone
       (someone else interacting with it).
  S4 — user wakes the phone, watch stays silent.
  S5 — user wakes the phone, watch plays a distractor instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random

from . import agents
from .agents import PhoneAgent, VibrationEvent, WatchAgent
from .link import Delivered, LinkModel, LOSSLESS_LINK, transmit
from .patterns import PatternSpec, enumerate_patterns, render_timeline, timelines_match
from .perceiver import EXPECTED_RESPONSE, PerceiverProfile, perceive
from .seeds import derive_rng


class EmptyDistractorPoolError(ValueError):
    """No pattern in the pool differs from the enrolled one."""


class WorldMisconfiguredError(Exception):
    """The world lacks state a scenario requires (pairing, enrollment, ...)."""


@dataclass(frozen=True)
class Scenario:
    id: str
    user_initiates_wake: bool
    watch_stimulus: str  # "enrolled" | "distractor" | "none"


SCENARIOS = {
    "S1": Scenario("S1", True, "enrolled"),
    "S2": Scenario("S2", False, "distractor"),
    "S3": Scenario("S3", False, "enrolled"),
    "S4": Scenario("S4", True, "none"),
    "S5": Scenario("S5", True, "distractor"),
}

# Exposures per session: 24 trials split 9/6/3/3/3 across S1..S5.
DEFAULT_COUNTS = {"S1": 9, "S2": 6, "S3": 3, "S4": 3, "S5": 3}

# Modeling choices for S4 (expected pattern absent): a wake on an unpaired
# phishing phone whose ping the watch rejects, or the supervisor muting the
# watch motor for an otherwise valid ping.
S4_MODE_SUPERVISOR = "supervisor"
S4_MODE_PHISHING = "phishing"

DEFAULT_GAP_RANGE_MS = (60_000, 120_000)

DEFAULT_PATTERN_POOL = ("2", "1 3")


@dataclass(frozen=True)
class SessionSchedule:
    order: tuple[str, ...]
    seed: int
    participant_id: str = ""


@dataclass
class VirtualClock:
    """Milliseconds since session start; advanced only by the event loop."""

    now: int = 0

    def advance(self, dt_ms: int) -> int:
        if dt_ms < 0:
            raise ValueError("clock cannot move backwards")
        self.now += dt_ms
        return self.now


@dataclass
class TrialRecord:
    """One scenario exposure. stimulus_source is ground truth for
    bookkeeping; the perceiver never sees it."""

    trial_index: int  # 1-based
    scenario_id: str
    user_initiated_wake: bool
    stimulus_bursts: tuple[tuple[int, int], ...] | None
    stimulus_source: str | None
    expected_response: str
    started_at: int
    stimulus_at: int | None
    s4_mode: str | None = None
    response: str | None = None
    responded_at: int | None = None

    def fill_response(self, value: str, at: int) -> None:
        if self.response is not None:
            raise ValueError(f"trial {self.trial_index} response already recorded")
        self.response = value
        self.responded_at = at

    @property
    def correct(self) -> bool:
        return self.response == self.expected_response

    def as_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "scenario_id": self.scenario_id,
            "user_initiated_wake": self.user_initiated_wake,
            "stimulus_bursts": (
                None if self.stimulus_bursts is None else [list(b) for b in self.stimulus_bursts]
            ),
            "stimulus_source": self.stimulus_source,
            "expected_response": self.expected_response,
            "started_at": self.started_at,
            "stimulus_at": self.stimulus_at,
            "s4_mode": self.s4_mode,
            "response": self.response,
            "responded_at": self.responded_at,
        }


@dataclass
class World:
    """Everything one trial acts on: the paired agents, the link, the
    clock, and (for phishing-mode S4) a look-alike phone without the key."""

    phone: PhoneAgent
    watch: WatchAgent
    clock: VirtualClock = field(default_factory=VirtualClock)
    link: LinkModel = LOSSLESS_LINK
    phishing_phone: PhoneAgent | None = None
    distractor_pool: tuple[PatternSpec, ...] = ()


def build_schedule(
    seed: int, counts: dict[str, int] | None = None, participant_id: str = ""
) -> SessionSchedule:
    """Seeded deterministic permutation of the scenario multiset."""
    counts = DEFAULT_COUNTS if counts is None else counts
    order = []
    for sid in sorted(counts):
        if sid not in SCENARIOS:
            raise ValueError(f"unknown scenario id {sid!r}")
        if counts[sid] < 0:
            raise ValueError("counts must be non-negative")
        order.extend([sid] * counts[sid])
    Random(seed).shuffle(order)
    return SessionSchedule(order=tuple(order), seed=seed, participant_id=participant_id)


def export_schedule(schedule: SessionSchedule) -> str:
    """Line-delimited export: trial index and scenario id per line."""
    return "\n".join(f"{i} {sid}" for i, sid in enumerate(schedule.order, start=1))


def pick_distractor(
    enrolled: PatternSpec, pool: list[PatternSpec] | tuple[PatternSpec, ...], rng: Random
) -> PatternSpec:
    """Uniform draw from the pool, excluding anything whose rendered
    timeline matches the enrolled pattern's."""
    own = render_timeline(enrolled)
    candidates = [
        p for p in pool if p != enrolled and not timelines_match(render_timeline(p), own, 0)
    ]
    if not candidates:
        raise EmptyDistractorPoolError("pool holds no pattern distinct from the enrolled one")
    return rng.choice(candidates)


def _deliver_ping(phone: PhoneAgent, world: World, now: int, rng: Random) -> VibrationEvent | None:
    """Wake the given phone and carry its ping over the link to the watch.
    Returns the watch's vibration event, if any. Advances the clock to the
    last delivery."""
    ping = phone.on_screen_wake(now)
    if ping is None:
        return None
    result = transmit(ping, world.link, rng, now)
    if not isinstance(result, Delivered):
        return None
    event = None
    for arrival in result.arrival_times:
        world.clock.now = max(world.clock.now, arrival)
        got = agents.on_ping_received(world.watch, ping, arrival)
        if got is not None:
            event = got
    return event


def run_trial(
    trial_index: int,
    scenario: Scenario,
    world: World,
    rng: Random,
    s4_mode: str = S4_MODE_SUPERVISOR,
) -> TrialRecord:
    """Execute one scenario exposure against the world.

    The returned record has its response unfilled; batch mode fills it
    from the perceiver, live mode from the supervisor console.
    """
    watch = world.watch
    if watch.enrolled_pattern is None:
        raise WorldMisconfiguredError("watch has no enrolled pattern")
    if world.phone.pairing is None:
        raise WorldMisconfiguredError("phone is not paired")
    if scenario.id == "S4" and s4_mode == S4_MODE_PHISHING and world.phishing_phone is None:
        raise WorldMisconfiguredError("phishing-mode S4 needs a phishing phone in the world")
    pool = world.distractor_pool or tuple(
        p for p in (enumerate_patterns(2, 9)) if p != watch.enrolled_pattern
    )

    started_at = world.clock.now
    event: VibrationEvent | None = None
    mode: str | None = None

    if scenario.id == "S1":
        event = _deliver_ping(world.phone, world, started_at, rng)
    elif scenario.id == "S2":
        distractor = pick_distractor(watch.enrolled_pattern, pool, rng)
        event = agents.on_notification(watch, distractor, started_at)
    elif scenario.id == "S3":
        # Third party interacting with the user's phone: the genuine ping
        # path fires without the user having initiated the wake.
        event = _deliver_ping(world.phone, world, started_at, rng)
    elif scenario.id == "S4":
        mode = s4_mode
        if s4_mode == S4_MODE_PHISHING:
            # Look-alike phone lacks the pairing key; the watch drops its ping.
            assert world.phishing_phone is not None
            event = _deliver_ping(world.phishing_phone, world, started_at, rng)
        else:
            # Valid ping, but the supervisor has muted the watch motor.
            suppressed = _deliver_ping(world.phone, world, started_at, rng)
            del suppressed
            event = None
    elif scenario.id == "S5":
        # Genuine wake with the motor muted, plus an injected distractor.
        suppressed = _deliver_ping(world.phone, world, started_at, rng)
        del suppressed
        distractor = pick_distractor(watch.enrolled_pattern, pool, rng)
        event = agents.inject_vibration(watch, distractor, world.clock.now)
    else:
        raise WorldMisconfiguredError(f"unknown scenario {scenario.id!r}")

    if scenario.watch_stimulus == "none" and event is not None:
        raise WorldMisconfiguredError(f"{scenario.id} produced an unexpected stimulus")

    return TrialRecord(
        trial_index=trial_index,
        scenario_id=scenario.id,
        user_initiated_wake=scenario.user_initiates_wake,
        stimulus_bursts=None if event is None else event.timeline.bursts,
        stimulus_source=None if event is None else event.source,
        expected_response=EXPECTED_RESPONSE[scenario.id],
        started_at=started_at,
        stimulus_at=None if event is None else event.at,
        s4_mode=mode,
    )


def run_session(
    schedule: SessionSchedule,
    world: World,
    profile: PerceiverProfile,
    rng: Random,
    s4_mode: str = S4_MODE_SUPERVISOR,
    gap_range_ms: tuple[int, int] = DEFAULT_GAP_RANGE_MS,
) -> list[TrialRecord]:
    """Run every scheduled trial with randomized inter-trial virtual gaps,
    filling responses from the perceiver. Deterministic under the rng."""
    if world.watch.enrolled_pattern is None:
        raise WorldMisconfiguredError("watch has no enrolled pattern")
    records = []
    for index, sid in enumerate(schedule.order, start=1):
        world.clock.advance(rng.randint(*gap_range_ms))
        record = run_trial(index, SCENARIOS[sid], world, rng, s4_mode=s4_mode)
        stimulus = None
        if record.stimulus_bursts is not None:
            from .patterns import VibrationTimeline

            stimulus = VibrationTimeline(record.stimulus_bursts)
        response = perceive(
            stimulus,
            record.user_initiated_wake,
            world.watch.enrolled_pattern,
            profile,
            rng,
            world.watch.timing,
        )
        world.clock.advance(rng.randint(500, 3000))  # reaction time
        record.fill_response(response, world.clock.now)
        records.append(record)
    return records


def default_world(
    seed: int,
    enrolled: PatternSpec,
    chosen_by_user: bool,
    participant_id: str = "P01",
    link: LinkModel = LOSSLESS_LINK,
    with_phishing_phone: bool = False,
) -> World:
    """Paired-and-enrolled world, fully derived from the seed."""
    from .link import DeviceIdentity, KIND_PHONE, KIND_WATCH, pair_devices

    phone_id = DeviceIdentity(f"phone-{participant_id}", KIND_PHONE)
    watch_id = DeviceIdentity(f"watch-{participant_id}", KIND_WATCH)
    pairing = pair_devices(phone_id, watch_id, derive_rng(seed, "pairing"))
    phone = PhoneAgent(identity=phone_id, pairing=pairing, rng=derive_rng(seed, "phone"))
    watch = WatchAgent(identity=watch_id, pairing=pairing)
    agents.enroll(watch, enrolled, chosen_by_user)
    phishing = None
    if with_phishing_phone:
        fake_id = DeviceIdentity(f"phish-{participant_id}", KIND_PHONE)
        fake_pairing = pair_devices(fake_id, watch_id, derive_rng(seed, "phishing-key"))
        phishing = PhoneAgent(
            identity=fake_id, pairing=fake_pairing, rng=derive_rng(seed, "phishing")
        )
    return World(phone=phone, watch=watch, link=link, phishing_phone=phishing)
