"""Phone and watch state machines: enrollment and the wake→ping→vibrate pipeline.

The enrolled vibration pattern lives exclusively on the watch. The phone
holds no pattern material anywhere in its state, so an attacker in control
of the (locked) phone learns nothing about the pattern; the ping it sends
is a bare authenticated trigger.
"""

from __future__ import annotations

import json
import hashlib
from dataclasses import dataclass, field
from random import Random

from .link import (
    Accept,
    AuthPing,
    DeviceIdentity,
    PairingRecord,
    ReplayState,
    SenderState,
    create_ping,
    verify_ping,
)
from .patterns import DEFAULT_TIMING, PatternSpec, TimingParams, VibrationTimeline, render_timeline

SOURCE_AUTH_PING = "auth_ping"
SOURCE_NOTIFICATION = "notification"
SOURCE_INJECTED = "injected"

DEFAULT_DEBOUNCE_MS = 2000


class NotPairedError(Exception):
    """Operation requires an active pairing."""


class AlreadyEnrolledError(Exception):
    """The watch already has an enrolled pattern."""


class NotEnrolledError(Exception):
    """The watch has no enrolled pattern yet."""


@dataclass(frozen=True)
class VibrationEvent:
    """A vibration actually played by the watch motor. The source field is
    ground truth for bookkeeping and is never exposed to the perceiver."""

    timeline: VibrationTimeline
    source: str  # SOURCE_AUTH_PING | SOURCE_NOTIFICATION | SOURCE_INJECTED
    at: int


@dataclass
class PhoneAgent:
    """Phone side: debounced screen-wake pings. Holds no pattern state."""

    identity: DeviceIdentity
    pairing: PairingRecord | None
    rng: Random
    debounce_ms: int = DEFAULT_DEBOUNCE_MS
    last_wake_at: int | None = None
    _sender: SenderState = field(default_factory=SenderState)

    @property
    def send_counter(self) -> int:
        return self._sender.last_counter

    def on_screen_wake(self, now: int) -> AuthPing | None:
        """Emit the next authenticated ping unless within the debounce
        window of the previous emission."""
        if self.pairing is None:
            raise NotPairedError(f"{self.identity.device_id} is not paired")
        if self.last_wake_at is not None and now - self.last_wake_at < self.debounce_ms:
            return None
        ping = create_ping(
            self.pairing, self._sender.last_counter + 1, now, self.rng, sender=self._sender
        )
        self.last_wake_at = now
        return ping

    def snapshot(self) -> dict:
        """State snapshot for logs and the session service status view.

        Carries a key fingerprint rather than the key itself; carries no
        pattern material by construction.
        """
        key_fingerprint = None
        pairing = None
        if self.pairing is not None:
            key_fingerprint = hashlib.sha256(self.pairing.shared_key).hexdigest()[:16]
            pairing = {
                "phone_id": self.pairing.phone_id,
                "watch_id": self.pairing.watch_id,
                "key_fingerprint": key_fingerprint,
            }
        return {
            "device_id": self.identity.device_id,
            "kind": self.identity.kind,
            "pairing": pairing,
            "send_counter": self.send_counter,
            "last_wake_at": self.last_wake_at,
            "debounce_ms": self.debounce_ms,
        }

    def serialize(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)


@dataclass
class WatchAgent:
    """Watch side: verifies pings and plays the enrolled pattern."""

    identity: DeviceIdentity
    pairing: PairingRecord | None
    timing: TimingParams = DEFAULT_TIMING
    replay: ReplayState = field(default_factory=ReplayState)
    enrolled_pattern: PatternSpec | None = None
    pattern_chosen_by_user: bool | None = None

    def snapshot(self) -> dict:
        return {
            "device_id": self.identity.device_id,
            "kind": self.identity.kind,
            "enrolled": self.enrolled_pattern is not None,
            "pattern_chosen_by_user": self.pattern_chosen_by_user,
            "highest_accepted_counter": self.replay.highest_accepted_counter,
        }


def enroll(watch: WatchAgent, pattern: PatternSpec, chosen_by_user: bool) -> WatchAgent:
    """Enroll the authentication pattern on the watch (exactly once)."""
    if watch.pairing is None:
        raise NotPairedError(f"{watch.identity.device_id} is not paired")
    if watch.enrolled_pattern is not None:
        raise AlreadyEnrolledError("a pattern is already enrolled")
    watch.enrolled_pattern = pattern
    watch.pattern_chosen_by_user = chosen_by_user
    return watch


def on_ping_received(watch: WatchAgent, ping: AuthPing, now: int) -> VibrationEvent | None:
    """Verify the ping; on acceptance vibrate in the enrolled pattern.

    Rejected pings are dropped silently: the user's detection signal is
    the absence of the pattern, so the watch must not invent a new one.
    """
    if watch.enrolled_pattern is None:
        raise NotEnrolledError("no pattern enrolled")
    if watch.pairing is None:
        raise NotPairedError(f"{watch.identity.device_id} is not paired")
    result = verify_ping(watch.pairing, ping, watch.replay)
    if not isinstance(result, Accept):
        return None
    timeline = render_timeline(watch.enrolled_pattern, watch.timing)
    return VibrationEvent(timeline=timeline, source=SOURCE_AUTH_PING, at=now)


def on_notification(watch: WatchAgent, pattern: PatternSpec, now: int) -> VibrationEvent:
    """Play an unrelated notification vibration (any pattern)."""
    timeline = render_timeline(pattern, watch.timing)
    return VibrationEvent(timeline=timeline, source=SOURCE_NOTIFICATION, at=now)


def inject_vibration(watch: WatchAgent, pattern: PatternSpec, now: int) -> VibrationEvent:
    """Supervisor-injected vibration, bypassing the ping path."""
    timeline = render_timeline(pattern, watch.timing)
    return VibrationEvent(timeline=timeline, source=SOURCE_INJECTED, at=now)
