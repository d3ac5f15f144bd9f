"""Pairing state, authenticated replay-protected pings, and a lossy link model.

The "secure channel" between phone and watch is pinned down as: a shared
symmetric key established at pairing time, an HMAC-SHA256 tag over a
canonical byte encoding of each ping, and counter-plus-nonce replay
protection on the receiving side.

Canonical ping encoding (bit-exact, also used for the MAC test vectors):
the fields sender_id (UTF-8), counter (8-byte big-endian unsigned),
nonce (raw bytes), sent_at (8-byte big-endian unsigned, virtual ms) are
concatenated in that fixed order, each prefixed with its length as a
2-byte big-endian unsigned integer.
"""

from __future__ import annotations

import hashlib
import hmac
from collections import deque
from dataclasses import dataclass, field
from random import Random
from typing import Iterable

KIND_PHONE = "phone"
KIND_WATCH = "watch"

MIN_KEY_LEN = 16
KEY_LEN = 32
NONCE_LEN = 16
TAG_LEN = 32

REPLAY_NONCE_WINDOW = 1024


class PairingError(Exception):
    """Base class for pairing failures."""


class AlreadyPairedError(PairingError):
    """An active pairing for this (phone, watch) pair already exists."""


class KindMismatchError(PairingError):
    """Pairing requires exactly one phone and one watch."""


class CounterReusedError(Exception):
    """Sender attempted to reuse a ping counter."""


@dataclass(frozen=True)
class DeviceIdentity:
    device_id: str
    kind: str  # KIND_PHONE or KIND_WATCH

    def __post_init__(self) -> None:
        if self.kind not in (KIND_PHONE, KIND_WATCH):
            raise ValueError(f"unknown device kind: {self.kind!r}")


@dataclass(frozen=True)
class PairingRecord:
    phone_id: str
    watch_id: str
    shared_key: bytes
    created_at: int = 0

    def __post_init__(self) -> None:
        if len(self.shared_key) < MIN_KEY_LEN:
            raise ValueError(f"shared_key must be >= {MIN_KEY_LEN} bytes")


@dataclass(frozen=True)
class AuthPing:
    sender_id: str
    counter: int
    nonce: bytes
    sent_at: int
    tag: bytes


@dataclass
class SenderState:
    """Per-sender counter bookkeeping; counters must strictly increase."""

    last_counter: int = 0


@dataclass
class ReplayState:
    """Receiver-side replay protection: highest accepted counter plus a
    bounded window of recently seen nonces."""

    highest_accepted_counter: int = 0
    recent_nonces: set[bytes] = field(default_factory=set)
    _nonce_order: deque[bytes] = field(default_factory=deque)

    def note_accepted(self, counter: int, nonce: bytes) -> None:
        self.highest_accepted_counter = max(self.highest_accepted_counter, counter)
        self.recent_nonces.add(nonce)
        self._nonce_order.append(nonce)
        while len(self._nonce_order) > REPLAY_NONCE_WINDOW:
            self.recent_nonces.discard(self._nonce_order.popleft())


@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Reject:
    reason: str  # "bad_tag" | "stale_counter" | "replayed_nonce"


BAD_TAG = "bad_tag"
STALE_COUNTER = "stale_counter"
REPLAYED_NONCE = "replayed_nonce"


@dataclass(frozen=True)
class LinkModel:
    """Simulated radio link: uniform latency, independent loss and
    duplication."""

    latency_ms_min: int = 10
    latency_ms_max: int = 50
    loss_probability: float = 0.0
    duplicate_probability: float = 0.0

    def __post_init__(self) -> None:
        if self.latency_ms_min < 0 or self.latency_ms_max < self.latency_ms_min:
            raise ValueError("latency range invalid")
        for p in (self.loss_probability, self.duplicate_probability):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must be in [0, 1]")


@dataclass(frozen=True)
class Delivered:
    """One or more arrival times (a second entry means a duplicate)."""

    arrival_times: tuple[int, ...]


@dataclass(frozen=True)
class Dropped:
    pass


LOSSLESS_LINK = LinkModel(latency_ms_min=10, latency_ms_max=10)


def pair_devices(
    phone: DeviceIdentity,
    watch: DeviceIdentity,
    rng: Random,
    existing: Iterable[PairingRecord] = (),
    now: int = 0,
) -> PairingRecord:
    """Establish a fresh shared key between a phone and a watch.

    Deterministic under a fixed rng seed. `existing` is the set of active
    pairings to enforce one-active-pairing-per-device-pair.
    """
    if phone.kind != KIND_PHONE or watch.kind != KIND_WATCH:
        raise KindMismatchError(
            f"need (phone, watch), got ({phone.kind}, {watch.kind})"
        )
    if phone.device_id == watch.device_id:
        raise KindMismatchError("devices must be distinct")
    for record in existing:
        if record.phone_id == phone.device_id and record.watch_id == watch.device_id:
            raise AlreadyPairedError(
                f"{phone.device_id} and {watch.device_id} are already paired"
            )
    return PairingRecord(
        phone_id=phone.device_id,
        watch_id=watch.device_id,
        shared_key=rng.randbytes(KEY_LEN),
        created_at=now,
    )


def encode_ping_fields(sender_id: str, counter: int, nonce: bytes, sent_at: int) -> bytes:
    """Canonical byte encoding covered by the ping's MAC tag."""
    out = bytearray()
    for chunk in (
        sender_id.encode("utf-8"),
        counter.to_bytes(8, "big"),
        nonce,
        sent_at.to_bytes(8, "big"),
    ):
        out += len(chunk).to_bytes(2, "big")
        out += chunk
    return bytes(out)


def compute_tag(key: bytes, sender_id: str, counter: int, nonce: bytes, sent_at: int) -> bytes:
    return hmac.new(
        key, encode_ping_fields(sender_id, counter, nonce, sent_at), hashlib.sha256
    ).digest()


def create_ping(
    pairing: PairingRecord,
    counter: int,
    now: int,
    rng: Random,
    sender: SenderState | None = None,
) -> AuthPing:
    """Build an authenticated ping from the phone side.

    When a SenderState is supplied the counter must strictly exceed the
    last one used, and the state is advanced on success.
    """
    if sender is not None and counter <= sender.last_counter:
        raise CounterReusedError(
            f"counter {counter} not above last used {sender.last_counter}"
        )
    nonce = rng.randbytes(NONCE_LEN)
    tag = compute_tag(pairing.shared_key, pairing.phone_id, counter, nonce, now)
    if sender is not None:
        sender.last_counter = counter
    return AuthPing(
        sender_id=pairing.phone_id, counter=counter, nonce=nonce, sent_at=now, tag=tag
    )


def verify_ping(pairing: PairingRecord, ping: AuthPing, state: ReplayState) -> Accept | Reject:
    """Accept iff the tag verifies under the shared key, the counter is
    fresh, and the nonce is unseen. Accepting updates the replay state.
    Rejection is a value, not a fault."""
    expected = compute_tag(
        pairing.shared_key, ping.sender_id, ping.counter, ping.nonce, ping.sent_at
    )
    if not hmac.compare_digest(expected, ping.tag):
        return Reject(BAD_TAG)
    if ping.counter <= state.highest_accepted_counter:
        return Reject(STALE_COUNTER)
    if ping.nonce in state.recent_nonces:
        return Reject(REPLAYED_NONCE)
    state.note_accepted(ping.counter, ping.nonce)
    return Accept()


def transmit(ping: AuthPing, link: LinkModel, rng: Random, now: int) -> Delivered | Dropped:
    """Simulate sending a ping over the link.

    Lost with loss_probability; otherwise delivered after a uniform
    latency, with an extra duplicate delivery at duplicate_probability.
    """
    if rng.random() < link.loss_probability:
        return Dropped()
    arrivals = [now + rng.randint(link.latency_ms_min, link.latency_ms_max)]
    if rng.random() < link.duplicate_probability:
        arrivals.append(now + rng.randint(link.latency_ms_min, link.latency_ms_max))
    return Delivered(tuple(sorted(arrivals)))
