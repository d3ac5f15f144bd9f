import json
from random import Random

import pytest

from goodvibes import agents
from goodvibes.agents import (
    AlreadyEnrolledError,
    NotEnrolledError,
    NotPairedError,
    PhoneAgent,
    SOURCE_AUTH_PING,
    SOURCE_NOTIFICATION,
    WatchAgent,
    enroll,
    on_notification,
    on_ping_received,
)
from goodvibes.link import DeviceIdentity, pair_devices
from goodvibes.patterns import enumerate_patterns, parse_pattern, render_timeline, timelines_match


def make_pair(seed=42, pid="A"):
    phone_id = DeviceIdentity(f"phone-{pid}", "phone")
    watch_id = DeviceIdentity(f"watch-{pid}", "watch")
    pairing = pair_devices(phone_id, watch_id, Random(seed))
    phone = PhoneAgent(identity=phone_id, pairing=pairing, rng=Random(seed + 1))
    watch = WatchAgent(identity=watch_id, pairing=pairing)
    return phone, watch


class TestEnroll:
    def test_read_back(self):
        _, watch = make_pair()
        enroll(watch, parse_pattern("1 3"), chosen_by_user=True)
        assert watch.enrolled_pattern.canonical() == "1 3"
        assert watch.pattern_chosen_by_user is True

    def test_enroll_twice(self):
        _, watch = make_pair()
        enroll(watch, parse_pattern("2"), True)
        with pytest.raises(AlreadyEnrolledError):
            enroll(watch, parse_pattern("1 3"), True)

    def test_not_paired(self):
        watch = WatchAgent(identity=DeviceIdentity("w", "watch"), pairing=None)
        with pytest.raises(NotPairedError):
            enroll(watch, parse_pattern("2"), True)


class TestSecretLocality:
    def test_phone_state_never_contains_pattern(self):
        # Strongest check: for every pattern in the alphabet, a phone in a
        # world where that pattern is enrolled serializes without its
        # canonical form or burst schedule.
        def flat_values(obj):
            if isinstance(obj, dict):
                for v in obj.values():
                    yield from flat_values(v)
            elif isinstance(obj, (list, tuple)):
                for v in obj:
                    yield from flat_values(v)
            else:
                yield obj

        for spec in enumerate_patterns(2, 9):
            phone, watch = make_pair()
            enroll(watch, spec, True)
            phone.on_screen_wake(0)
            blob = phone.serialize()
            assert spec.canonical() not in flat_values(json.loads(blob))
            if len(spec.groups) > 1:
                assert spec.canonical() not in blob
            timeline = render_timeline(spec, watch.timing)
            schedule_text = json.dumps([list(b) for b in timeline.bursts])
            assert schedule_text not in blob

    def test_snapshot_has_no_raw_key(self):
        phone, watch = make_pair()
        assert phone.pairing.shared_key.hex() not in phone.serialize()


class TestWake:
    def test_first_wake_counter_1(self):
        phone, _ = make_pair()
        ping = phone.on_screen_wake(0)
        assert ping is not None and ping.counter == 1

    def test_debounce_boundary(self):
        phone, _ = make_pair()
        assert phone.on_screen_wake(0) is not None
        assert phone.on_screen_wake(phone.debounce_ms - 1) is None

    def test_wakes_at_debounce_interval(self):
        phone, _ = make_pair()
        p1 = phone.on_screen_wake(0)
        p2 = phone.on_screen_wake(phone.debounce_ms)
        assert (p1.counter, p2.counter) == (1, 2)

    def test_debounce_over_trace(self):
        phone, _ = make_pair()
        emissions = []
        for t in range(0, 20_000, 137):
            if phone.on_screen_wake(t) is not None:
                emissions.append(t)
        gaps = [b - a for a, b in zip(emissions, emissions[1:])]
        assert all(g >= phone.debounce_ms for g in gaps)

    def test_unpaired_phone(self):
        phone = PhoneAgent(
            identity=DeviceIdentity("p", "phone"), pairing=None, rng=Random(0)
        )
        with pytest.raises(NotPairedError):
            phone.on_screen_wake(0)


class TestPingToVibration:
    def test_valid_ping_vibrates_enrolled(self):
        phone, watch = make_pair()
        enroll(watch, parse_pattern("2"), True)
        ping = phone.on_screen_wake(0)
        event = on_ping_received(watch, ping, 10)
        assert event is not None
        assert event.source == SOURCE_AUTH_PING
        assert event.timeline.total_duration == 180

    def test_replayed_ping_silent(self):
        phone, watch = make_pair()
        enroll(watch, parse_pattern("2"), True)
        ping = phone.on_screen_wake(0)
        assert on_ping_received(watch, ping, 10) is not None
        assert on_ping_received(watch, ping, 20) is None

    def test_wrong_key_ping_silent(self):
        phone, watch = make_pair(seed=1)
        enroll(watch, parse_pattern("2"), True)
        phishing_phone, _ = make_pair(seed=2, pid="X")
        ping = phishing_phone.on_screen_wake(0)
        assert on_ping_received(watch, ping, 10) is None

    def test_not_enrolled(self):
        phone, watch = make_pair()
        ping = phone.on_screen_wake(0)
        with pytest.raises(NotEnrolledError):
            on_ping_received(watch, ping, 10)

    def test_authenticity_over_run(self):
        # every auth_ping vibration is causally preceded by an accepted ping
        phone, watch = make_pair()
        enroll(watch, parse_pattern("1 3"), True)
        events = []
        accepted_before = []
        for t in range(0, 100_000, 2500):
            ping = phone.on_screen_wake(t)
            if ping is None:
                continue
            before = watch.replay.highest_accepted_counter
            event = on_ping_received(watch, ping, t + 10)
            if event is not None:
                events.append(event)
                accepted_before.append(watch.replay.highest_accepted_counter > before)
        assert events and all(accepted_before)

    def test_phishing_silence_many_attempts(self):
        phone, watch = make_pair(seed=1)
        enroll(watch, parse_pattern("2"), True)
        phishing, _ = make_pair(seed=99, pid="X")
        auth_events = 0
        for i in range(1_000):
            ping = phishing.on_screen_wake(i * phishing.debounce_ms)
            if ping is not None and on_ping_received(watch, ping, i) is not None:
                auth_events += 1
        assert auth_events == 0


class TestNotifications:
    def test_distractor_does_not_match_enrolled(self):
        _, watch = make_pair()
        enroll(watch, parse_pattern("2"), True)
        event = on_notification(watch, parse_pattern("1 1"), 0)
        assert event.source == SOURCE_NOTIFICATION
        own = render_timeline(watch.enrolled_pattern, watch.timing)
        assert not timelines_match(event.timeline, own, 0)

    def test_notification_with_enrolled_pattern(self):
        _, watch = make_pair()
        enroll(watch, parse_pattern("2"), True)
        event = on_notification(watch, parse_pattern("2"), 0)
        own = render_timeline(watch.enrolled_pattern, watch.timing)
        assert timelines_match(event.timeline, own, 0)
        assert event.source == SOURCE_NOTIFICATION

    def test_two_notifications_in_order(self):
        _, watch = make_pair()
        enroll(watch, parse_pattern("2"), True)
        e1 = on_notification(watch, parse_pattern("1"), 1000)
        e2 = on_notification(watch, parse_pattern("1"), 2000)
        assert e1.at < e2.at
