from random import Random

import pytest

from goodvibes.patterns import parse_pattern, render_timeline
from goodvibes.perceiver import (
    ASSIGNED_TARGET,
    CHOSEN_TARGET,
    DEFAULT_PROBABILITIES,
    DEFAULT_PROFILE,
    ERROR_RESPONSE,
    EXPECTED_RESPONSE,
    EXPERIENCE_TARGETS,
    NO_REPORT,
    RECOGNIZED_OWN_ON_WAKE,
    SCENARIO_MIX,
    UnreachableTargetError,
    classify_situation,
    make_profile,
    perceive,
    profile_for,
    read_profile,
    rescale_to_overall,
    write_profile,
)

ENROLLED = parse_pattern("2")
OWN = render_timeline(ENROLLED)
DISTRACTOR = render_timeline(parse_pattern("1 3"))


class TestClassify:
    @pytest.mark.parametrize(
        "stimulus,wake,expected",
        [
            (OWN, True, "S1"),
            (DISTRACTOR, False, "S2"),
            (OWN, False, "S3"),
            (None, True, "S4"),
            (DISTRACTOR, True, "S5"),
        ],
    )
    def test_situations(self, stimulus, wake, expected):
        assert classify_situation(stimulus, wake, ENROLLED) == expected

    def test_no_wake_no_stimulus_invalid(self):
        with pytest.raises(ValueError):
            classify_situation(None, False, ENROLLED)


class TestPerceive:
    def test_certain_profile_s1(self):
        profile = make_profile({s: 1.0 for s in SCENARIO_MIX})
        assert perceive(OWN, True, ENROLLED, profile, Random(0)) == RECOGNIZED_OWN_ON_WAKE

    def test_degenerate_s4_always_misses(self):
        profile = make_profile({s: 0.0 for s in SCENARIO_MIX})
        # p(S4)=0: never notices the absence
        assert perceive(None, True, ENROLLED, profile, Random(0)) == RECOGNIZED_OWN_ON_WAKE

    def test_s5_error_fraction_monte_carlo(self):
        rng = Random(7)
        errors = sum(
            perceive(DISTRACTOR, True, ENROLLED, DEFAULT_PROFILE, rng)
            != EXPECTED_RESPONSE["S5"]
            for _ in range(10_000)
        )
        assert abs(errors / 10_000 - 0.06) <= 0.01

    def test_error_response_mapping(self):
        profile = make_profile({s: 0.0 for s in SCENARIO_MIX})
        rng = Random(1)
        assert perceive(OWN, True, ENROLLED, profile, rng) == ERROR_RESPONSE["S1"]
        assert perceive(DISTRACTOR, False, ENROLLED, profile, rng) == ERROR_RESPONSE["S2"]
        assert perceive(OWN, False, ENROLLED, profile, rng) == NO_REPORT

    def test_per_scenario_convergence(self):
        # empirical correct rate converges to p(scenario) within ±0.005
        cases = {
            "S1": (OWN, True),
            "S2": (DISTRACTOR, False),
            "S3": (OWN, False),
            "S4": (None, True),
            "S5": (DISTRACTOR, True),
        }
        rng = Random(42)
        for sid, (stimulus, wake) in cases.items():
            n = 100_000
            correct = sum(
                perceive(stimulus, wake, ENROLLED, DEFAULT_PROFILE, rng)
                == EXPECTED_RESPONSE[sid]
                for _ in range(n)
            )
            assert abs(correct / n - DEFAULT_PROBABILITIES[sid]) <= 0.005


class TestCalibration:
    def test_identity_at_base_rate(self):
        target = DEFAULT_PROFILE.overall_rate()
        assert rescale_to_overall(DEFAULT_PROFILE, target) == DEFAULT_PROFILE

    @pytest.mark.parametrize("level,target", sorted(EXPERIENCE_TARGETS.items()))
    def test_experience_targets(self, level, target):
        profile = profile_for(level, None)
        assert abs(profile.overall_rate() - target) <= 1e-9
        assert profile.experience_level == level

    @pytest.mark.parametrize(
        "chosen,target", [(True, CHOSEN_TARGET), (False, ASSIGNED_TARGET)]
    )
    def test_chosen_assigned_targets(self, chosen, target):
        profile = profile_for(None, chosen)
        assert abs(profile.overall_rate() - target) <= 1e-9
        assert profile.pattern_chosen_by_user is chosen

    def test_target_one_saturates(self):
        profile = rescale_to_overall(DEFAULT_PROFILE, 1.0)
        assert all(p == 1.0 for _, p in profile.probabilities)

    def test_target_zero(self):
        profile = rescale_to_overall(DEFAULT_PROFILE, 0.0)
        assert all(p == 0.0 for _, p in profile.probabilities)

    def test_unreachable_target(self):
        pinned = make_profile({"S1": 1.0, "S2": 1.0, "S3": 1.0, "S4": 1.0, "S5": 0.5})
        # S1..S4 are fixed points at 1, so overall can never go below 21/24
        with pytest.raises(UnreachableTargetError):
            rescale_to_overall(pinned, 0.5)

    def test_probabilities_stay_clipped(self):
        for target in (0.85, 0.9, 0.95, 0.99):
            profile = rescale_to_overall(DEFAULT_PROFILE, target)
            assert all(0.0 <= p <= 1.0 for _, p in profile.probabilities)

    def test_relative_difficulty_preserved(self):
        profile = rescale_to_overall(DEFAULT_PROFILE, 0.9)
        base_order = sorted(SCENARIO_MIX, key=DEFAULT_PROFILE.p)
        new_order = sorted(SCENARIO_MIX, key=profile.p)
        assert base_order == new_order


class TestProfileFiles:
    def test_round_trip(self, tmp_path):
        profile = profile_for("daily", None)
        path = tmp_path / "daily.profile"
        write_profile(profile, path)
        got = read_profile(path)
        assert got.experience_level == "daily"
        for sid in SCENARIO_MIX:
            assert got.p(sid) == pytest.approx(profile.p(sid), abs=1e-15)

    def test_invalid_probability_rejected(self):
        with pytest.raises(ValueError):
            make_profile({"S1": 1.2, "S2": 0.9, "S3": 0.9, "S4": 0.9, "S5": 0.9})
