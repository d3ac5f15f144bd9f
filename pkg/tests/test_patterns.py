import pytest
from hypothesis import given, strategies as st

from goodvibes.patterns import (
    DEFAULT_TIMING,
    EmptyPatternError,
    InvalidTokenError,
    OutOfRangeError,
    PatternSpec,
    TimingParams,
    VibrationTimeline,
    enumerate_patterns,
    parse_pattern,
    render_timeline,
    timelines_match,
    total_duration,
)


class TestParse:
    def test_single_group(self):
        assert parse_pattern("2").groups == (2,)

    def test_two_groups(self):
        assert parse_pattern("1 3").groups == (1, 3)

    def test_empty(self):
        with pytest.raises(EmptyPatternError):
            parse_pattern("")

    def test_whitespace_only(self):
        with pytest.raises(EmptyPatternError):
            parse_pattern("   ")

    def test_non_integer(self):
        with pytest.raises(InvalidTokenError):
            parse_pattern("1 x")

    def test_zero_burst_group(self):
        with pytest.raises(OutOfRangeError):
            parse_pattern("0 2")

    def test_too_many_bursts(self):
        with pytest.raises(OutOfRangeError):
            parse_pattern("10")

    def test_too_many_groups(self):
        with pytest.raises(OutOfRangeError):
            parse_pattern("1 1 1 1 1")

    @given(st.lists(st.integers(1, 9), min_size=1, max_size=4))
    def test_round_trip(self, groups):
        spec = PatternSpec(tuple(groups))
        assert parse_pattern(spec.canonical()) == spec


class TestRender:
    def test_pattern_2_default_timing(self):
        tl = render_timeline(parse_pattern("2"), DEFAULT_TIMING)
        assert tl.bursts == ((0, 60), (120, 60))
        assert total_duration(tl) == 180

    def test_pattern_1_3_default_timing(self):
        tl = render_timeline(parse_pattern("1 3"), DEFAULT_TIMING)
        assert tl.bursts == ((0, 60), (260, 60), (380, 60), (500, 60))
        assert total_duration(tl) == 560

    def test_single_burst_any_timing(self):
        timing = TimingParams(burst_ms=45, intra_gap_ms=30, inter_gap_ms=100)
        tl = render_timeline(parse_pattern("1"), timing)
        assert tl.bursts == ((0, 45),)
        assert total_duration(tl) == 45

    def test_duration_formula_full_enumeration(self):
        # total = B*burst + (B-G)*intra + (G-1)*inter, brute-forced over
        # every pattern in the alphabet.
        timing = TimingParams(burst_ms=60, intra_gap_ms=60, inter_gap_ms=200)
        for spec in enumerate_patterns(4, 9):
            bursts = spec.total_bursts
            groups = len(spec.groups)
            expected = (
                bursts * timing.burst_ms
                + (bursts - groups) * timing.intra_gap_ms
                + (groups - 1) * timing.inter_gap_ms
            )
            assert total_duration(render_timeline(spec, timing)) == expected

    def test_rendering_injective_at_fixed_timing(self):
        specs = enumerate_patterns(4, 9)
        timelines = {render_timeline(s).bursts for s in specs}
        assert len(timelines) == len(specs)


class TestTimingParams:
    def test_defaults(self):
        assert DEFAULT_TIMING == TimingParams(burst_ms=60, intra_gap_ms=60, inter_gap_ms=200)

    def test_inter_gap_must_exceed_intra(self):
        with pytest.raises(ValueError):
            TimingParams(burst_ms=60, intra_gap_ms=100, inter_gap_ms=100)

    def test_positive_burst(self):
        with pytest.raises(ValueError):
            TimingParams(burst_ms=0)


class TestTimelineInvariants:
    def test_must_start_at_zero(self):
        with pytest.raises(ValueError):
            VibrationTimeline(((10, 60),))

    def test_no_overlap(self):
        with pytest.raises(ValueError):
            VibrationTimeline(((0, 60), (30, 60)))


class TestMatch:
    def test_identical_zero_tolerance(self):
        tl = render_timeline(parse_pattern("1 3"))
        assert timelines_match(tl, tl, 0)

    def test_different_burst_counts(self):
        a = render_timeline(parse_pattern("2"))
        b = render_timeline(parse_pattern("1 3"))
        assert not timelines_match(a, b, 10)

    def test_jitter_within_tolerance(self):
        base = render_timeline(parse_pattern("2"))
        shifted = VibrationTimeline(
            ((0, 60),) + tuple((s + 5, d) for s, d in base.bursts[1:])
        )
        assert timelines_match(shifted, base, 10)
        assert not timelines_match(shifted, base, 4)

    def test_negative_tolerance_rejected(self):
        tl = render_timeline(parse_pattern("2"))
        with pytest.raises(ValueError):
            timelines_match(tl, tl, -1)


class TestEnumerate:
    def test_tiny(self):
        assert [s.canonical() for s in enumerate_patterns(1, 2)] == ["1", "2"]

    def test_two_by_two(self):
        got = [s.canonical() for s in enumerate_patterns(2, 2)]
        assert got == ["1", "2", "1 1", "1 2", "2 1", "2 2"]

    def test_count_two_by_nine(self):
        assert len(enumerate_patterns(2, 9)) == 9 + 81

    def test_count_matches_brute_force(self):
        # geometric sum 9 + 81 + 729 + 6561
        assert len(enumerate_patterns(4, 9)) == sum(9**g for g in range(1, 5))

    def test_no_duplicates_and_deterministic(self):
        a = enumerate_patterns(3, 4)
        assert len(set(a)) == len(a)
        assert a == enumerate_patterns(3, 4)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            enumerate_patterns(0, 9)
