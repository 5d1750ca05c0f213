import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from airbraille.braille import DotPattern, encode_char
from airbraille.scheduling import (
    CellFrequencies,
    EmissionEvent,
    EmptyPattern,
    InvalidCell,
    LayoutConfig,
    Schedule,
    ScheduleOptions,
    StimulusMethod,
    UnknownMethod,
    build_schedule,
    cell_position,
    max_simultaneous_events,
    sample_schedule,
    schedule_from_json,
    schedule_to_json,
)

ALL_METHODS = list(StimulusMethod)
DIGITS = "1234567890"

digit_patterns = st.sampled_from(DIGITS).map(encode_char)
any_patterns = st.frozensets(
    st.integers(min_value=1, max_value=6), min_size=1
).map(DotPattern)


def total_ms(schedule: Schedule) -> int:
    assert schedule.total_duration_s is not None
    return round(schedule.total_duration_s * 1000)


class TestCellPosition:
    def test_cell_1_default_layout(self):
        assert cell_position(1) == (-0.015, 0.03, 0.20)

    def test_cell_5_default_layout(self):
        assert cell_position(5) == (0.015, 0.0, 0.20)

    def test_cell_1_mirrored(self):
        assert cell_position(1, LayoutConfig(mirror_x=True)) == (0.015, 0.03, 0.20)

    def test_full_grid_geometry(self):
        s, z = 0.03, 0.20
        expected = {
            1: (-s / 2, s, z), 2: (-s / 2, 0.0, z), 3: (-s / 2, -s, z),
            4: (s / 2, s, z), 5: (s / 2, 0.0, z), 6: (s / 2, -s, z),
        }
        for cell, pos in expected.items():
            assert cell_position(cell) == pytest.approx(pos)

    def test_invalid_cell(self):
        with pytest.raises(InvalidCell):
            cell_position(0)
        with pytest.raises(InvalidCell):
            cell_position(7)

    def test_layout_validation(self):
        with pytest.raises(ValueError):
            LayoutConfig(cell_spacing_m=0.0)
        with pytest.raises(ValueError):
            LayoutConfig(plane_height_m=-0.1)


class TestCellFrequencies:
    def test_defaults_match_cell_table(self):
        f = CellFrequencies()
        assert [f[c] for c in range(1, 7)] == [200.0, 140.0, 120.0, 160.0, 180.0, 100.0]

    def test_rejects_out_of_band(self):
        with pytest.raises(ValueError):
            CellFrequencies({1: 250.0, 2: 140.0, 3: 120.0, 4: 160.0, 5: 180.0, 6: 100.0})

    def test_requires_all_six_cells(self):
        with pytest.raises(ValueError):
            CellFrequencies({1: 200.0})


class TestPointByPoint:
    def test_single_dot(self):
        s = build_schedule(encode_char("1"), StimulusMethod.POINT_BY_POINT)
        assert len(s.events) == 1
        e = s.events[0]
        assert e.start_s == 0.0 and e.duration_s == 0.2 and e.mod_freq_hz == 200.0
        assert s.total_duration_s == 0.7

    def test_four_dots(self):
        s = build_schedule(encode_char("7"), StimulusMethod.POINT_BY_POINT)
        assert [e.start_s for e in s.events] == [0.0, 0.5, 1.0, 1.5]
        assert s.total_duration_s == 2.2

    def test_ascending_cell_order(self):
        s = build_schedule(DotPattern.of(5, 1, 4), StimulusMethod.POINT_BY_POINT)
        assert [e.cell for e in s.events] == [1, 4, 5]

    @given(any_patterns)
    def test_duration_formula(self, pattern):
        s = build_schedule(pattern, StimulusMethod.POINT_BY_POINT)
        n = len(pattern)
        assert total_ms(s) == 200 * n + 300 * (n - 1) + 500

    def test_one_dot_at_a_time(self):
        s = build_schedule(encode_char("7"), StimulusMethod.POINT_BY_POINT)
        assert max_simultaneous_events(s.events) == 1


class TestConstantFamily:
    def test_constant_four_dots(self):
        s = build_schedule(encode_char("7"), StimulusMethod.CONSTANT)
        assert len(s.events) == 4
        assert all(e.start_s == 0.0 and e.duration_s is None for e in s.events)
        assert {e.mod_freq_hz for e in s.events} == {200.0, 140.0, 160.0, 180.0}
        assert s.open_ended

    def test_rotating_orbit(self):
        s = build_schedule(encode_char("1"), StimulusMethod.ROTATING)
        e = s.events[0]
        base = cell_position(1)
        x, y, z = e.position_at(0.0)
        assert (x, y, z) == pytest.approx((base[0] + 0.004, base[1], base[2]))
        # Quarter revolution at 2 rev/s: clockwise from above moves +x toward -y.
        x, y, z = e.position_at(0.125)
        assert (x, y) == pytest.approx((base[0], base[1] - 0.004), abs=1e-12)

    def test_expanding_scales_from_centroid(self):
        s = build_schedule(DotPattern.of(1, 4), StimulusMethod.EXPANDING)
        p1, p4 = cell_position(1), cell_position(4)
        centroid = (0.0, 0.03, 0.20)
        for e, base in zip(s.events, (p1, p4)):
            assert e.position_at(0.0) == pytest.approx(base)
            half = e.position_at(0.5)
            expected = tuple(c + 1.25 * (b - c) for b, c in zip(base, centroid))
            assert half == pytest.approx(expected)
            # Loops: scale resets each second.
            assert e.position_at(1.0) == pytest.approx(base)

    def test_expanding_single_dot_is_stationary(self):
        s = build_schedule(encode_char("1"), StimulusMethod.EXPANDING)
        e = s.events[0]
        assert e.position_at(0.37) == pytest.approx(cell_position(1))

    def test_pulsating_gate(self):
        s = build_schedule(encode_char("1"), StimulusMethod.PULSATING)
        e = s.events[0]
        # 200 Hz envelope peaks at odd multiples of 2.5 ms.
        assert e.amplitude_at(0.0025) == pytest.approx(1.0)
        # 2 Hz square with 0.5 duty is off in [0.25, 0.5).
        assert e.amplitude_at(0.2525) == 0.0

    def test_varying_intensity_envelope(self):
        s = build_schedule(encode_char("1"), StimulusMethod.VARYING_INTENSITY)
        e = s.events[0]
        t = 0.2525
        mod = 0.5 * (1 - math.cos(2 * math.pi * 200.0 * t))
        expected = mod * (0.75 + 0.25 * math.sin(2 * math.pi * 1.0 * t))
        assert e.amplitude_at(t) == pytest.approx(expected)


class TestRowAndColumn:
    def test_row_by_row_top_row_digit(self):
        s = build_schedule(DotPattern.of(1, 4), StimulusMethod.ROW_BY_ROW)
        assert len(s.events) == 2
        assert all(e.start_s == 0.0 and e.duration_s == 0.3 for e in s.events)
        assert s.total_duration_s == 0.6  # silent second row interval

    def test_row_by_row_intervals(self):
        s = build_schedule(encode_char("7"), StimulusMethod.ROW_BY_ROW)
        by_start = {}
        for e in s.events:
            by_start.setdefault(e.start_s, set()).add(e.cell)
        assert by_start == {0.0: {1, 4}, 0.3: {2, 5}}
        assert s.total_duration_s == 0.6

    def test_row_by_row_three_row_letter(self):
        s = build_schedule(encode_char("l"), StimulusMethod.ROW_BY_ROW)  # cells 1,2,3
        assert [e.start_s for e in s.events] == [0.0, 0.3, 0.6]
        assert s.total_duration_s == pytest.approx(0.9)

    def test_column_by_column(self):
        s = build_schedule(encode_char("7"), StimulusMethod.COLUMN_BY_COLUMN)
        by_start = {}
        for e in s.events:
            by_start.setdefault(e.start_s, set()).add(e.cell)
        assert by_start == {0.0: {1, 2}, 0.3: {4, 5}}
        assert s.total_duration_s == 0.6

    def test_column_by_column_single_column_keeps_rhythm(self):
        s = build_schedule(DotPattern.of(1, 2), StimulusMethod.COLUMN_BY_COLUMN)
        assert s.total_duration_s == 0.6


class TestMorseLike:
    def test_slots_and_central_position(self):
        s = build_schedule(encode_char("7"), StimulusMethod.MORSE_LIKE)
        center = (0.0, 0.0, 0.20)
        assert all(e.position == center for e in s.events)
        assert [e.cell for e in s.events] == [1, 2, 4, 5]
        # Slot of cell c starts at (c-1) * 0.5 s.
        assert [e.start_s for e in s.events] == [0.0, 0.5, 1.5, 2.0]
        assert all(e.duration_s == 0.2 for e in s.events)

    def test_fixed_cadence_for_all_patterns(self):
        for d in DIGITS:
            s = build_schedule(encode_char(d), StimulusMethod.MORSE_LIKE)
            assert total_ms(s) == 6 * 200 + 5 * 300 + 500

    def test_uses_visited_cell_frequency(self):
        s = build_schedule(encode_char("9"), StimulusMethod.MORSE_LIKE)  # cells 2,4
        assert [e.mod_freq_hz for e in s.events] == [140.0, 160.0]


class TestScheduleInvariants:
    @given(any_patterns, st.sampled_from(ALL_METHODS))
    def test_at_most_eight_simultaneous(self, pattern, method):
        s = build_schedule(pattern, method)
        assert max_simultaneous_events(s.events) <= 8

    @given(digit_patterns, st.sampled_from(ALL_METHODS))
    def test_digits_at_most_four_simultaneous(self, pattern, method):
        s = build_schedule(pattern, method)
        assert max_simultaneous_events(s.events) <= 4

    @given(any_patterns, st.sampled_from(ALL_METHODS))
    def test_event_frequency_matches_cell_table(self, pattern, method):
        freqs = CellFrequencies()
        s = build_schedule(pattern, method)
        assert all(e.mod_freq_hz == freqs[e.cell] for e in s.events)

    @given(any_patterns, st.sampled_from(ALL_METHODS))
    def test_events_sorted_by_start(self, pattern, method):
        s = build_schedule(pattern, method)
        starts = [e.start_s for e in s.events]
        assert starts == sorted(starts)

    @given(any_patterns, st.sampled_from([m for m in ALL_METHODS if m != StimulusMethod.MORSE_LIKE]))
    def test_positions_match_cell_grid(self, pattern, method):
        s = build_schedule(pattern, method)
        for e in s.events:
            assert e.position == cell_position(e.cell)

    def test_empty_pattern_rejected(self):
        with pytest.raises(EmptyPattern):
            build_schedule(DotPattern(frozenset()), StimulusMethod.CONSTANT)

    def test_empty_pattern_allowed_for_space(self):
        opts = ScheduleOptions(allow_empty=True)
        s = build_schedule(DotPattern(frozenset()), StimulusMethod.POINT_BY_POINT, options=opts)
        assert s.events == () and total_ms(s) == 500

    def test_unknown_method(self):
        with pytest.raises(UnknownMethod):
            build_schedule(encode_char("1"), "strobe")

    def test_device_point_limit_enforced(self):
        events = tuple(
            EmissionEvent(
                cell=1 + i % 6,
                position=(0.0, 0.0, 0.2),
                start_s=0.0,
                duration_s=None,
                mod_freq_hz=150.0,
            )
            for i in range(9)
        )
        with pytest.raises(ValueError, match="simultaneous"):
            Schedule(
                method=StimulusMethod.CONSTANT,
                pattern=encode_char("1"),
                events=events,
                total_duration_s=None,
            )

    def test_event_height_limit(self):
        with pytest.raises(ValueError, match="height"):
            EmissionEvent(
                cell=1, position=(0.0, 0.0, 0.75), start_s=0.0, duration_s=None, mod_freq_hz=150.0
            )


class TestSampleSchedule:
    def test_constant_at_zero_is_envelope_null(self):
        s = build_schedule(encode_char("1"), StimulusMethod.CONSTANT)
        points = sample_schedule(s, 0.0)
        assert len(points) == 1
        assert points[0].amplitude == 0.0

    def test_constant_at_envelope_peak(self):
        s = build_schedule(encode_char("1"), StimulusMethod.CONSTANT)
        (point,) = sample_schedule(s, 1 / (2 * 200.0))
        assert point.amplitude == pytest.approx(1.0)

    def test_point_by_point_gap_is_silent(self):
        s = build_schedule(encode_char("7"), StimulusMethod.POINT_BY_POINT)
        assert sample_schedule(s, 0.35) == []

    def test_wrap_on_loop(self):
        s = build_schedule(encode_char("7"), StimulusMethod.POINT_BY_POINT)
        assert s.loop
        wrapped = sample_schedule(s, s.total_duration_s + 0.1)
        direct = sample_schedule(s, 0.1)
        assert wrapped == direct and len(direct) == 1

    def test_silence_past_end_when_not_looping(self):
        opts = ScheduleOptions(loop=False)
        s = build_schedule(encode_char("7"), StimulusMethod.POINT_BY_POINT, options=opts)
        assert sample_schedule(s, s.total_duration_s + 0.1) == []

    def test_explicit_silence_overrides_loop(self):
        s = build_schedule(encode_char("7"), StimulusMethod.POINT_BY_POINT)
        assert sample_schedule(s, s.total_duration_s + 0.1, past_end="silence") == []

    def test_negative_time_rejected(self):
        s = build_schedule(encode_char("1"), StimulusMethod.CONSTANT)
        with pytest.raises(ValueError):
            sample_schedule(s, -0.1)

    @given(
        any_patterns,
        st.sampled_from(ALL_METHODS),
        st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
    )
    def test_never_more_than_eight_active(self, pattern, method, t):
        s = build_schedule(pattern, method)
        assert len(sample_schedule(s, t)) <= 8

    @given(st.floats(min_value=0.0, max_value=5.0, allow_nan=False))
    def test_deterministic(self, t):
        s = build_schedule(encode_char("5"), StimulusMethod.ROTATING)
        assert sample_schedule(s, t) == sample_schedule(s, t)


class TestSerialization:
    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_round_trip(self, method):
        s = build_schedule(encode_char("7"), method)
        text = schedule_to_json(s)
        assert schedule_from_json(text) == s

    def test_document_field_order(self):
        s = build_schedule(encode_char("1"), StimulusMethod.POINT_BY_POINT)
        doc = json.loads(schedule_to_json(s))
        assert list(doc) == ["format", "method", "pattern", "total_duration_s", "loop", "events"]
        assert list(doc["events"][0]) == [
            "cell", "x", "y", "z", "start_s", "duration_s", "freq_hz", "amplitude",
        ]

    def test_open_durations_serialize_as_marker(self):
        s = build_schedule(encode_char("1"), StimulusMethod.CONSTANT)
        doc = json.loads(schedule_to_json(s))
        assert doc["total_duration_s"] == "open"
        assert doc["events"][0]["duration_s"] == "open"

    def test_rejects_foreign_documents(self):
        with pytest.raises(ValueError):
            schedule_from_json('{"format": "something-else"}')
