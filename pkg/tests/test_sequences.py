"""
Tests for sequences.py module.

Covers SDD, nested UDD and custom schedule generation, the schedule
invariants, NUDD/SDD pulse-number pairing and the JSON schedule document.
"""

import json

import pytest

from sequences import (
    NuddLevelCounts,
    PulseSchedule,
    Scheme,
    ScheduleError,
    custom_schedule,
    free_evolution,
    infer_nudd_layout,
    load_schedule,
    nudd_schedule,
    rescale_schedule,
    save_schedule,
    schedule_from_dict,
    schedule_to_dict,
    sdd_pairing,
    sdd_schedule,
    udd_times,
)


class TestUddTimes:
    """Uhrig timing on an interval."""

    @pytest.mark.smoke
    def test_two_pulses_on_unit_interval(self):
        assert udd_times(2, 0.0, 1.0) == pytest.approx([0.25, 0.75])

    def test_single_pulse_is_midpoint(self):
        assert udd_times(1, 2.0, 4.0) == [3.0]

    def test_no_pulses(self):
        assert udd_times(0, 0.0, 1.0) == []

    @pytest.mark.parametrize("L", [3, 6, 11])
    def test_mirror_symmetry(self, L):
        times = udd_times(L, 0.2, 0.7)
        for l in range(L):
            assert times[l] + times[L - 1 - l] == pytest.approx(0.9, abs=1e-15)

    def test_empty_interval_rejected(self):
        with pytest.raises(ScheduleError):
            udd_times(2, 1.0, 1.0)


class TestSddSchedule:

    @pytest.mark.smoke
    def test_four_pulses(self):
        schedule = sdd_schedule(2, 4, 1.0)
        assert schedule.times[0] == pytest.approx((0.125, 0.375, 0.625, 0.875))
        assert schedule.times[1] == schedule.times[0]
        assert schedule.total_pulses == 8
        assert schedule.sdd_pulses == 4

    def test_odd_count_rejected(self):
        with pytest.raises(ScheduleError) as excinfo:
            sdd_schedule(2, 3, 1.0)
        assert "D must be even" in str(excinfo.value)

    def test_zero_count_rejected(self):
        with pytest.raises(ScheduleError):
            sdd_schedule(2, 0, 1.0)

    def test_scales_with_duration(self):
        assert sdd_schedule(1, 2, 8.0).times[0] == pytest.approx((2.0, 6.0))


class TestNuddLevelCounts:

    def test_parse(self):
        assert NuddLevelCounts.parse("2, 4").counts == (2, 4)

    def test_unparseable(self):
        with pytest.raises(ScheduleError):
            NuddLevelCounts.parse("two,2")

    def test_inner_level_must_be_even(self):
        with pytest.raises(ScheduleError) as excinfo:
            NuddLevelCounts((2, 3))
        assert "even" in str(excinfo.value)

    def test_outer_level_may_be_odd(self):
        assert NuddLevelCounts((3, 2)).level(1) == 3

    @pytest.mark.parametrize("counts, total", [
        ((2, 2), 8), ((4, 4), 24), ((6, 6), 48), ((8, 8), 80), ((16, 16), 288),
    ])
    def test_total_pulses(self, counts, total):
        assert NuddLevelCounts(counts).total_pulses == total

    def test_pulses_on_level(self):
        counts = NuddLevelCounts((2, 4))
        assert counts.pulses_on_level(1) == 2
        assert counts.pulses_on_level(0) == 12


class TestNuddSchedule:

    @pytest.mark.smoke
    def test_two_two_layout(self, nudd22):
        assert nudd22.times[1] == pytest.approx((0.25, 0.75))
        assert nudd22.times[0] == pytest.approx((0.0625, 0.1875, 0.375, 0.625, 0.8125, 0.9375))
        assert nudd22.pulse_counts == (6, 2)
        assert nudd22.total_pulses == 8

    def test_qubit_order_swaps_levels(self):
        swapped = nudd_schedule(NuddLevelCounts((2, 2)), 1.0, qubit_order=(1, 0))
        assert swapped.pulse_counts == (2, 6)
        assert swapped.level_of_qubit(0) == 1

    def test_bad_qubit_order(self):
        with pytest.raises(ScheduleError):
            nudd_schedule(NuddLevelCounts((2, 2)), 1.0, qubit_order=(0, 0))

    def test_degenerate_level_noted(self):
        schedule = nudd_schedule(NuddLevelCounts((0, 2)), 1.0)
        assert schedule.pulse_counts == (2, 0)
        assert schedule.times[0] == pytest.approx((0.25, 0.75))
        assert any("degenerate level 1" in note for note in schedule.notes)

    def test_accepts_plain_tuple(self):
        assert nudd_schedule((2, 2), 1.0).total_pulses == 8


class TestScheduleValidation:

    def test_unsorted_times(self):
        with pytest.raises(ScheduleError) as excinfo:
            custom_schedule([[0.6, 0.4]], 1.0)
        assert excinfo.value.qubit == 0
        assert excinfo.value.time == 0.4

    def test_time_on_boundary(self):
        with pytest.raises(ScheduleError):
            custom_schedule([[0.0, 0.5]], 1.0)

    def test_overlapping_finite_pulses(self):
        with pytest.raises(ScheduleError) as excinfo:
            custom_schedule([[0.5, 0.505]], 1.0, pulse_width=0.01)
        assert "overlap" in str(excinfo.value)

    def test_finite_pulse_leaving_interval(self):
        with pytest.raises(ScheduleError):
            custom_schedule([[0.001]], 1.0, pulse_width=0.01)

    def test_negative_duration(self):
        with pytest.raises(ScheduleError):
            custom_schedule([[0.5]], -1.0)

    def test_sdd_qubits_must_match(self):
        with pytest.raises(ScheduleError):
            PulseSchedule(num_qubits=2, total_duration=1.0, times=((0.25, 0.75), (0.3, 0.7)), scheme=Scheme.SDD)

    def test_free_evolution(self):
        schedule = free_evolution(2, 1.0)
        assert schedule.pulse_counts == (0, 0)
        assert schedule.scheme is Scheme.CUSTOM


class TestPairingAndRescaling:

    @pytest.mark.parametrize("counts, D", [
        ((2, 2), 4), ((4, 4), 12), ((6, 6), 24), ((8, 8), 40), ((16, 16), 144),
    ])
    def test_sdd_pairing(self, counts, D):
        assert sdd_pairing(NuddLevelCounts(counts)) == D

    def test_pairing_needs_even_share(self):
        with pytest.raises(ScheduleError):
            sdd_pairing(NuddLevelCounts((3, 2)))

    def test_rescale_keeps_fractions(self, nudd22):
        scaled = rescale_schedule(nudd22, 3.0)
        assert scaled.total_duration == 3.0
        assert scaled.fractions(0) == pytest.approx(nudd22.fractions(0))
        assert scaled.level_counts == nudd22.level_counts


class TestScheduleDocument:

    def test_round_trip_sdd(self, tmp_path, sdd4):
        path = tmp_path / "sdd4.json"
        save_schedule(sdd4, str(path))
        loaded = load_schedule(str(path))
        assert loaded == sdd4

    def test_round_trip_nudd_recovers_counts(self, tmp_path):
        schedule = nudd_schedule(NuddLevelCounts((4, 2)), 2.0, pulse_width=1e-4)
        path = tmp_path / "nudd.json"
        save_schedule(schedule, str(path))
        loaded = load_schedule(str(path))
        assert loaded.scheme is Scheme.NUDD
        assert loaded.level_counts == NuddLevelCounts((4, 2))
        assert loaded.pulse_width == pytest.approx(1e-4)

    def test_nudd_qubit_order_inferred(self):
        schedule = nudd_schedule(NuddLevelCounts((2, 2)), 1.0, qubit_order=(1, 0))
        counts, order = infer_nudd_layout(schedule.times, 1.0)
        assert counts == NuddLevelCounts((2, 2))
        assert order == (1, 0)

    def test_document_fields(self, sdd4):
        document = schedule_to_dict(sdd4)
        assert document['scheme'] == 'SDD'
        assert json.loads(json.dumps(document)) == document

    def test_missing_fields(self):
        with pytest.raises(ScheduleError) as excinfo:
            schedule_from_dict({'scheme': 'SDD'})
        assert "times" in str(excinfo.value)

    def test_tampered_nudd_document(self, nudd22):
        document = schedule_to_dict(nudd22)
        document['times'][1] = [0.3, 0.75]
        with pytest.raises(ScheduleError):
            schedule_from_dict(document)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ScheduleError):
            load_schedule(str(path))
