"""
Tests for report_generator.py module.

Tests the diagnose report: sections, warnings, errors, statistics and
the JSON document.
"""

import json
import math
from datetime import datetime

import numpy as np

from report_generator import DiagnosticReport, create_diagnostic_report, finite_or_none, load_report


class TestDiagnosticReport:
    """Test suite for DiagnosticReport class."""

    def test_create_report_instance(self):
        """Test creating a DiagnosticReport instance."""
        report = create_diagnostic_report()
        assert isinstance(report, DiagnosticReport)
        assert report.sections == {}
        assert report.warnings == []
        assert report.errors == []
        assert report.start_time is None

    def test_set_metadata_converts_tuples_and_numpy(self):
        report = create_diagnostic_report()
        report.set_metadata(pulse_counts=(4, 4), pulse_width=np.float64(0.001))

        assert report.metadata['pulse_counts'] == [4, 4]
        assert type(report.metadata['pulse_width']) is float

    def test_start_end_processing(self):
        report = create_diagnostic_report()

        report.start_processing()
        report.end_processing()

        assert isinstance(report.start_time, datetime)
        assert report.end_time >= report.start_time

    def test_add_entry_builds_section(self):
        report = create_diagnostic_report()
        report.add_entry('rolloff', 'F14i', {'db_per_octave': 18.06})
        report.add_entry('rolloff', 'F23i', None)

        assert report.sections['rolloff'] == {'F14i': {'db_per_octave': 18.06}, 'F23i': None}

    def test_tuple_keys_are_joined(self):
        report = create_diagnostic_report()
        report.add_section('dfs', {(1, 2): True, (0, 3): False})

        assert report.sections['dfs'] == {'1,2': True, '0,3': False}

    def test_warnings_and_errors(self):
        report = create_diagnostic_report()
        report.add_warning("rolloff fit rejected")
        report.add_error("scan failed")

        assert report.warnings == ["rolloff fit rejected"]
        assert report.errors == ["scan failed"]


class TestStatistics:
    """Test suite for statistics calculation."""

    def test_empty_statistics(self):
        stats = create_diagnostic_report().get_statistics()

        assert stats == {'sections': 0, 'warnings': 0, 'errors': 0,
                         'singular_points': 0, 'periodic_singular_points': 0, 'protected_elements': 0}

    def test_counts_singular_points_and_protected_elements(self):
        report = create_diagnostic_report()
        report.add_section('dfs', {'F23c': True, 'F14c': False, 'F12c': False})
        report.add_entry('singularities', 'F14c',
                         [{'z': 301.6, 'family': 'periodic'}, {'z': 603.2, 'family': 'periodic'}])
        report.add_entry('singularities', 'F12c', [{'z': 301.6, 'family': 'isolated'}])

        stats = report.get_statistics()
        assert stats['protected_elements'] == 1
        assert stats['singular_points'] == 3
        assert stats['periodic_singular_points'] == 2
        assert stats['sections'] == 2


class TestJsonOutput:
    """Test suite for the JSON document."""

    def test_write_and_load_round_trip(self, tmp_path):
        report = create_diagnostic_report()
        report.set_metadata(schedule="SDD D=4 on 2 qubit(s), total 8")
        report.add_entry('spectral_peak', 'F14i', 12.75)
        report.add_warning("F23c: protected element, filter vanishes")
        path = tmp_path / "report.json"

        assert report.write_json(str(path))
        loaded = load_report(str(path))

        assert loaded['metadata']['schedule'].startswith("SDD")
        assert loaded['spectral_peak'] == {'F14i': 12.75}
        assert loaded['warnings'] == ["F23c: protected element, filter vanishes"]
        assert loaded['statistics']['warnings'] == 1

    def test_identical_reports_are_byte_identical(self, tmp_path):
        paths = []
        for name in ("a.json", "b.json"):
            report = create_diagnostic_report()
            report.start_processing()
            report.add_entry('rolloff', 'F14i', {'db_per_octave': 18.0617997398389})
            report.end_processing()
            path = tmp_path / name
            report.write_json(str(path))
            paths.append(path)

        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_write_to_missing_directory_returns_false(self, tmp_path):
        report = create_diagnostic_report()

        assert report.write_json(str(tmp_path / "missing" / "report.json")) is False

    def test_document_is_valid_json(self):
        report = create_diagnostic_report()
        report.add_entry('rolloff', 'F14c', {'fit_band': (0.01, 1.0)})

        assert json.loads(report.to_json())['rolloff']['F14c']['fit_band'] == [0.01, 1.0]


class TestFiniteOrNone:

    def test_finite_values_pass(self):
        assert finite_or_none(2.5) == 2.5

    def test_non_finite_values_become_none(self):
        assert finite_or_none(math.inf) is None
        assert finite_or_none(math.nan) is None
        assert finite_or_none(None) is None
