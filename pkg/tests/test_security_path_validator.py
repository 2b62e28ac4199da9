"""
Unit tests for security.path_validator module.

Tests path validation for every file the command line touches:
- Path traversal prevention
- Suspicious pattern detection
- Extension validation for schedules, configs, tables and workbooks
- Output path validation
"""

import pytest
import os

from security.path_validator import (
    PathValidationError,
    validate_safe_path,
    validate_output_path,
    validate_schedule_input,
    validate_config_input,
    validate_table_input,
    validate_table_output,
    validate_report_output,
    validate_workbook_output,
    sanitize_path_for_logging,
    validate_batch_paths
)


class TestPathValidation:
    """Test suite for basic path validation."""

    @pytest.mark.smoke
    def test_valid_file_path(self, tmp_path):
        """Test validation of a valid file path."""
        test_file = tmp_path / "schedule.json"
        test_file.write_text("{}")

        validated = validate_safe_path(str(test_file), must_exist=True, path_type='file')

        assert validated == test_file

    def test_valid_directory_path(self, tmp_path):
        """Test validation of a valid directory path."""
        test_dir = tmp_path / "runs"
        test_dir.mkdir()

        validated = validate_safe_path(str(test_dir), must_exist=True, path_type='directory')

        assert validated == test_dir

    def test_nonexistent_path_fails(self, tmp_path):
        """Test that nonexistent paths fail validation."""
        with pytest.raises(PathValidationError) as excinfo:
            validate_safe_path(str(tmp_path / "missing.json"), must_exist=True)

        assert "does not exist" in str(excinfo.value).lower()

    @pytest.mark.parametrize("bad", ["", None])
    def test_empty_or_none_path_fails(self, bad):
        """Test that empty and None paths fail validation."""
        with pytest.raises(PathValidationError) as excinfo:
            validate_safe_path(bad)

        assert "non-empty string" in str(excinfo.value).lower()


class TestPathTraversalPrevention:
    """Test suite for path traversal attack prevention."""

    def test_path_traversal_with_base_dir(self, tmp_path):
        """Test that path traversal outside base directory is blocked."""
        base_dir = tmp_path / "safe_zone"
        base_dir.mkdir()
        traversal_path = str(base_dir / ".." / "outside.json")

        with pytest.raises(PathValidationError) as excinfo:
            validate_safe_path(traversal_path, base_dir=str(base_dir), must_exist=False)

        assert "outside allowed directory" in str(excinfo.value).lower()

    def test_path_within_base_dir_succeeds(self, tmp_path):
        """Test that paths within base directory are allowed."""
        base_dir = tmp_path / "safe_zone"
        base_dir.mkdir()
        safe_file = base_dir / "sweep.json"
        safe_file.write_text("{}")

        validated = validate_safe_path(str(safe_file), base_dir=str(base_dir), must_exist=True)

        assert validated == safe_file


class TestSuspiciousPatternDetection:
    """Test suite for suspicious path pattern detection."""

    @pytest.mark.parametrize("suspicious_path", [
        "/etc/passwd",
        "/etc/shadow",
        "C:\\Windows\\System32\\config.sys",
        "/home/user/.ssh/id_rsa",
    ])
    def test_suspicious_patterns_blocked(self, suspicious_path):
        """Test that suspicious system paths are blocked."""
        with pytest.raises(PathValidationError) as excinfo:
            validate_safe_path(suspicious_path, must_exist=False)

        assert "suspicious pattern" in str(excinfo.value).lower()

    def test_normal_path_with_system_string_allowed(self, tmp_path):
        """Test that directory names merely containing 'system' are allowed."""
        normal_dir = tmp_path / "my_system_runs"
        normal_dir.mkdir()

        validated = validate_safe_path(str(normal_dir), must_exist=True, path_type='directory')

        assert validated == normal_dir


class TestExtensionValidation:
    """Test suite for file extension validation."""

    def test_disallowed_extension_fails(self, tmp_path):
        """Test that files with disallowed extensions fail validation."""
        exe_file = tmp_path / "tool.exe"
        exe_file.write_text("x")

        with pytest.raises(PathValidationError) as excinfo:
            validate_safe_path(str(exe_file), allowed_extensions=['.json'], must_exist=True)

        assert "invalid file extension" in str(excinfo.value).lower()

    def test_case_insensitive_extension(self, tmp_path):
        """Test that extension validation is case-insensitive."""
        table = tmp_path / "density.CSV"
        table.write_text("1,2\n")

        assert validate_safe_path(str(table), allowed_extensions=['.csv'], must_exist=True) == table

    def test_missing_extension_reported(self, tmp_path):
        """Test that a file without suffix is reported as such."""
        bare = tmp_path / "schedule"
        bare.write_text("{}")

        with pytest.raises(PathValidationError) as excinfo:
            validate_schedule_input(str(bare))

        assert "(none)" in str(excinfo.value)


class TestOutputPathValidation:
    """Test suite for output path validation."""

    def test_valid_output_path(self, tmp_path):
        output_file = tmp_path / "sweep.csv"

        assert validate_output_path(str(output_file), allowed_extensions=['.csv']) == output_file

    def test_nonexistent_output_directory_fails(self, tmp_path):
        output_file = tmp_path / "does_not_exist" / "sweep.csv"

        with pytest.raises(PathValidationError) as excinfo:
            validate_output_path(str(output_file))

        assert "directory does not exist" in str(excinfo.value).lower()

    def test_directory_as_output_fails(self, tmp_path):
        target = tmp_path / "table.csv"
        target.mkdir()

        with pytest.raises(PathValidationError) as excinfo:
            validate_output_path(str(target))

        assert "is a directory" in str(excinfo.value).lower()

    def test_overwrite_refused_when_disabled(self, tmp_path):
        existing = tmp_path / "report.json"
        existing.write_text("{}")

        with pytest.raises(PathValidationError):
            validate_output_path(str(existing), allow_overwrite=False)

    @pytest.mark.skipif(os.name == 'nt' or (hasattr(os, 'geteuid') and os.geteuid() == 0),
                        reason="chmod has no effect on Windows or for root")
    def test_non_writable_directory_fails(self, tmp_path):
        readonly_dir = tmp_path / "readonly"
        readonly_dir.mkdir()
        os.chmod(readonly_dir, 0o444)

        try:
            with pytest.raises(PathValidationError) as excinfo:
                validate_output_path(str(readonly_dir / "sweep.csv"), check_writable=True)
            assert "no write permission" in str(excinfo.value).lower()
        finally:
            os.chmod(readonly_dir, 0o755)


class TestConvenienceFunctions:
    """Test suite for the per-file-kind validators."""

    def test_schedule_input(self, tmp_path):
        schedule = tmp_path / "sdd4.json"
        schedule.write_text("{}")

        assert validate_schedule_input(str(schedule)) == schedule

    def test_config_input_rejects_csv(self, tmp_path):
        table = tmp_path / "sweep.csv"
        table.write_text("a,b\n")

        with pytest.raises(PathValidationError):
            validate_config_input(str(table))

    @pytest.mark.parametrize("name", ["density.csv", "modes.txt"])
    def test_table_input(self, tmp_path, name):
        table = tmp_path / name
        table.write_text("1,2\n")

        assert validate_table_input(str(table)) == table

    def test_output_kinds(self, tmp_path):
        assert validate_table_output(str(tmp_path / "f.csv")).suffix == '.csv'
        assert validate_report_output(str(tmp_path / "r.json")).suffix == '.json'
        assert validate_workbook_output(str(tmp_path / "s.xlsx")).suffix == '.xlsx'

    def test_workbook_output_rejects_csv(self, tmp_path):
        with pytest.raises(PathValidationError):
            validate_workbook_output(str(tmp_path / "sweep.csv"))


class TestBatchValidation:
    """Test suite for batch path validation."""

    def test_validate_multiple_valid_paths(self, tmp_path):
        paths = []
        for name in ("a.json", "b.json"):
            f = tmp_path / name
            f.write_text("{}")
            paths.append(str(f))

        assert len(validate_batch_paths(paths, allowed_extensions=['.json'])) == 2

    def test_batch_validation_reports_every_failure(self, tmp_path):
        good = tmp_path / "good.json"
        good.write_text("{}")
        paths = [str(good), str(tmp_path / "missing1.json"), str(tmp_path / "missing2.json")]

        with pytest.raises(PathValidationError) as excinfo:
            validate_batch_paths(paths)

        message = str(excinfo.value)
        assert "2 path(s)" in message
        assert "missing1.json" in message and "missing2.json" in message


class TestPathSanitization:
    """Test suite for path sanitization in logs."""

    def test_sanitize_absolute_path(self):
        assert sanitize_path_for_logging("/home/user/runs/sweep.csv") == ".../runs/sweep.csv"

    def test_sanitize_relative_path(self):
        assert sanitize_path_for_logging("runs/sweep.csv") == "sweep.csv"
