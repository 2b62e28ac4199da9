"""
Tests for config_DF.py module.

INI loading with defaults, invalid values, environment overrides and the
thread-safe process-wide instance.
"""

import threading

import pytest

import config_DF
from config_DF import (
    NumericsConfig,
    get_numerics_config,
    load_numerics_config,
    set_numerics_config,
    write_default_config,
)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv('DDFILTER_JOBS', raising=False)


class TestLoadNumericsConfig:

    @pytest.mark.smoke
    def test_missing_file_gives_defaults(self, tmp_path):
        config = load_numerics_config(str(tmp_path / "absent.ini"))
        assert config == NumericsConfig()

    def test_create_if_missing_writes_defaults(self, tmp_path):
        path = tmp_path / "DFconfig.ini"
        load_numerics_config(str(path), create_if_missing=True)
        assert path.exists()
        assert load_numerics_config(str(path)) == NumericsConfig()

    def test_overrides_and_types(self, tmp_path):
        path = tmp_path / "custom.ini"
        path.write_text("[QUADRATURE]\nrel_tolerance = 1e-6\nhigh_order = 30\n\n[RUN]\njobs = 4\n")
        config = load_numerics_config(str(path))
        assert config.rel_tolerance == 1e-6
        assert config.high_order == 30 and isinstance(config.high_order, int)
        assert config.jobs == 4
        assert config.low_order == NumericsConfig().low_order

    def test_invalid_value_is_ignored(self, tmp_path):
        path = tmp_path / "custom.ini"
        path.write_text("[SAMPLING]\ninitial_digits = many\n")
        assert load_numerics_config(str(path)).initial_digits == NumericsConfig().initial_digits

    def test_corrupt_file_gives_defaults(self, tmp_path):
        path = tmp_path / "broken.ini"
        path.write_text("no section header\nkey = value\n")
        assert load_numerics_config(str(path)) == NumericsConfig()

    def test_jobs_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv('DDFILTER_JOBS', '3')
        assert load_numerics_config(str(tmp_path / "absent.ini")).jobs == 3

    def test_bad_jobs_environment_ignored(self, tmp_path, monkeypatch):
        monkeypatch.setenv('DDFILTER_JOBS', 'lots')
        assert load_numerics_config(str(tmp_path / "absent.ini")).jobs == 1

    def test_written_file_has_every_section(self, tmp_path):
        path = tmp_path / "defaults.ini"
        write_default_config(str(path))
        text = path.read_text()
        for section in config_DF.CONFIG_SECTIONS:
            assert f"[{section}]" in text


class TestProcessWideConfig:

    def test_set_and_get(self):
        custom = NumericsConfig(rel_tolerance=1e-5)
        set_numerics_config(custom)
        assert get_numerics_config() is custom

    def test_reset_reloads_from_file(self, tmp_path, monkeypatch):
        path = tmp_path / "DFconfig.ini"
        path.write_text("[ANALYSIS]\npeak_ambiguity = 0.05\n")
        monkeypatch.setattr(config_DF, 'CONFIG_FILE_PATH', str(path))
        set_numerics_config(None)
        assert get_numerics_config().peak_ambiguity == 0.05

    def test_concurrent_first_access(self, tmp_path, monkeypatch):
        """All threads racing on first access get the same instance."""
        monkeypatch.setattr(config_DF, 'CONFIG_FILE_PATH', str(tmp_path / "absent.ini"))
        set_numerics_config(None)

        instances = []
        lock = threading.Lock()

        def read_config():
            config = get_numerics_config()
            with lock:
                instances.append(config)

        threads = [threading.Thread(target=read_config) for _ in range(10)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert len(instances) == 10
        assert all(config is instances[0] for config in instances)
