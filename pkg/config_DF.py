"""
Numerical configuration for ddfilter.

Tolerances, precision limits and quadrature settings live in an INI file
(DFconfig.ini by default). Missing keys fall back to the built-in defaults;
a missing file is not an error. Environment variables override the file
location and the worker count:

    DDFILTER_CONFIG     path of the INI file
    DDFILTER_JOBS       default worker count for sweeps
    DDFILTER_LOG_LEVEL  default logging level for the command line
"""

import configparser
import logging
import os
import threading
from dataclasses import dataclass, fields, replace
from typing import Optional

logger = logging.getLogger(__name__)

# ============================================================================
# Environment
# ============================================================================

CONFIG_FILE_PATH = os.getenv('DDFILTER_CONFIG', 'DFconfig.ini')
DEFAULT_LOG_LEVEL = os.getenv('DDFILTER_LOG_LEVEL', 'WARNING')


@dataclass(frozen=True)
class NumericsConfig:
    """All numerical knobs, grouped by INI section."""

    # [SAMPLING]
    precision_threshold: float = 1e-6
    initial_digits: int = 30
    max_digits: int = 1200
    sdd_removable_tolerance: float = 1e-6

    # [QUADRATURE]
    rel_tolerance: float = 1e-8
    abs_tolerance: float = 1e-300
    low_order: int = 10
    high_order: int = 20
    max_refinements: int = 12
    slope_band_min: float = 1e-4
    slope_band_max: float = 1e-2
    slope_points: int = 41
    slope_deviation: float = 0.01
    z_hi_floor: float = 1e3
    z_hi_per_pulse: float = 100.0
    log_panels_per_decade: int = 8

    # [ORACLE]
    trapezoid_min: float = 1e-6
    trapezoid_max: float = 1e6
    points_per_decade: int = 400

    # [ANALYSIS]
    rolloff_min_r_squared: float = 0.999
    peak_ambiguity: float = 0.01
    dfs_factor: float = 1e-18
    singularity_floor: float = 1e-300

    # [RUN]
    jobs: int = 1


# Which INI section each field is read from
CONFIG_SECTIONS = {
    'SAMPLING': ('precision_threshold', 'initial_digits', 'max_digits', 'sdd_removable_tolerance'),
    'QUADRATURE': ('rel_tolerance', 'abs_tolerance', 'low_order', 'high_order', 'max_refinements',
                   'slope_band_min', 'slope_band_max', 'slope_points', 'slope_deviation',
                   'z_hi_floor', 'z_hi_per_pulse', 'log_panels_per_decade'),
    'ORACLE': ('trapezoid_min', 'trapezoid_max', 'points_per_decade'),
    'ANALYSIS': ('rolloff_min_r_squared', 'peak_ambiguity', 'dfs_factor', 'singularity_floor'),
    'RUN': ('jobs',),
}


def write_default_config(config_file_path: str) -> None:
    """Write an INI file holding the built-in defaults."""
    defaults = NumericsConfig()
    config = configparser.ConfigParser()
    for section, keys in CONFIG_SECTIONS.items():
        config[section] = {key: repr(getattr(defaults, key)) for key in keys}
    with open(config_file_path, 'w') as configfile:
        config.write(configfile)
    logger.info(f"Wrote default numerics config to {config_file_path}")


def load_numerics_config(config_file_path: Optional[str] = None,
                         create_if_missing: bool = False) -> NumericsConfig:
    """
    Read the numerics configuration.

    Args:
        config_file_path: INI file to read (default: DDFILTER_CONFIG or DFconfig.ini)
        create_if_missing: write the defaults when the file does not exist

    Returns:
        NumericsConfig with every key the file sets, defaults elsewhere
    """
    path = config_file_path or CONFIG_FILE_PATH
    defaults = NumericsConfig()

    if not os.path.exists(path):
        logger.info(f"No numerics config at {path}, using defaults")
        if create_if_missing:
            write_default_config(path)
        config = defaults
    else:
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as e:
            logger.warning(f"Numerics config {path} is corrupt ({e}), using defaults")
            return _apply_env(defaults)

        types = {f.name: f.type for f in fields(NumericsConfig)}
        overrides = {}
        for section, keys in CONFIG_SECTIONS.items():
            if not parser.has_section(section):
                continue
            for key in keys:
                if not parser.has_option(section, key):
                    continue
                raw = parser.get(section, key)
                cast = int if types[key] in (int, 'int') else float
                try:
                    overrides[key] = cast(float(raw)) if cast is int else cast(raw)
                except ValueError:
                    logger.warning(f"Ignoring invalid value {section}.{key} = {raw!r}")
        config = replace(defaults, **overrides)
        logger.info(f"Loaded numerics config from {path} ({len(overrides)} override(s))")

    return _apply_env(config)


def _apply_env(config: NumericsConfig) -> NumericsConfig:
    jobs = os.getenv('DDFILTER_JOBS')
    if jobs:
        try:
            config = replace(config, jobs=max(1, int(jobs)))
        except ValueError:
            logger.warning(f"Ignoring DDFILTER_JOBS={jobs!r}")
    return config


# ============================================================================
# Process-wide instance
# ============================================================================

_config_instance: Optional[NumericsConfig] = None
_config_lock = threading.Lock()


def get_numerics_config() -> NumericsConfig:
    """
    Get the process-wide NumericsConfig (thread-safe).

    Uses double-check locking so the file is read once.
    """
    global _config_instance
    if _config_instance is None:
        with _config_lock:
            if _config_instance is None:
                _config_instance = load_numerics_config()
    return _config_instance


def set_numerics_config(config: Optional[NumericsConfig]) -> None:
    """Replace the process-wide config; None forces a reload on next access."""
    global _config_instance
    with _config_lock:
        _config_instance = config
