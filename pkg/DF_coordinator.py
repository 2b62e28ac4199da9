"""
Command orchestration: each run_* function validates its paths, performs
one CLI command and writes its output file. main_cli maps the exceptions
raised here to exit codes.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from analysis import (AmbiguousPeak, ConfigValidationError, PoorFit, SweepConfig, SweepRow, dfs_check,
                      factor_sweep, load_sweep_config,
                      locate_spectral_peak, measure_rolloff, write_sweep_csv)
from excel_writer import write_sweep_workbook
from filters import (FilterSpec, PulseModel, SingularityMarker, Topology, filter_label,
                     filter_value, parse_filter_label, ratio_finite_ideal, scan_singularities,
                     sdd_singularity_grid, zero_floor)
from presets import grid_from_preset, sweep_document
from report_generator import DiagnosticReport, create_diagnostic_report, finite_or_none
from sampling import FrequencyGrid, make_grid
from sequences import (NuddLevelCounts, PulseSchedule, Scheme, ScheduleError, custom_schedule,
                       load_schedule, nudd_schedule, save_schedule, sdd_schedule)

from security.path_validator import (
    PathValidationError,
    validate_schedule_input,
    validate_config_input,
    validate_table_output,
    validate_report_output,
    validate_workbook_output,
    sanitize_path_for_logging
)

logger = logging.getLogger(__name__)


def parse_custom_times(text: str) -> List[List[float]]:
    """'0.25,0.75;0.5' -> [[0.25, 0.75], [0.5]]; qubits separated by ';'."""
    qubits = []
    for part in text.split(';'):
        part = part.strip()
        try:
            qubits.append([float(v) for v in part.split(',') if v.strip()])
        except ValueError:
            raise ScheduleError(f"cannot parse pulse times {part!r}")
    return qubits


def build_grid(preset: Optional[str] = None, z_min: float = None, z_max: float = None,
               points: int = None, step: float = None, spacing: str = 'logarithmic') -> FrequencyGrid:
    """Named preset, or an explicit grid from its bounds."""
    if preset:
        return grid_from_preset(preset)
    if z_min is None or z_max is None:
        raise ValueError("grid needs --preset or both --z-min and --z-max")
    return make_grid(z_min, z_max, points=points, step=step, spacing=spacing)


def _load_schedule_checked(schedule_path: str) -> PulseSchedule:
    try:
        validated = validate_schedule_input(schedule_path)
        logger.info(f"Loading schedule: {sanitize_path_for_logging(str(validated))}")
    except PathValidationError as e:
        logger.error(f"Schedule input validation failed: {str(e)}")
        raise
    return load_schedule(str(validated))


# ===================================== SCHEDULE ==========================================================

def run_schedule(scheme: str, T: float, out: Optional[str] = None, counts: Optional[str] = None,
                 D: Optional[int] = None, N: int = 2, times: Optional[str] = None,
                 pulse_width: float = 0.0) -> PulseSchedule:
    """
    Build an SDD, NUDD or custom schedule and optionally write its JSON document.

    Raises:
        ScheduleError: for inconsistent scheme parameters
        PathValidationError: if the output path is not writable
    """
    validated_out = None
    if out:
        try:
            validated_out = validate_report_output(out)
            logger.info(f"Schedule output: {sanitize_path_for_logging(str(validated_out))}")
        except PathValidationError as e:
            logger.error(f"Schedule output validation failed: {str(e)}")
            raise

    scheme = scheme.upper()
    if scheme == Scheme.SDD.value:
        if D is None:
            raise ScheduleError("sdd needs --D")
        schedule = sdd_schedule(N, D, T, pulse_width)
    elif scheme == Scheme.NUDD.value:
        if not counts:
            raise ScheduleError("nudd needs --counts")
        schedule = nudd_schedule(NuddLevelCounts.parse(counts), T, pulse_width)
    elif scheme == Scheme.CUSTOM.value:
        if times is None:
            raise ScheduleError("custom needs --times")
        schedule = custom_schedule(parse_custom_times(times), T, pulse_width)
    else:
        raise ScheduleError(f"unknown scheme {scheme!r}")

    if validated_out is not None:
        save_schedule(schedule, str(validated_out))
    return schedule


# ===================================== FILTER ============================================================

def ratio_column(spec: FilterSpec, schedule: PulseSchedule, z: np.ndarray) -> np.ndarray:
    """F^r / F on a grid; singular points are reported as inf."""
    ideal = np.asarray(filter_value(spec.with_pulse_model(PulseModel.IDEAL), schedule, z), dtype=float)
    finite = np.asarray(filter_value(spec.with_pulse_model(PulseModel.FINITE_WIDTH), schedule, z), dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(ideal > 0, finite / ideal, np.nan)
    floor = zero_floor(spec, schedule)
    for i in np.flatnonzero(~(ideal > floor)):
        value = ratio_finite_ideal(spec, schedule, float(z[i]))
        ratio[i] = math.inf if isinstance(value, SingularityMarker) else value
    return ratio


def filter_table(spec: FilterSpec, schedule: PulseSchedule, grid: FrequencyGrid,
                 ratio: bool = False, T: Optional[float] = None) -> pd.DataFrame:
    """
    Tabulate F and F/z^2 on a grid. With a duration T the grid holds angular
    frequencies omega, z = omega T, and F_modified is F/omega^2.
    """
    if T is None:
        z = grid.values
        F = np.asarray(filter_value(spec, schedule, z), dtype=float)
        table = pd.DataFrame({'z': z, 'F': F, 'F_modified': F / z ** 2})
    else:
        if not T > 0:
            raise ValueError(f"T must be positive, got {T}")
        omega = grid.values
        z = omega * T
        F = np.asarray(filter_value(spec, schedule, z), dtype=float)
        table = pd.DataFrame({'omega': omega, 'z': z, 'F': F, 'F_modified': F / omega ** 2})
    if ratio:
        table['ratio'] = ratio_column(spec, schedule, z)
    return table


def run_filter(schedule_path: str, label: str, grid: FrequencyGrid, out: str,
               ratio: bool = False, T: Optional[float] = None) -> pd.DataFrame:
    """
    Evaluate one filter of a stored schedule on a grid and write z,F,F_modified
    (and ratio) as CSV. A duration T switches the grid to physical frequencies
    and prepends an omega column.

    Raises:
        FilterSpecError: for an unknown label or one that does not fit the schedule
        PathValidationError: if an input or output path fails validation
    """
    spec = parse_filter_label(label)
    schedule = _load_schedule_checked(schedule_path)
    spec.validate(schedule.num_qubits)
    try:
        validated_out = validate_table_output(out)
        logger.info(f"Filter table output: {sanitize_path_for_logging(str(validated_out))}")
    except PathValidationError as e:
        logger.error(f"Filter output validation failed: {str(e)}")
        raise

    table = filter_table(spec, schedule, grid, ratio=ratio, T=T)
    table.to_csv(str(validated_out), index=False, float_format='%.17g', lineterminator='\n')
    logger.info(f"Wrote {len(table)} rows of {filter_label(spec)}")
    return table


# ===================================== SWEEP =============================================================

def run_sweep(config_path: Optional[str], out: str, jobs: Optional[int] = None,
              xlsx: Optional[str] = None, preset: Optional[str] = None) -> List[SweepRow]:
    """
    Run a factor sweep from a JSON config (or a named sweep preset) and
    write the CSV table, plus an optional workbook.

    Raises:
        ConfigValidationError: for an invalid or empty config
        PathValidationError: if a path fails validation
        KeyError: for an unknown sweep preset
    """
    try:
        validated_config = validate_config_input(config_path) if config_path else None
        validated_out = validate_table_output(out)
        validated_xlsx = validate_workbook_output(xlsx) if xlsx else None
        if validated_config is not None:
            logger.info(f"Sweep config: {sanitize_path_for_logging(str(validated_config))}")
    except PathValidationError as e:
        logger.error(f"Sweep path validation failed: {str(e)}")
        raise

    if validated_config is not None:
        config = load_sweep_config(str(validated_config))
    elif preset:
        config = SweepConfig.from_dict(sweep_document(preset))
    else:
        raise ConfigValidationError(["sweep needs --config or --preset"])
    rows = factor_sweep(config, jobs=jobs)
    write_sweep_csv(rows, str(validated_out))
    if validated_xlsx is not None:
        write_sweep_workbook(rows, str(validated_xlsx))
    return rows


# ===================================== DIAGNOSE ==========================================================

def _element_specs(schedule: PulseSchedule, topology: Topology,
                   labels: Optional[Sequence[str]]) -> List[FilterSpec]:
    if labels:
        specs = [parse_filter_label(label) for label in labels]
        for spec in specs:
            spec.validate(schedule.num_qubits)
        return specs
    size = 2 ** schedule.num_qubits
    return [FilterSpec(m, n, topology) for n in range(size) for m in range(n + 1, size)]


def diagnose_schedule(schedule: PulseSchedule, topology: Topology = Topology.COMMON,
                      labels: Optional[Sequence[str]] = None,
                      scan_grid: Optional[FrequencyGrid] = None) -> DiagnosticReport:
    """
    Rolloff, spectral peak, DFS map and singular points of a schedule.
    PoorFit and AmbiguousPeak become report warnings.
    """
    topology = Topology(topology)
    report = create_diagnostic_report()
    report.start_processing()
    report.set_metadata(schedule=schedule.describe(), scheme=schedule.scheme.value,
                        pulse_counts=schedule.pulse_counts, total_duration=schedule.total_duration,
                        pulse_width=schedule.pulse_width, topology=topology.value)

    dfs = dfs_check(schedule, topology)
    report.add_section("dfs", {filter_label(FilterSpec(n, m, topology)): ok for (m, n), ok in dfs.items()})

    scan_grid = scan_grid or grid_from_preset('standard')
    for spec in _element_specs(schedule, topology, labels):
        label = filter_label(spec)
        if dfs.get((min(spec.m, spec.n), max(spec.m, spec.n))) and spec.topology is topology:
            report.add_entry('rolloff', label, None)
            report.add_entry('spectral_peak', label, None)
            report.add_warning(f"{label}: protected element, filter vanishes")
            continue

        try:
            fit = measure_rolloff(spec, schedule)
            report.add_entry('rolloff', label, {
                'db_per_octave': fit.db_per_octave, 'filter_order': fit.filter_order,
                'fit_band': fit.fit_band, 'r_squared': fit.r_squared,
            })
        except PoorFit as e:
            report.add_entry('rolloff', label, None)
            report.add_warning(f"{label}: rolloff fit rejected: {e}")

        try:
            report.add_entry('spectral_peak', label, locate_spectral_peak(spec, schedule))
        except (AmbiguousPeak, ValueError) as e:
            report.add_entry('spectral_peak', label, None)
            report.add_warning(f"{label}: spectral peak not located: {e}")

        if schedule.pulse_width > 0:
            markers = scan_singularities(spec, schedule, scan_grid)
            report.add_entry('singularities', label,
                             [{'z': finite_or_none(m.z), 'kind': m.kind, 'growth': finite_or_none(m.growth),
                               'family': m.family}
                              for m in markers])

    if schedule.scheme is Scheme.SDD and schedule.pulse_width > 0:
        D = schedule.sdd_pulses
        k_max = int(scan_grid.values[-1] // (4 * D * math.pi))
        if k_max >= 1:
            report.add_section('predicted_singularities', sdd_singularity_grid(D, k_max))
    report.end_processing()
    return report


def run_diagnose(schedule_path: str, out: str, topology: str = 'common',
                 labels: Optional[Sequence[str]] = None,
                 grid: Optional[FrequencyGrid] = None) -> DiagnosticReport:
    """
    Diagnose a stored schedule and write the JSON report.

    Raises:
        PathValidationError: if a path fails validation
        OSError: if the report cannot be written
    """
    schedule = _load_schedule_checked(schedule_path)
    try:
        validated_out = validate_report_output(out)
        logger.info(f"Diagnose output: {sanitize_path_for_logging(str(validated_out))}")
    except PathValidationError as e:
        logger.error(f"Diagnose output validation failed: {str(e)}")
        raise

    report = diagnose_schedule(schedule, Topology(topology), labels, grid)
    if not report.write_json(str(validated_out)):
        raise OSError(f"could not write {sanitize_path_for_logging(str(validated_out))}")
    return report
