"""
Figure-level diagnostics of pulse schedules.

  - rolloff: least-squares slope of 10 log10 F against log2 z in the
    low-frequency power-law band (dB per octave, filter order = dB / 6.0206);
  - spectral peak: maximum of the log-frequency density z * F / z^2;
  - DFS check: which coherence elements a schedule leaves untouched;
  - factor sweeps: factor I over NUDD layouts and their pulse-matched SDD
    partners, written as CSV tables.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from config_DF import get_numerics_config, set_numerics_config
from filters import (FilterSpec, FilterSpecError, Topology, filter_value, modified_filter,
                     parse_filter_label)
from presets import grid_from_preset
from sampling import FrequencyGrid, log_grid
from sequences import (NuddLevelCounts, PulseSchedule, Scheme, ScheduleError, nudd_schedule,
                       sdd_pairing, sdd_schedule)
from spectra import DivergentIntegral, factor_I

logger = logging.getLogger(__name__)

# dB per octave of F for each unit of filter order: 20 log10(2)
DB_PER_ORDER = 20.0 * math.log10(2.0)
# Default rolloff band ends where F first reaches this fraction of its peak
ROLLOFF_PEAK_FRACTION = 1e-6
ROLLOFF_BAND_DECADES = 2.0
ROLLOFF_MIN_POINTS = 8
# Relative drift of the local log-log slope that ends the power-law regime
ROLLOFF_SLOPE_DRIFT = 0.01
PEAK_POINTS_PER_DECADE = 2000

SWEEP_CSV_COLUMNS = ['scheme', 'counts', 'filter', 'alpha', 'I', 'converged']
SWEEP_KEYS = {'nudd', 'sdd', 'qubits', 'pair_sdd', 'filters', 'alphas', 'T', 'pulse_width', 'tolerance'}


class PoorFit(Exception):
    """Raised when the rolloff band is not a clean power law."""

    def __init__(self, message: str, fit: 'RolloffFit' = None):
        super().__init__(message)
        self.fit = fit


class AmbiguousPeak(Exception):
    """Raised when two lobes of the spectral density are within the ambiguity margin."""

    def __init__(self, message: str, positions: Sequence[float] = ()):
        super().__init__(message)
        self.positions = list(positions)


class ConfigValidationError(Exception):
    """Raised once with every problem found in a sweep configuration."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid sweep configuration:\n  " + "\n  ".join(self.problems))


def _curve_arrays(z, F) -> Tuple[np.ndarray, np.ndarray]:
    z = z.values if isinstance(z, FrequencyGrid) else np.asarray(z, dtype=float)
    F = np.asarray(F, dtype=float)
    if z.shape != F.shape or z.ndim != 1:
        raise ValueError("curve needs matching one-dimensional z and F arrays")
    return z, F


# ============================================================================
# Rolloff
# ============================================================================

@dataclass(frozen=True)
class RolloffFit:
    """Low-frequency steepness of a filter curve."""
    db_per_octave: float
    fit_band: Tuple[float, float]
    r_squared: float
    points: int = 0

    @property
    def filter_order(self) -> float:
        return self.db_per_octave / DB_PER_ORDER


def default_rolloff_band(z, F) -> Tuple[float, float]:
    """
    Two decades ending where F first reaches 1e-6 of its peak, or earlier
    where the local log-log slope drifts from its low-end value by more
    than 1%. The start is clipped to the grid.

    Raises:
        PoorFit: if the curve has no positive values or the band holds
            fewer than 8 grid points
    """
    z, F = _curve_arrays(z, F)
    peak = float(np.max(F)) if F.size else 0.0
    if not peak > 0:
        raise PoorFit("filter curve has no positive values")
    end = int(np.argmax(F >= ROLLOFF_PEAK_FRACTION * peak))
    z_end = z[end]

    head = slice(0, end + 1)
    positive = F[head] > 0
    if positive.sum() >= 4:
        log_z = np.log(z[head][positive])
        slopes = np.diff(np.log(F[head][positive])) / np.diff(log_z)
        reference = float(np.median(slopes[:3]))
        drift = np.flatnonzero(np.abs(slopes - reference) > ROLLOFF_SLOPE_DRIFT * abs(reference))
        if drift.size:
            z_end = min(z_end, float(np.exp(log_z[drift[0]])))

    z_start = max(z[0], z_end / 10 ** ROLLOFF_BAND_DECADES)
    inside = np.count_nonzero((z >= z_start) & (z <= z_end))
    if inside < ROLLOFF_MIN_POINTS:
        raise PoorFit(f"rolloff band [{z_start:.4g}, {z_end:.4g}] holds only {inside} grid points")
    return float(z_start), float(z_end)


def rolloff_db_per_octave(z, F, band: Tuple[float, float] = None) -> RolloffFit:
    """
    Least-squares slope of 10 log10 F against log2 z over `band`.

    Raises:
        PoorFit: when the band holds fewer than 8 points, F is not positive
            throughout it, or r^2 falls below the configured floor
    """
    z, F = _curve_arrays(z, F)
    band = band or default_rolloff_band(z, F)
    inside = (z >= band[0]) & (z <= band[1])
    if np.count_nonzero(inside) < ROLLOFF_MIN_POINTS:
        raise PoorFit(f"rolloff band [{band[0]:.4g}, {band[1]:.4g}] needs at least {ROLLOFF_MIN_POINTS} points")
    if np.any(F[inside] <= 0):
        raise PoorFit("filter vanishes inside the rolloff band")

    result = stats.linregress(np.log2(z[inside]), 10.0 * np.log10(F[inside]))
    fit = RolloffFit(db_per_octave=float(result.slope), fit_band=(float(band[0]), float(band[1])),
                     r_squared=float(min(1.0, result.rvalue ** 2)), points=int(np.count_nonzero(inside)))
    floor = get_numerics_config().rolloff_min_r_squared
    if fit.r_squared < floor:
        raise PoorFit(f"rolloff fit r^2 = {fit.r_squared:.6f} below {floor}; "
                      f"band likely leaves the power-law regime", fit)
    logger.debug(f"Rolloff {fit.db_per_octave:.3f} dB/octave over {fit.fit_band} (r^2 {fit.r_squared:.6f})")
    return fit


def measure_rolloff(spec: FilterSpec, schedule: PulseSchedule,
                    grid: Union[FrequencyGrid, np.ndarray] = None) -> RolloffFit:
    """Rolloff of one filter on the 'rolloff' grid preset (or a given grid)."""
    grid = grid if grid is not None else grid_from_preset('rolloff')
    z = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    return rolloff_db_per_octave(z, filter_value(spec, schedule, z))


# ============================================================================
# Spectral peak
# ============================================================================

def _quadratic_vertex(u: np.ndarray, v: np.ndarray) -> float:
    """Vertex of the parabola through three points."""
    a, b, _ = np.polyfit(u, v, 2)
    if a >= 0:
        return float(u[1])
    return float(np.clip(-b / (2 * a), u[0], u[2]))


def spectral_peak(z, modified) -> float:
    """
    Peak of the log-frequency density z * F(z) / z^2 of a modified filter curve,
    refined by a quadratic through the top grid point and its neighbours in log z.

    Raises:
        AmbiguousPeak: when another lobe comes within the configured margin of the maximum
        ValueError: when the maximum sits on the edge of the grid
    """
    z, modified = _curve_arrays(z, modified)
    density = z * modified
    top = int(np.argmax(density))
    if top == 0 or top == z.size - 1:
        raise ValueError(f"density maximum at the grid edge z={z[top]:.6g}; widen the grid")

    margin = get_numerics_config().peak_ambiguity
    interior = np.arange(1, z.size - 1)
    lobes = interior[(density[interior] >= density[interior - 1]) & (density[interior] > density[interior + 1])]
    rivals = [float(z[i]) for i in lobes
              if i != top and density[i] >= (1 - margin) * density[top]]
    if rivals:
        positions = [float(z[top])] + rivals
        logger.warning(f"Ambiguous spectral peak: lobes at {positions}")
        raise AmbiguousPeak(f"{len(positions)} lobes within {margin:.0%} of the maximum", positions)

    u = np.log(z[top - 1:top + 2])
    return float(np.exp(_quadratic_vertex(u, density[top - 1:top + 2])))


def locate_spectral_peak(spec: FilterSpec, schedule: PulseSchedule,
                         z_range: Tuple[float, float] = None,
                         points_per_decade: int = PEAK_POINTS_PER_DECADE) -> float:
    """
    spectral_peak on a dense log grid; the default range (1e-2, 8 pi (max D + 1))
    covers the first dominant lobe of every qubit.
    """
    if z_range is None:
        z_range = (1e-2, 8 * math.pi * (max(schedule.pulse_counts) + 1))
    z = log_grid(z_range[0], z_range[1], points_per_decade).values
    return spectral_peak(z, modified_filter(spec, schedule, z))


# ============================================================================
# Decoherence-free subspace
# ============================================================================

def dfs_check(schedule: PulseSchedule, topology: Topology = Topology.COMMON,
              grid: Union[FrequencyGrid, np.ndarray] = None) -> Dict[Tuple[int, int], bool]:
    """
    For every pair m < n of basis indices: True when max F_mn over the grid
    stays below 1e-18 (2 sum D + 2N)^2, i.e. the element is protected.
    Independent reservoirs protect an element only on grids where every
    differing qubit's sampling function vanishes.
    """
    topology = Topology(topology)
    grid = grid if grid is not None else grid_from_preset('standard')
    z = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    config = get_numerics_config()
    threshold = config.dfs_factor * (2 * schedule.total_pulses + 2 * schedule.num_qubits) ** 2
    size = 2 ** schedule.num_qubits
    report: Dict[Tuple[int, int], bool] = {}
    for m in range(size):
        for n in range(m + 1, size):
            F = np.asarray(filter_value(FilterSpec(m, n, topology), schedule, z), dtype=float)
            report[(m, n)] = bool(np.max(F) < threshold)
    protected = [pair for pair, ok in report.items() if ok]
    logger.info(f"DFS check of {schedule.describe()} ({topology.value}): protected {protected}")
    return report


# ============================================================================
# Factor sweeps
# ============================================================================

@dataclass(frozen=True)
class SweepRow:
    """One factor I evaluation of a sweep."""
    scheme: str
    counts: str
    filter: str
    alpha: float
    I: float
    converged: bool
    total_pulses: int = 0


@dataclass
class SweepConfig:
    """
    Validated sweep document.

    nudd holds level lists such as "2,2"; with pair_sdd each is followed by
    the SDD schedule of equal total pulse number and duration. sdd holds
    extra per-qubit SDD counts on `qubits` qubits.
    """
    nudd: List[NuddLevelCounts] = field(default_factory=list)
    sdd: List[int] = field(default_factory=list)
    qubits: int = 2
    pair_sdd: bool = True
    filters: List[str] = field(default_factory=list)
    alphas: List[float] = field(default_factory=list)
    T: float = 1.0
    pulse_width: float = 0.0
    tolerance: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Dict) -> 'SweepConfig':
        """
        Raises:
            ConfigValidationError: listing every problem in the document
        """
        if not isinstance(data, dict):
            raise ConfigValidationError(["sweep configuration must be a JSON object"])
        problems: List[str] = []
        unknown = sorted(set(data) - SWEEP_KEYS)
        if unknown:
            problems.append(f"unknown keys: {', '.join(unknown)}")

        nudd: List[NuddLevelCounts] = []
        for entry in data.get('nudd', []) or []:
            try:
                text = entry if isinstance(entry, str) else ",".join(str(v) for v in entry)
                nudd.append(NuddLevelCounts.parse(text))
            except (ValueError, TypeError, ScheduleError) as e:
                problems.append(f"nudd entry {entry!r}: {e}")

        sdd: List[int] = []
        for entry in data.get('sdd', []) or []:
            if isinstance(entry, bool) or not isinstance(entry, int) or entry <= 0 or entry % 2:
                problems.append(f"sdd entry {entry!r}: D must be even and positive")
            else:
                sdd.append(entry)

        qubits = data.get('qubits', 2)
        if isinstance(qubits, bool) or not isinstance(qubits, int) or qubits < 1:
            problems.append(f"qubits must be a positive integer, got {qubits!r}")
            qubits = 2

        if not nudd and not sdd and not any(p.startswith('nudd entry') or p.startswith('sdd entry')
                                            for p in problems):
            problems.append("configuration lists no schedules (need 'nudd' or 'sdd')")

        filters = [str(f) for f in data.get('filters', []) or []]
        if not filters:
            problems.append("'filters' must list at least one filter label")
        for label in filters:
            try:
                spec = parse_filter_label(label)
                if spec.is_trivial:
                    problems.append(f"filter {label!r} is a diagonal element")
            except FilterSpecError as e:
                problems.append(str(e))

        alphas: List[float] = []
        for value in data.get('alphas', []) or []:
            try:
                alpha = float(value)
            except (TypeError, ValueError):
                problems.append(f"alpha {value!r} is not a number")
                continue
            if not alpha > 0:
                problems.append(f"alpha must be positive, got {value!r}")
            alphas.append(alpha)
        if not data.get('alphas'):
            problems.append("'alphas' must list at least one exponent")

        T = data.get('T', 1.0)
        pulse_width = data.get('pulse_width', 0.0)
        tolerance = data.get('tolerance')
        if not isinstance(T, (int, float)) or not T > 0:
            problems.append(f"T must be positive, got {T!r}")
        if not isinstance(pulse_width, (int, float)) or pulse_width < 0:
            problems.append(f"pulse_width must be nonnegative, got {pulse_width!r}")
        if tolerance is not None and (not isinstance(tolerance, (int, float)) or not tolerance > 0):
            problems.append(f"tolerance must be positive, got {tolerance!r}")

        config = cls(nudd=nudd, sdd=sdd, qubits=qubits, pair_sdd=bool(data.get('pair_sdd', True)),
                     filters=filters, alphas=alphas, T=T, pulse_width=pulse_width, tolerance=tolerance)
        if not problems:
            try:
                config.schedules()
            except ScheduleError as e:
                problems.append(str(e))
        if problems:
            raise ConfigValidationError(problems)
        return config

    def schedules(self) -> List[Tuple[str, str, PulseSchedule]]:
        """(scheme, counts, schedule) in row order: each NUDD layout, then its SDD partner."""
        built: List[Tuple[str, str, PulseSchedule]] = []
        for counts in self.nudd:
            built.append((Scheme.NUDD.value, str(counts), nudd_schedule(counts, self.T, self.pulse_width)))
            if self.pair_sdd:
                D = sdd_pairing(counts)
                built.append(self._sdd_entry(counts.num_qubits, D))
        for D in self.sdd:
            built.append(self._sdd_entry(self.qubits, D))
        return built

    def _sdd_entry(self, N: int, D: int) -> Tuple[str, str, PulseSchedule]:
        return Scheme.SDD.value, ",".join([str(D)] * N), sdd_schedule(N, D, self.T, self.pulse_width)


def load_sweep_config(path: str) -> SweepConfig:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigValidationError([f"not valid JSON: {e}"])
    return SweepConfig.from_dict(data)


def _evaluate_row(job: Tuple) -> SweepRow:
    scheme, counts, schedule, label, alpha, tol = job
    spec = parse_filter_label(label)
    try:
        result = factor_I(spec, schedule, alpha, tol)
        value, converged = result.value, result.converged
    except DivergentIntegral as e:
        logger.warning(f"{scheme} ({counts}) {label} alpha={alpha:g}: {e}")
        value, converged = math.inf, False
    logger.info(f"Sweep row {scheme} ({counts}) {label} alpha={alpha:g}: I={value:.6g}")
    return SweepRow(scheme=scheme, counts=counts, filter=label, alpha=alpha, I=value,
                    converged=converged, total_pulses=schedule.total_pulses)


def factor_sweep(config: SweepConfig, jobs: int = None) -> List[SweepRow]:
    """
    Factor I for every (schedule, filter, alpha) of the config. Divergent
    rows carry I = inf and converged = False; row order does not depend on
    the number of worker processes.
    """
    numerics = get_numerics_config()
    jobs = jobs or numerics.jobs
    work = [(scheme, counts, schedule, label, alpha, config.tolerance)
            for scheme, counts, schedule in config.schedules()
            for label in config.filters
            for alpha in config.alphas]
    logger.info(f"Factor sweep: {len(work)} rows on {jobs} worker(s)")
    if jobs <= 1:
        return [_evaluate_row(job) for job in work]
    with ProcessPoolExecutor(max_workers=jobs, initializer=set_numerics_config,
                             initargs=(numerics,)) as executor:
        return list(executor.map(_evaluate_row, work))


def sweep_dataframe(rows: Sequence[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [[r.scheme, r.counts, r.filter, r.alpha, r.I, 'true' if r.converged else 'false'] for r in rows],
        columns=SWEEP_CSV_COLUMNS,
    )


def write_sweep_csv(rows: Sequence[SweepRow], path: str) -> None:
    """scheme,counts,filter,alpha,I,converged with 17 significant digits."""
    sweep_dataframe(rows).to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    logger.info(f"Wrote {len(rows)} sweep rows")


def read_sweep_csv(path: str) -> List[SweepRow]:
    frame = pd.read_csv(path, dtype={'scheme': str, 'counts': str, 'filter': str, 'converged': str})
    if list(frame.columns) != SWEEP_CSV_COLUMNS:
        raise ValueError(f"unexpected sweep columns {list(frame.columns)}")
    return [
        SweepRow(scheme=r.scheme, counts=r.counts, filter=r.filter, alpha=float(r.alpha), I=float(r.I),
                 converged=str(r.converged).strip().lower() == 'true',
                 total_pulses=_total_pulses(r.scheme, r.counts))
        for r in frame.itertuples(index=False)
    ]


def _total_pulses(scheme: str, counts: str) -> int:
    if scheme == Scheme.NUDD.value:
        return NuddLevelCounts.parse(counts).total_pulses
    return sum(int(v) for v in counts.split(','))
