"""
Sampling functions f^(j)(z) of single qubits, z = omega T.

    f(z) = 1 + (-1)^(D+1) e^{-iz} + 2 sum_d (-1)^d e^{-i z T_d / T}

is the defining finite sum. SDD and NUDD closed forms are provided and
agree with it; finite-width pulses scale the interior sum by
cos(z tau / 2T). Where the double-precision sum has cancelled to below
`precision_threshold * (2D + 2)` the value is recomputed with mpmath at a
working precision chosen from the magnitude of the result.

Every evaluator accepts a scalar z (returns SamplingValue) or an array
(returns a complex ndarray of the same shape).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy import stats

from config_DF import get_numerics_config
from sequences import NuddLevelCounts, PulseSchedule, Scheme, nudd_boundaries, udd_times

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Largest (number of z values) x (number of pulses) evaluated in one block
CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class SamplingValue:
    """Complex value of one qubit's sampling function at one frequency."""
    re: float
    im: float

    @classmethod
    def from_complex(cls, value: complex) -> 'SamplingValue':
        return cls(float(np.real(value)), float(np.imag(value)))

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return abs(self.value)

    def conjugate(self) -> 'SamplingValue':
        return SamplingValue(self.re, -self.im)


def sampling_result(values: np.ndarray, z) -> Union[SamplingValue, np.ndarray]:
    """SamplingValue for a scalar z, the array itself otherwise."""
    if np.ndim(z) == 0:
        return SamplingValue.from_complex(complex(values.reshape(-1)[0]))
    return values


# ============================================================================
# Frequency grids
# ============================================================================

@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing positive dimensionless frequencies."""
    values: np.ndarray
    spacing_tag: str = 'custom'

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise ValueError("frequency grid is empty")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("frequency grid values must be finite and positive")
        if np.any(np.diff(values) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if self.spacing_tag not in ('linear', 'logarithmic', 'custom'):
            raise ValueError(f"unknown spacing {self.spacing_tag!r}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def within(self, z_min: float, z_max: float) -> np.ndarray:
        return self.values[(self.values >= z_min) & (self.values <= z_max)]


def make_grid(z_min: float, z_max: float, points: int = None, step: float = None,
              spacing: str = 'logarithmic') -> FrequencyGrid:
    """
    Linear or logarithmic grid on [z_min, z_max].

    For logarithmic spacing `points` is the total count; for linear spacing
    either `points` or `step` may be given.
    """
    if not 0 < z_min < z_max:
        raise ValueError(f"need 0 < z_min < z_max, got [{z_min}, {z_max}]")
    if spacing == 'logarithmic':
        if not points or points < 2:
            raise ValueError("logarithmic grid needs at least 2 points")
        return FrequencyGrid(np.geomspace(z_min, z_max, int(points)), 'logarithmic')
    if spacing == 'linear':
        if step is not None:
            points = int(round((z_max - z_min) / step)) + 1
        if not points or points < 2:
            raise ValueError("linear grid needs a step or at least 2 points")
        return FrequencyGrid(np.linspace(z_min, z_max, int(points)), 'linear')
    raise ValueError(f"unknown spacing {spacing!r}")


def log_grid(z_min: float, z_max: float, points_per_decade: int) -> FrequencyGrid:
    decades = np.log10(z_max / z_min)
    return make_grid(z_min, z_max, points=int(round(decades * points_per_decade)) + 1)


def concatenate_grids(*grids: FrequencyGrid) -> FrequencyGrid:
    """Union of grids; values repeated at the joins are dropped."""
    values = np.unique(np.concatenate([g.values for g in grids]))
    return FrequencyGrid(values, 'custom')


# ============================================================================
# Double-precision evaluators
# ============================================================================

def _generic_sum(fractions: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Generic sum over pulse fractions; z is 1-D."""
    D = fractions.size
    boundary = 1.0 + (-1.0) ** (D + 1) * np.exp(-1j * z)
    if D == 0:
        return boundary
    signs = np.where(np.arange(1, D + 1) % 2 == 0, 2.0, -2.0)
    out = np.empty(z.shape, dtype=complex)
    chunk = max(1, CHUNK_ELEMENTS // D)
    for start in range(0, z.size, chunk):
        zc = z[start:start + chunk]
        out[start:start + chunk] = np.exp(-1j * np.outer(zc, fractions)) @ signs
    return boundary + out


def sampling_generic(times: Sequence[float], T: float, z: ArrayLike):
    """
    1 + (-1)^(D+1) e^{-iz} + 2 sum_{d=1}^{D} (-1)^d e^{-i z T_d / T}.

    Exact finite sum in double precision; negative z gives the conjugate.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    fractions = np.asarray(times, dtype=float) / T
    values = _generic_sum(fractions, zs).reshape(np.shape(z))
    return sampling_result(values, z)


def _sdd_closed(D: int, z: np.ndarray) -> np.ndarray:
    half = 0.5 * z
    return (-4j * np.exp(-1j * half) * np.sin(half) * np.sin(z / (4 * D)) ** 2
            / np.cos(z / (2 * D)))


def sampling_sdd_closed(D: int, z: ArrayLike):
    """
    -4i e^{-iz/2} sin(z/2) sin^2(z/4D) / cos(z/2D).

    Near the removable points z = (2k+1) D pi, where |cos(z/2D)| falls under
    the configured tolerance, the generic sum over the SDD times is used.
    """
    if D <= 0 or D % 2:
        raise ValueError(f"SDD closed form needs a positive even D, got {D}")
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    tolerance = get_numerics_config().sdd_removable_tolerance
    removable = np.abs(np.cos(zs / (2 * D))) < tolerance
    with np.errstate(divide='ignore', invalid='ignore'):
        values = _sdd_closed(D, zs)
    if np.any(removable):
        d = np.arange(1, D + 1)
        values[removable] = _generic_sum((2 * d - 1) / (2 * D), zs[removable])
    return sampling_result(values.reshape(np.shape(z)), z)


def _nudd_intervals(counts: NuddLevelCounts, level: int, T: float) -> Tuple[np.ndarray, np.ndarray]:
    """Start offsets and lengths (units of T) of the intervals level `level` fills."""
    times_by_level = {}
    for n in range(counts.num_qubits - 1, level, -1):
        boundaries = nudd_boundaries(times_by_level, n, T)
        times_by_level[n] = [t for a, b in zip(boundaries, boundaries[1:])
                             for t in udd_times(counts.level(n), a, b)]
    edges = np.asarray(nudd_boundaries(times_by_level, level, T)) / T
    return edges[:-1], np.diff(edges)


def _udd_kernel(L: int, u: np.ndarray) -> np.ndarray:
    """e^{-iu/2} sum_{l=-L-1}^{L} (-1)^l e^{i (u/2) cos(l pi / (L+1))}."""
    l = np.arange(-L - 1, L + 1)
    signs = np.where(l % 2 == 0, 1.0, -1.0)
    cosines = np.cos(l * np.pi / (L + 1))
    half = 0.5 * u
    return np.exp(-1j * half) * (np.exp(1j * np.multiply.outer(half, cosines)) @ signs)


def sampling_nudd_closed(counts: NuddLevelCounts, level: int, T: float, z: ArrayLike):
    """
    Level-wise NUDD form: sum over the intervals (a_k, a_k + tau_k) bounded by
    all outer pulses of e^{-iz a_k/T} g_{L_n}(z tau_k / T), g being the UDD
    kernel of the level. The outermost level has one interval [0, T].
    """
    if not isinstance(counts, NuddLevelCounts):
        counts = NuddLevelCounts(tuple(counts))
    if not 0 <= level < counts.num_qubits:
        raise ValueError(f"level {level} outside 0..{counts.num_qubits - 1}")
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    starts, lengths = _nudd_intervals(counts, level, T)
    L = counts.level(level)
    values = np.zeros(zs.shape, dtype=complex)
    chunk = max(1, CHUNK_ELEMENTS // max(1, (2 * L + 2)))
    for a, tau in zip(starts, lengths):
        for s in range(0, zs.size, chunk):
            zc = zs[s:s + chunk]
            values[s:s + chunk] += np.exp(-1j * zc * a) * _udd_kernel(L, zc * tau)
    return sampling_result(values.reshape(np.shape(z)), z)


def finite_width_boundary(D: int, z: np.ndarray) -> np.ndarray:
    """Boundary terms 1 + (-1)^(D+1) e^{-iz} that the pulse-width factor leaves untouched."""
    return 1.0 + (-1.0) ** (D + 1) * np.exp(-1j * z)


def apply_finite_width(f: np.ndarray, D: int, width_fraction: float, z: np.ndarray) -> np.ndarray:
    """c f + (1 - c) (1 + (-1)^(D+1) e^{-iz}) with c = cos(z tau / 2T)."""
    if width_fraction == 0:
        return f
    x = z * width_fraction
    c = np.cos(0.5 * x)
    one_minus_c = 2.0 * np.sin(0.25 * x) ** 2
    return c * f + one_minus_c * finite_width_boundary(D, z)


def sampling_finite_width(schedule: PulseSchedule, qubit: int, z: ArrayLike):
    """
    Sampling function with rectangular pulses of the schedule's width: the
    interior sum is multiplied by cos(z tau / 2T), the boundary terms stay.
    Identical to the ideal value when the width is zero.
    """
    return sampling_value(schedule, qubit, z, finite_width=True)


# ============================================================================
# Extended precision
# ============================================================================

@lru_cache(maxsize=256)
def _precise_fractions(schedule: PulseSchedule, qubit: int, dps: int) -> Tuple:
    """Pulse fractions as mpf; SDD and NUDD times are regenerated at this precision."""
    with mpmath.workdps(dps):
        if schedule.scheme is Scheme.SDD:
            D = schedule.sdd_pulses
            return tuple(mpmath.mpf(2 * d - 1) / (2 * D) for d in range(1, D + 1))
        if schedule.scheme is Scheme.NUDD:
            counts = schedule.level_counts
            level = schedule.level_of_qubit(qubit)
            edges = [mpmath.mpf(0), mpmath.mpf(1)]
            for n in range(counts.num_qubits - 1, level - 1, -1):
                L = counts.level(n)
                layer = []
                for a, b in zip(edges, edges[1:]):
                    for l in range(1, L + 1):
                        layer.append(a + (b - a) * mpmath.sin(l * mpmath.pi / (2 * L + 2)) ** 2)
                if n == level:
                    return tuple(layer)
                edges = sorted(edges + layer)
            return ()
        T = mpmath.mpf(schedule.total_duration)
        return tuple(mpmath.mpf(t) / T for t in schedule.times[qubit])


@lru_cache(maxsize=65536)
def _precise_mp(schedule: PulseSchedule, qubit: int, z: float) -> mpmath.mpc:
    """The defining sum at doubling precision until the cancellation is resolved."""
    config = get_numerics_config()
    D = schedule.pulse_count(qubit)
    scale = 2 * D + 2
    dps = config.initial_digits
    while True:
        fractions = _precise_fractions(schedule, qubit, dps)
        with mpmath.workdps(dps):
            zm = mpmath.mpf(z)
            total = 1 + (-1) ** (D + 1) * mpmath.expj(-zm)
            for d, x in enumerate(fractions, start=1):
                term = mpmath.expj(-zm * x)
                total += 2 * term if d % 2 == 0 else -2 * term
            magnitude = abs(total)
            accepted = magnitude / scale > mpmath.mpf(10) ** (-(dps - 20))
        if accepted:
            return total
        if dps >= config.max_digits:
            logger.warning(f"Sampling value at z={z!r} still unresolved at {dps} digits, "
                           f"returning {mpmath.nstr(total, 6)}")
            return total
        dps = min(2 * dps, config.max_digits)


def _precise_value(schedule: PulseSchedule, qubit: int, z: float) -> complex:
    return complex(_precise_mp(schedule, qubit, z))


def sampling_precise(schedule: PulseSchedule, qubit: int, z: ArrayLike):
    """Ideal sampling function evaluated with mpmath at adaptive precision."""
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    values = np.array([_precise_value(schedule, qubit, float(v)) for v in zs], dtype=complex)
    return sampling_result(values.reshape(np.shape(z)), z)


# ============================================================================
# Schedule-aware dispatch
# ============================================================================

def _double_values(schedule: PulseSchedule, qubit: int, zs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Double-precision values and the mask of points lost to cancellation."""
    D = schedule.pulse_count(qubit)
    if schedule.scheme is Scheme.SDD:
        # relative accuracy holds down to z -> 0, no precise fallback needed
        return sampling_sdd_closed(D, zs), np.zeros(zs.shape, dtype=bool)
    values = _generic_sum(schedule.fractions(qubit), zs)
    threshold = get_numerics_config().precision_threshold * (2 * D + 2)
    lost = (np.abs(values) < threshold) & (D > 0)
    return values, lost


def _ideal_values(schedule: PulseSchedule, qubit: int, zs: np.ndarray) -> np.ndarray:
    values, lost = _double_values(schedule, qubit, zs)
    if np.any(lost):
        values[lost] = sampling_precise(schedule, qubit, zs[lost])
    return values


def sampling_extended(schedule: PulseSchedule, qubit: int, z: ArrayLike,
                      finite_width: bool = False) -> List[mpmath.mpc]:
    """
    Sampling values as mpmath numbers, one per point of z.

    Where the double sum has cancelled, the extended-precision value is
    kept as is, so magnitudes below the smallest double stay nonzero.
    """
    if not 0 <= qubit < schedule.num_qubits:
        raise ValueError(f"qubit {qubit} outside 0..{schedule.num_qubits - 1}")
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    doubles, lost = _double_values(schedule, qubit, zs)
    values = [_precise_mp(schedule, qubit, float(zi)) if miss else mpmath.mpc(complex(v))
              for zi, v, miss in zip(zs, doubles, lost)]
    if not (finite_width and schedule.pulse_width > 0):
        return values
    D = schedule.pulse_count(qubit)
    sign = (-1) ** (D + 1)
    with mpmath.workdps(30):
        fraction = mpmath.mpf(schedule.pulse_width) / schedule.total_duration
        widened = []
        for zi, f in zip(zs, values):
            zm = mpmath.mpf(float(zi))
            c = mpmath.cos(zm * fraction / 2)
            one_minus_c = 2 * mpmath.sin(zm * fraction / 4) ** 2
            widened.append(c * f + one_minus_c * (1 + sign * mpmath.expj(-zm)))
    return widened


def sampling_value(schedule: PulseSchedule, qubit: int, z: ArrayLike, finite_width: bool = False):
    """
    Sampling function of one qubit of a schedule.

    SDD uses its closed form; other schemes use the defining sum with the
    extended-precision fallback. `finite_width` applies the schedule's pulse width.
    """
    if not 0 <= qubit < schedule.num_qubits:
        raise ValueError(f"qubit {qubit} outside 0..{schedule.num_qubits - 1}")
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    values = _ideal_values(schedule, qubit, zs)
    if finite_width and schedule.pulse_width > 0:
        values = apply_finite_width(values, schedule.pulse_count(qubit),
                                    schedule.pulse_width / schedule.total_duration, zs)
    return sampling_result(values.reshape(np.shape(z)), z)


def low_frequency_slope(schedule: PulseSchedule, qubit: int, band: Tuple[float, float] = None,
                        points: int = None) -> float:
    """Fitted exponent p of |f(z)| ~ z^p over a low-frequency band."""
    config = get_numerics_config()
    z_min, z_max = band or (config.slope_band_min, config.slope_band_max)
    z = np.geomspace(z_min, z_max, points or config.slope_points)
    magnitude = np.abs(sampling_value(schedule, qubit, z))
    if np.any(magnitude <= 0):
        raise ValueError(f"sampling function of qubit {qubit} vanishes inside the fit band")
    fit = stats.linregress(np.log(z), np.log(magnitude))
    return float(fit.slope)
