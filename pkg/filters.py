"""
Coherence-element filter functions.

    common:       F^c_mn = |sum_j (m_j - n_j) f^(j)|^2
    independent:  F^i_mn = sum_j |m_j - n_j| |f^(j)|^2

m_j is binary digit j of the basis index m (qubit 0 is the least
significant digit). Two-qubit labels 1..4 (|1> = up-up ... |4> = down-down,
up = 1) map to zero-based indices through TWO_QUBIT_LABELS, so F14 is
(m, n) = (3, 0) and F23 is (2, 1).
"""

import logging
import math
import re
from dataclasses import dataclass, replace
from enum import Enum as PyEnum
from typing import List, Optional, Tuple, Union

import mpmath
import numpy as np
from scipy import optimize

from config_DF import get_numerics_config
from sampling import ArrayLike, FrequencyGrid, sampling_extended, sampling_value
from sequences import PulseSchedule

logger = logging.getLogger(__name__)

# Two-qubit basis label -> zero-based index
TWO_QUBIT_LABELS = {1: 3, 2: 2, 3: 1, 4: 0}
INDEX_TO_LABEL = {index: label for label, index in TWO_QUBIT_LABELS.items()}

# Relative offsets at which F^r / F is sampled on approach to a candidate point
APPROACH_OFFSETS = (1e-7, 1e-8)
SCAN_APPROACH_OFFSETS = (1e-5, 1e-6)
GROWTH_FACTOR = 10.0
# Largest phase offset (radians) from a multiple of 2 pi for a periodic singular point
PERIODIC_PHASE_TOLERANCE = 1e-3
# Ideal filter values below (ZERO_FLOOR_FACTOR * scale)^2 count as zeros
ZERO_FLOOR_FACTOR = 1e-12


class FilterSpecError(Exception):
    """Raised for malformed filter labels or specs that do not fit a schedule."""
    pass


class Topology(str, PyEnum):
    """Reservoir topology."""
    COMMON = "common"
    INDEPENDENT = "independent"


class PulseModel(str, PyEnum):
    """Ideal (instantaneous) or finite-width pulses."""
    IDEAL = "ideal"
    FINITE_WIDTH = "finite_width"


@dataclass(frozen=True)
class FilterSpec:
    """Coherence element (m, n), reservoir topology and pulse model."""
    m: int
    n: int
    topology: Topology = Topology.COMMON
    pulse_model: PulseModel = PulseModel.IDEAL

    def __post_init__(self):
        object.__setattr__(self, 'topology', Topology(self.topology))
        object.__setattr__(self, 'pulse_model', PulseModel(self.pulse_model))
        if self.m < 0 or self.n < 0:
            raise FilterSpecError(f"basis indices must be nonnegative, got ({self.m}, {self.n})")

    def validate(self, num_qubits: int) -> None:
        limit = 2 ** num_qubits
        if self.m >= limit or self.n >= limit:
            raise FilterSpecError(
                f"basis indices ({self.m}, {self.n}) need more than {num_qubits} qubit(s)"
            )

    def digit_differences(self, num_qubits: int) -> np.ndarray:
        """m_j - n_j for j = 0..N-1."""
        self.validate(num_qubits)
        return np.array([((self.m >> j) & 1) - ((self.n >> j) & 1) for j in range(num_qubits)])

    @property
    def is_trivial(self) -> bool:
        return self.m == self.n

    @property
    def finite_width(self) -> bool:
        return self.pulse_model is PulseModel.FINITE_WIDTH

    def with_pulse_model(self, pulse_model: PulseModel) -> 'FilterSpec':
        return replace(self, pulse_model=PulseModel(pulse_model))

    @property
    def label(self) -> str:
        return filter_label(self)


_TWO_QUBIT_LABEL = re.compile(r'^F_?\{?([1-4])([1-4])\}?\^?\{?([ci])\}?(,r|r)?$', re.IGNORECASE)
_INDEX_LABEL = re.compile(r'^([ci]):(\d+),(\d+)(:r)?$', re.IGNORECASE)


def parse_filter_label(label: str) -> FilterSpec:
    """
    'F14c', 'F23^i', 'F14c,r' (two-qubit labels) or 'c:3,0' / 'i:5,2:r'
    (zero-based indices). A trailing r selects finite-width pulses.
    """
    text = str(label).strip().replace(' ', '')
    match = _TWO_QUBIT_LABEL.match(text)
    if match:
        m = TWO_QUBIT_LABELS[int(match.group(1))]
        n = TWO_QUBIT_LABELS[int(match.group(2))]
        topology = Topology.COMMON if match.group(3).lower() == 'c' else Topology.INDEPENDENT
        model = PulseModel.FINITE_WIDTH if match.group(4) else PulseModel.IDEAL
        return FilterSpec(m, n, topology, model)
    match = _INDEX_LABEL.match(text)
    if match:
        topology = Topology.COMMON if match.group(1).lower() == 'c' else Topology.INDEPENDENT
        model = PulseModel.FINITE_WIDTH if match.group(4) else PulseModel.IDEAL
        return FilterSpec(int(match.group(2)), int(match.group(3)), topology, model)
    raise FilterSpecError(f"unknown filter label {label!r}")


def filter_label(spec: FilterSpec) -> str:
    """Inverse of parse_filter_label; two-qubit label form when it exists."""
    suffix_r = spec.finite_width
    kind = 'c' if spec.topology is Topology.COMMON else 'i'
    if spec.m in INDEX_TO_LABEL and spec.n in INDEX_TO_LABEL:
        return f"F{INDEX_TO_LABEL[spec.m]}{INDEX_TO_LABEL[spec.n]}{kind}" + (",r" if suffix_r else "")
    return f"{kind}:{spec.m},{spec.n}" + (":r" if suffix_r else "")


# ============================================================================
# Filter evaluation
# ============================================================================

def _as_output(values: np.ndarray, z):
    return float(values.reshape(-1)[0]) if np.ndim(z) == 0 else values


def _filter_values(spec: FilterSpec, schedule: PulseSchedule, zs: np.ndarray,
                   finite_width: bool) -> np.ndarray:
    diffs = spec.digit_differences(schedule.num_qubits)
    if spec.topology is Topology.COMMON:
        amplitude = np.zeros(zs.shape, dtype=complex)
        for qubit, weight in enumerate(diffs):
            if weight:
                amplitude += weight * sampling_value(schedule, qubit, zs, finite_width=finite_width)
        return np.abs(amplitude) ** 2
    total = np.zeros(zs.shape, dtype=float)
    for qubit, weight in enumerate(diffs):
        if weight:
            total += abs(weight) * np.abs(sampling_value(schedule, qubit, zs, finite_width=finite_width)) ** 2
    return total


def filter_common(spec: FilterSpec, schedule: PulseSchedule, z: ArrayLike):
    """|sum_j (m_j - n_j) f^(j)(z)|^2."""
    if spec.topology is not Topology.COMMON:
        raise FilterSpecError(f"{spec.label} is not a common-reservoir filter")
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    return _as_output(_filter_values(spec, schedule, zs, spec.finite_width).reshape(np.shape(z)), z)


def filter_independent(spec: FilterSpec, schedule: PulseSchedule, z: ArrayLike):
    """sum_j |m_j - n_j| |f^(j)(z)|^2."""
    if spec.topology is not Topology.INDEPENDENT:
        raise FilterSpecError(f"{spec.label} is not an independent-reservoir filter")
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    return _as_output(_filter_values(spec, schedule, zs, spec.finite_width).reshape(np.shape(z)), z)


def filter_value(spec: FilterSpec, schedule: PulseSchedule, z: ArrayLike):
    """Filter of either topology."""
    if spec.topology is Topology.COMMON:
        return filter_common(spec, schedule, z)
    return filter_independent(spec, schedule, z)


def log_filter_value(spec: FilterSpec, schedule: PulseSchedule, z: ArrayLike):
    """
    Natural log of the filter, combined in mpmath from the extended
    sampling values. Stays finite where F itself is below the smallest
    double; -inf where F vanishes exactly.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    diffs = spec.digit_differences(schedule.num_qubits)
    amplitudes = [(int(weight), sampling_extended(schedule, qubit, zs, spec.finite_width))
                  for qubit, weight in enumerate(diffs) if weight]
    out = np.full(zs.shape, -np.inf)
    for i in range(zs.size):
        if spec.topology is Topology.COMMON:
            power = abs(sum((w * values[i] for w, values in amplitudes), mpmath.mpc(0))) ** 2
        else:
            power = sum((abs(w) * abs(values[i]) ** 2 for w, values in amplitudes), mpmath.mpf(0))
        if power > 0:
            out[i] = float(mpmath.log(power))
    return _as_output(out.reshape(np.shape(z)), z)


def modified_filter(spec: FilterSpec, schedule: PulseSchedule, z: ArrayLike):
    """Dimensionless modified filter F(z) / z^2."""
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(zs <= 0):
        raise ValueError("modified filter needs z > 0 (F / z^2 has a pole at the origin)")
    values = np.asarray(filter_value(spec, schedule, zs.reshape(-1)), dtype=float) / zs.reshape(-1) ** 2
    return _as_output(values.reshape(np.shape(z)), z)


def filter_curve(spec: FilterSpec, schedule: PulseSchedule,
                 grid: Union[FrequencyGrid, np.ndarray]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(z, F, F / z^2) on a grid."""
    z = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    F = np.asarray(filter_value(spec, schedule, z), dtype=float)
    return z, F, F / z ** 2


def filter_scale(spec: FilterSpec, schedule: PulseSchedule) -> float:
    """sum_j |m_j - n_j| (2 D_j + 2), an upper bound of sqrt(F)."""
    diffs = spec.digit_differences(schedule.num_qubits)
    return float(sum(abs(w) * (2 * schedule.pulse_count(j) + 2) for j, w in enumerate(diffs)))


# ============================================================================
# Finite-width ratio and singular points
# ============================================================================

@dataclass(frozen=True)
class SingularityMarker:
    """
    Point where F^r / F has no finite value.

    kind is 'pole' when the ratio grows without bound on approach and
    'indeterminate' when both filters vanish identically there. family is
    'periodic' when every exponential of the involved sampling functions is
    1 at z, so the zero repeats at every multiple of z (the SDD points
    4 k D pi), and 'isolated' for an accidental zero of the ideal filter.
    """
    z: float
    kind: str = 'pole'
    growth: float = math.inf
    family: str = 'isolated'


def singularity_family(spec: FilterSpec, schedule: PulseSchedule, z: float) -> str:
    """'periodic' when z times every pulse fraction (and 1) is a multiple of 2 pi."""
    diffs = spec.digit_differences(schedule.num_qubits)
    fractions = [schedule.fractions(qubit) for qubit, weight in enumerate(diffs) if weight]
    phases = float(z) * np.concatenate([[1.0], *fractions])
    offsets = np.abs(np.remainder(phases + math.pi, 2 * math.pi) - math.pi)
    return 'periodic' if np.all(offsets < PERIODIC_PHASE_TOLERANCE) else 'isolated'


def _ratio_pair(spec: FilterSpec, schedule: PulseSchedule, zs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ideal = _filter_values(spec, schedule, zs, finite_width=False)
    finite = _filter_values(spec, schedule, zs, finite_width=True)
    return finite, ideal


def zero_floor(spec: FilterSpec, schedule: PulseSchedule) -> float:
    floor = get_numerics_config().singularity_floor
    return max(floor, (ZERO_FLOOR_FACTOR * filter_scale(spec, schedule)) ** 2)


def _approach_growth(spec: FilterSpec, schedule: PulseSchedule, z: float,
                  offsets: Tuple[float, float]) -> Tuple[float, float]:
    """Largest growth of F^r / F between the two offsets, and the ratio nearest to z."""
    near, far = min(offsets), max(offsets)
    points = np.array([z * (1 - far), z * (1 - near), z * (1 + near), z * (1 + far)])
    finite, ideal = _ratio_pair(spec, schedule, points)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = finite / ideal
    growth_left = ratio[1] / ratio[0] if ratio[0] > 0 else math.inf
    growth_right = ratio[2] / ratio[3] if ratio[3] > 0 else math.inf
    growth = max(growth_left, growth_right)
    limit = 0.5 * (ratio[1] + ratio[2])
    return float(growth), float(limit)


def ratio_finite_ideal(spec: FilterSpec, schedule: PulseSchedule, z: float) -> Union[float, SingularityMarker]:
    """
    F^r(z) / F(z) with the schedule's pulse width in the numerator.

    Returns exactly 1.0 for zero-width pulses. Where the ideal filter is a
    numerical zero the ratio is sampled at z(1 +- 1e-7) and z(1 +- 1e-8):
    unbounded growth gives a SingularityMarker, otherwise the limit is returned.
    """
    z = float(z)
    if z <= 0:
        raise ValueError("ratio needs z > 0")
    if schedule.pulse_width == 0:
        return 1.0
    zs = np.array([z])
    finite, ideal = _ratio_pair(spec, schedule, zs)
    floor = zero_floor(spec, schedule)
    if ideal[0] > floor:
        return float(finite[0] / ideal[0])

    growth, limit = _approach_growth(spec, schedule, z, APPROACH_OFFSETS)
    if not math.isfinite(limit) and finite[0] <= floor:
        return SingularityMarker(z=z, kind='indeterminate', growth=math.nan,
                                 family=singularity_family(spec, schedule, z))
    if growth > GROWTH_FACTOR or not math.isfinite(limit):
        logger.debug(f"Singular point of {spec.label} at z={z!r} (growth {growth:.3g})")
        return SingularityMarker(z=z, kind='pole', growth=growth, family=singularity_family(spec, schedule, z))
    return limit


def sdd_singularity_grid(D: int, k_max: int) -> List[float]:
    """Predicted SDD singular points 4 k D pi, k = 1..k_max."""
    if D <= 0 or D % 2:
        raise ValueError(f"D must be even and positive, got {D}")
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    return [4 * k * D * math.pi for k in range(1, k_max + 1)]


def scan_singularities(spec: FilterSpec, schedule: PulseSchedule,
                       grid: Union[FrequencyGrid, np.ndarray]) -> List[SingularityMarker]:
    """
    Singular points of F^r / F inside a grid.

    Every local minimum of the ideal filter is refined by bounded
    minimisation of log F between its grid neighbours, then classified by
    whether the ratio grows more than tenfold between relative offsets
    1e-5 and 1e-6. Poles carry their family from singularity_family.
    """
    if schedule.pulse_width == 0:
        return []
    z = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    if z.size < 3:
        return []
    F = _filter_values(spec, schedule, z, finite_width=False)
    interior = np.arange(1, z.size - 1)
    minima = interior[(F[interior] <= F[interior - 1]) & (F[interior] <= F[interior + 1])]

    def log_filter(x: float) -> float:
        return float(np.log(_filter_values(spec, schedule, np.array([x]), finite_width=False)[0] + 1e-300))

    markers: List[SingularityMarker] = []
    for i in minima:
        lo, hi = z[i - 1], z[i + 1]
        result = optimize.minimize_scalar(log_filter, bounds=(lo, hi), method='bounded',
                                          options={'xatol': 1e-9 * z[i]})
        z_star = float(result.x) if result.fun <= math.log(F[i] + 1e-300) else float(z[i])
        growth, _ = _approach_growth(spec, schedule, z_star, SCAN_APPROACH_OFFSETS)
        if growth > GROWTH_FACTOR:
            markers.append(SingularityMarker(z=z_star, kind='pole', growth=growth,
                                             family=singularity_family(spec, schedule, z_star)))
    logger.info(f"Scanned {spec.label} over [{z[0]:.6g}, {z[-1]:.6g}]: "
                f"{len(minima)} minima, {len(markers)} singular point(s), "
                f"{sum(m.family == 'periodic' for m in markers)} periodic")
    return markers
