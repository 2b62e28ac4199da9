"""
Brute-force cross-checks that share no code path with the closed forms
or the adaptive quadrature.

  - switching traces and time-domain integration of the sampling function
  - the finite/ideal SDD ratio in closed form, and the real/imaginary
    decomposition of NUDD sampling functions
  - discrete-bath decoherence (finite mode sums)
  - a fixed-step trapezoid estimate of the factor I
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from config_DF import get_numerics_config
from filters import FilterSpec, Topology, filter_value
from sampling import sampling_result
from security.path_validator import validate_table_input
from sequences import NuddLevelCounts, PulseSchedule, nudd_boundaries, udd_times
from spectra import SpectralDensity, oscillation_mean, thermal_weight

logger = logging.getLogger(__name__)


# ============================================================================
# Switching function
# ============================================================================

@dataclass(frozen=True)
class SwitchingTrace:
    """
    Piecewise-constant sign history of one qubit.

    Interval d runs from breakpoints[d] to breakpoints[d + 1] with sign
    (-1)^d. With finite-width pulses every pulse window is its own
    zero-sign interval and `windows` lists them.
    """
    breakpoints: Tuple[float, ...]
    signs: Tuple[int, ...]
    windows: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if len(self.signs) != len(self.breakpoints) - 1:
            raise ValueError("a trace needs one sign per interval")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        for d, sign in enumerate(self.signs):
            if sign != (-1) ** d:
                raise ValueError(f"interval {d} must carry sign {(-1) ** d}, got {sign}")

    @property
    def total_duration(self) -> float:
        return self.breakpoints[-1]


def switching_trace(schedule: PulseSchedule, qubit: int) -> SwitchingTrace:
    T = schedule.total_duration
    times = schedule.times[qubit]
    breakpoints = (0.0,) + tuple(times) + (T,)
    signs = tuple((-1) ** d for d in range(len(times) + 1))
    half = 0.5 * schedule.pulse_width
    windows = tuple((t - half, t + half) for t in times) if half > 0 else ()
    return SwitchingTrace(breakpoints, signs, windows)


def switching_function(t: float, schedule: PulseSchedule, qubit: int) -> int:
    """
    (-1)^d strictly inside interval d; 0 at every breakpoint (theta(0) = 0)
    and inside finite-width pulse windows.
    """
    T = schedule.total_duration
    if not 0 <= t <= T:
        raise ValueError(f"t={t!r} outside [0, {T!r}]")
    trace = switching_trace(schedule, qubit)
    for lo, hi in trace.windows:
        if lo <= t <= hi:
            return 0
    breakpoints = np.asarray(trace.breakpoints)
    if np.any(breakpoints == t):
        return 0
    d = int(np.searchsorted(breakpoints, t)) - 1
    return trace.signs[d]


def switching_integral(schedule: PulseSchedule, qubit: int) -> float:
    """int_0^T F(t) dt."""
    starts, ends, signs = _segments(schedule, qubit)
    return float(np.dot(signs, ends - starts))


def _segments(schedule: PulseSchedule, qubit: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(start, end, sign) of the nonzero stretches of the trace."""
    trace = switching_trace(schedule, qubit)
    starts = np.array(trace.breakpoints[:-1])
    ends = np.array(trace.breakpoints[1:])
    half = 0.5 * schedule.pulse_width
    if half > 0:
        starts[1:] += half
        ends[:-1] -= half
    return starts, ends, np.array(trace.signs, dtype=float)


def sampling_time_quadrature(schedule: PulseSchedule, qubit: int, z):
    """
    i omega int_0^T e^{-i omega t} F(t) dt, each stretch of constant sign
    integrated exactly:

        i omega int_a^b e^{-i omega t} dt = 2i sin(omega h) e^{-i omega m}

    with m the midpoint and h the half-length of the stretch. The overall
    sign matches the defining sum of the sampling function.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    T = schedule.total_duration
    starts, ends, signs = _segments(schedule, qubit)
    mid = 0.5 * (starts + ends) / T
    half = 0.5 * (ends - starts) / T
    phase = np.exp(-1j * np.outer(zs, mid))
    values = (2j * np.sin(np.outer(zs, half)) * phase) @ signs
    return sampling_result(values.reshape(np.shape(z)), z)


def time_domain_filter(spec: FilterSpec, schedule: PulseSchedule, z) -> np.ndarray:
    """
    The filter assembled from sampling_time_quadrature instead of the
    sampling module. Ideal filters of a finite-width schedule use its
    zero-width copy.
    """
    if not spec.finite_width and schedule.pulse_width > 0:
        schedule = replace(schedule, pulse_width=0.0)
    zs = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    diffs = spec.digit_differences(schedule.num_qubits)
    if spec.topology is Topology.COMMON:
        amplitude = np.zeros(zs.shape, dtype=complex)
        for qubit, weight in enumerate(diffs):
            if weight:
                amplitude += weight * sampling_time_quadrature(schedule, qubit, zs)
        values = np.abs(amplitude) ** 2
    else:
        values = np.zeros(zs.shape)
        for qubit, weight in enumerate(diffs):
            if weight:
                values += abs(weight) * np.abs(sampling_time_quadrature(schedule, qubit, zs)) ** 2
    return values.reshape(np.shape(z))


# ============================================================================
# Closed-form references
# ============================================================================

def ratio_sdd_analytic(D: int, width_fraction: float, z):
    """
    Finite-width over ideal filter for SDD:

        [cos(z tau / 2T) - sin^2(z tau / 4T) cos(z / 2D) / sin^2(z / 4D)]^2

    Singular at z = 4 k D pi where sin(z / 4D) vanishes.
    """
    if D <= 0 or D % 2:
        raise ValueError(f"D must be even and positive, got {D}")
    z = np.asarray(z, dtype=float)
    x = z * width_fraction
    with np.errstate(divide='ignore', invalid='ignore'):
        value = (np.cos(0.5 * x) - np.sin(0.25 * x) ** 2 * np.cos(z / (2 * D)) / np.sin(z / (4 * D)) ** 2) ** 2
    return float(value) if value.ndim == 0 else value


def nudd_real_imaginary(counts: NuddLevelCounts, level: int, T: float, z) -> Tuple[np.ndarray, np.ndarray]:
    """
    Real and imaginary parts of a NUDD sampling function, summed interval by
    interval with the accumulated phase of each interval's start:

        Re f = sum_k sum_l (-1)^l cos(u_k (c_l - 1)/2 - z a_k)
        Im f = sum_k sum_l (-1)^l sin(u_k (c_l - 1)/2 - z a_k)

    u_k = z tau_k / T, c_l = cos(l pi / (L + 1)), l = -L-1 .. L.
    """
    if not isinstance(counts, NuddLevelCounts):
        counts = NuddLevelCounts(tuple(counts))
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    times_by_level = {}
    for n in range(counts.num_qubits - 1, level, -1):
        edges = nudd_boundaries(times_by_level, n, T)
        times_by_level[n] = [t for a, b in zip(edges, edges[1:]) for t in udd_times(counts.level(n), a, b)]
    edges = np.asarray(nudd_boundaries(times_by_level, level, T)) / T
    L = counts.level(level)
    l = np.arange(-L - 1, L + 1)
    signs = (-1.0) ** np.abs(l)
    cosines = np.cos(l * np.pi / (L + 1))
    real = np.zeros(zs.shape)
    imag = np.zeros(zs.shape)
    for a, b in zip(edges[:-1], edges[1:]):
        u = zs[..., None] * (b - a)
        angle = 0.5 * u * (cosines - 1) - zs[..., None] * a
        real += np.cos(angle) @ signs
        imag += np.sin(angle) @ signs
    return real, imag


def ratio_nudd_decomposed(counts: NuddLevelCounts, T: float, width_fraction: float,
                          weights: Tuple[int, ...], z) -> np.ndarray:
    """
    Finite-width over ideal common filter assembled from the real and
    imaginary parts of every level, independent of the sampling module.
    """
    if not isinstance(counts, NuddLevelCounts):
        counts = NuddLevelCounts(tuple(counts))
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    c = np.cos(0.5 * zs * width_fraction)
    ideal_re = np.zeros(zs.shape)
    ideal_im = np.zeros(zs.shape)
    finite_re = np.zeros(zs.shape)
    finite_im = np.zeros(zs.shape)
    for level, weight in enumerate(weights):
        if not weight:
            continue
        D = counts.pulses_on_level(level)
        re, im = nudd_real_imaginary(counts, level, T, zs)
        boundary_re = 1 + (-1) ** (D + 1) * np.cos(zs)
        boundary_im = -((-1) ** (D + 1)) * np.sin(zs)
        ideal_re += weight * re
        ideal_im += weight * im
        finite_re += weight * (c * re + (1 - c) * boundary_re)
        finite_im += weight * (c * im + (1 - c) * boundary_im)
    with np.errstate(divide='ignore', invalid='ignore'):
        return (finite_re ** 2 + finite_im ** 2) / (ideal_re ** 2 + ideal_im ** 2)


# ============================================================================
# Discrete bath
# ============================================================================

@dataclass(frozen=True, eq=False)
class DiscreteBath:
    """Bath modes: frequencies omega_k > 0, weights |q_k|^2, temperature Te."""
    frequencies: np.ndarray
    weights: np.ndarray
    temperature: float = 0.0

    def __post_init__(self):
        frequencies = np.array(self.frequencies, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if frequencies.shape != weights.shape or frequencies.size == 0:
            raise ValueError("bath needs matching, non-empty frequency and weight lists")
        if np.any(frequencies <= 0):
            raise ValueError("bath frequencies must be positive")
        if np.unique(frequencies).size != frequencies.size:
            raise ValueError("bath frequencies must be distinct")
        if self.temperature < 0:
            raise ValueError(f"temperature must be nonnegative, got {self.temperature}")
        object.__setattr__(self, 'frequencies', frequencies)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def from_csv(cls, path: str, temperature: float = 0.0) -> 'DiscreteBath':
        """Two-column CSV (omega, weight), header optional."""
        frame = pd.read_csv(str(validate_table_input(path)), header=None, comment="#")
        frame = frame.iloc[:, :2].apply(pd.to_numeric, errors='coerce').dropna()
        logger.info(f"Loaded discrete bath with {len(frame)} modes")
        return cls(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy(), temperature)

    def __len__(self) -> int:
        return self.frequencies.size

    def merged(self, other: 'DiscreteBath') -> 'DiscreteBath':
        if other.temperature != self.temperature:
            raise ValueError("cannot merge baths at different temperatures")
        return DiscreteBath(np.concatenate([self.frequencies, other.frequencies]),
                            np.concatenate([self.weights, other.weights]), self.temperature)


def discretize_spectral_density(density: SpectralDensity, omega_min: float, omega_max: float,
                                modes: int, temperature: float = 0.0) -> DiscreteBath:
    """
    Log-spaced modes whose weights J(omega_k) d omega_k sample the continuum:
    omega_k are geometric midpoints of `modes` log-spaced cells.
    """
    if not 0 < omega_min < omega_max or modes < 1:
        raise ValueError("need 0 < omega_min < omega_max and at least one mode")
    edges = np.geomspace(omega_min, omega_max, modes + 1)
    centers = np.sqrt(edges[:-1] * edges[1:])
    weights = np.asarray(density(centers), dtype=float) * np.diff(edges)
    return DiscreteBath(centers, weights, temperature)


def discrete_bath_decoherence(schedule: PulseSchedule, bath: DiscreteBath, spec: FilterSpec,
                              T: float = None) -> float:
    """chi = sum_k |q_k|^2 coth(omega_k / 2Te) / omega_k^2 F(omega_k T)."""
    T = schedule.total_duration if T is None else float(T)
    if spec.is_trivial:
        return 0.0
    S = bath.weights * thermal_weight(bath.frequencies, bath.temperature)
    F = np.asarray(filter_value(spec, schedule, bath.frequencies * T), dtype=float)
    return float(np.sum(S / bath.frequencies ** 2 * F))


# ============================================================================
# Naive factor I
# ============================================================================

def trapezoid_factor(spec: FilterSpec, schedule: PulseSchedule, alpha: float,
                     z_min: float = None, z_max: float = None, points_per_decade: int = None,
                     time_domain: bool = False) -> float:
    """
    I by the trapezoid rule on a fixed log grid, plus end pieces: the
    power law F(z_min) (z / z_min)^p below z_min, p from the first two grid
    points, and the oscillation-averaged tail above z_max.

    With `time_domain` the filter comes from time_domain_filter, so neither
    the sampling module nor the adaptive quadrature is involved. Its
    double-precision cancellation floor calls for a z_min where F is still
    well above (1e-15 * scale)^2.
    """
    config = get_numerics_config()
    z_min = z_min or config.trapezoid_min
    z_max = z_max or config.trapezoid_max
    ppd = points_per_decade or config.points_per_decade
    if spec.is_trivial:
        return 0.0
    count = int(round(math.log10(z_max / z_min) * ppd)) + 1
    z = np.geomspace(z_min, z_max, count)
    evaluate = time_domain_filter if time_domain else filter_value
    F = np.asarray(evaluate(spec, schedule, z), dtype=float)
    if np.max(F) == 0:
        return 0.0
    integrand = F / z ** (alpha + 2)
    body = integrate.trapezoid(integrand, z)
    head = 0.0
    if F[0] > 0 and F[1] > 0:
        p = math.log(F[1] / F[0]) / math.log(z[1] / z[0])
        q = p - alpha - 2
        if q <= -1:
            return math.inf
        head = integrand[0] * z_min / (q + 1)
    tail = oscillation_mean(spec, schedule) / ((alpha + 1) * z_max ** (alpha + 1))
    return float(head + body + tail)

