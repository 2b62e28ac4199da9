"""
Noise spectra, the decoherence function and the factor

    I = int_0^inf F(z) / z^(alpha + 2) dz

that measures how well a sequence protects a coherence element against
S(omega) = S0 / omega^alpha noise.

The factor is computed in three pieces:
  - [0, z_a]: the fitted low-frequency power law C z^p (with its first
    z^2 correction), integrated analytically; z_a is a decade below z_lo,
    the point where the local log-log slope leaves p by more than 1%;
  - [z_a, z_hi]: Gauss-Legendre panels (log-spaced up to 2 pi, width at
    most pi beyond), each checked by comparing two rule orders and split
    until the error estimate meets the tolerance;
  - [z_hi, inf): the oscillation-averaged filter times z^-(alpha+2),
    reported together with the hard bound (2 sum D + 2N)^2 / ((alpha+1) z_hi^(alpha+1)).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum as PyEnum
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, special, stats

from config_DF import NumericsConfig, get_numerics_config
from filters import FilterSpec, PulseModel, Topology, filter_value, log_filter_value
from security.path_validator import validate_table_input
from sequences import PulseSchedule

logger = logging.getLogger(__name__)

# Slack on the convergence criterion p - alpha - 2 > -1 for a fitted p
EXPONENT_SLACK = 0.05
# Walk resolution used to locate z_lo
WALK_POINTS_PER_DECADE = 20
# The analytic segment ends this factor below z_lo
LOW_SEGMENT_FACTOR = 10.0
# Exponential frequencies (units of 1/T) are merged on this grid
OSCILLATION_KEY_SCALE = 1e12
# Upper cutoff of parametric spectral densities, in units of omega_c
OHMIC_CUTOFF_FACTOR = 60.0


class DivergentIntegral(Exception):
    """Raised when the factor integral diverges at the origin."""

    def __init__(self, message: str, exponent: float, alpha: float, result: 'FactorResult' = None):
        super().__init__(message)
        self.exponent = exponent
        self.alpha = alpha
        self.result = result


# ============================================================================
# Spectral densities
# ============================================================================

class SpectralDensity:
    """J(omega) >= 0 on (0, cutoff]; zero beyond."""

    cutoff: float = math.inf

    def __call__(self, omega):
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)


@dataclass(frozen=True)
class OhmicSpectralDensity(SpectralDensity):
    """eta omega^s omega_c^(1-s) e^(-omega / omega_c); s = 1 is ohmic."""
    eta: float = 1.0
    omega_c: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.eta < 0 or self.omega_c <= 0 or self.s <= 0:
            raise ValueError(f"invalid ohmic parameters eta={self.eta}, omega_c={self.omega_c}, s={self.s}")

    @property
    def cutoff(self) -> float:
        return OHMIC_CUTOFF_FACTOR * self.omega_c

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.eta * omega ** self.s * self.omega_c ** (1 - self.s) * np.exp(-omega / self.omega_c)


@dataclass(frozen=True, eq=False)
class TabulatedSpectralDensity(SpectralDensity):
    """Linear interpolation of (omega, J) samples, zero outside the table."""
    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        values = np.array(self.values, dtype=float)
        if omega.ndim != 1 or omega.shape != values.shape or omega.size < 2:
            raise ValueError("tabulated density needs two equal-length columns with at least 2 rows")
        if np.any(np.diff(omega) <= 0) or omega[0] < 0:
            raise ValueError("tabulated omega must be nonnegative and strictly increasing")
        if np.any(values < 0):
            raise ValueError("tabulated J must be nonnegative")
        object.__setattr__(self, 'omega', omega)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_csv(cls, path: str) -> 'TabulatedSpectralDensity':
        """Two-column CSV (omega, J); a header row is optional."""
        frame = pd.read_csv(str(validate_table_input(path)), header=None, comment="#")
        if frame.shape[1] < 2:
            raise ValueError(f"{path} needs two columns (omega, J)")
        frame = frame.iloc[:, :2].apply(pd.to_numeric, errors='coerce').dropna()
        logger.info(f"Loaded tabulated spectral density with {len(frame)} rows")
        return cls(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy())

    @property
    def cutoff(self) -> float:
        return float(self.omega[-1])

    def breakpoints(self) -> np.ndarray:
        return self.omega

    def __call__(self, omega):
        return np.interp(np.asarray(omega, dtype=float), self.omega, self.values, left=0.0, right=0.0)


@dataclass(frozen=True)
class PowerLawDensity(SpectralDensity):
    """J(omega) = s0 / omega^alpha; used to discretize power-law noise."""
    alpha: float
    s0: float = 1.0

    def __call__(self, omega):
        return self.s0 / np.asarray(omega, dtype=float) ** self.alpha


def thermal_weight(omega, temperature: float):
    """coth(omega / 2Te) as 1 + 2 / expm1(omega / Te); identically 1 at Te = 0."""
    omega = np.asarray(omega, dtype=float)
    if temperature == 0:
        return np.ones_like(omega)
    with np.errstate(divide='ignore', over='ignore'):
        return 1.0 + 2.0 / np.expm1(omega / temperature)


# ============================================================================
# Noise model
# ============================================================================

class NoiseKind(str, PyEnum):
    POWER_LAW = "power_law"
    THERMAL = "thermal"


@dataclass(frozen=True)
class NoiseModel:
    """S0 / omega^alpha, or J(omega) coth(omega / 2Te)."""
    kind: NoiseKind
    alpha: float = 1.0
    s0: float = 1.0
    spectral_density: Optional[SpectralDensity] = None
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', NoiseKind(self.kind))
        if self.kind is NoiseKind.POWER_LAW:
            if not self.alpha > 0:
                raise ValueError(f"power-law exponent must be positive, got {self.alpha}")
            if not self.s0 > 0:
                raise ValueError(f"S0 must be positive, got {self.s0}")
        else:
            if self.spectral_density is None:
                raise ValueError("thermal noise needs a spectral density")
            if self.temperature < 0:
                raise ValueError(f"temperature must be nonnegative, got {self.temperature}")

    @classmethod
    def power_law(cls, alpha: float, s0: float = 1.0) -> 'NoiseModel':
        return cls(NoiseKind.POWER_LAW, alpha=alpha, s0=s0)

    @classmethod
    def thermal(cls, spectral_density: SpectralDensity, temperature: float = 0.0) -> 'NoiseModel':
        return cls(NoiseKind.THERMAL, spectral_density=spectral_density, temperature=temperature)

    def spectrum(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.kind is NoiseKind.POWER_LAW:
            return self.s0 / omega ** self.alpha
        return self.spectral_density(omega) * thermal_weight(omega, self.temperature)


# ============================================================================
# Results
# ============================================================================

@dataclass(frozen=True)
class FactorResult:
    """Factor I with convergence diagnostics."""
    value: float
    low_freq_exponent: float
    abs_error_estimate: float
    tail_bound: float
    converged: bool
    z_lo: float = math.nan
    z_hi: float = math.nan
    notes: Tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class LowFrequencyFit:
    """Power law F ~ exp(log_coefficient) z^p fitted at low frequency."""
    exponent: float
    log_coefficient: float
    z_lo: float
    r_squared: float
    null: bool = False


# ============================================================================
# Panel quadrature
# ============================================================================

@lru_cache(maxsize=8)
def gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = special.roots_legendre(order)
    return nodes, weights


def _panel_estimates(func: Callable[[np.ndarray], np.ndarray], panels: np.ndarray,
                     low_order: int, high_order: int) -> Tuple[np.ndarray, np.ndarray]:
    x_hi, w_hi = gauss_rule(high_order)
    x_lo, w_lo = gauss_rule(low_order)
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    nodes_hi = mid[:, None] + half[:, None] * x_hi[None, :]
    nodes_lo = mid[:, None] + half[:, None] * x_lo[None, :]
    values = func(np.concatenate([nodes_hi.ravel(), nodes_lo.ravel()]))
    split = nodes_hi.size
    f_hi = values[:split].reshape(nodes_hi.shape)
    f_lo = values[split:].reshape(nodes_lo.shape)
    return half * (f_hi @ w_hi), half * (f_lo @ w_lo)


def _split(panels: np.ndarray) -> np.ndarray:
    a, b = panels[:, 0], panels[:, 1]
    geometric = (a > 0) & (b > 2 * a)
    mid = np.where(geometric, np.sqrt(np.abs(a * b)), 0.5 * (a + b))
    left = np.column_stack([a, mid])
    right = np.column_stack([mid, b])
    return np.vstack([left, right])


def integrate_panels(func: Callable[[np.ndarray], np.ndarray], edges: Sequence[float],
                     rel_tolerance: float, abs_tolerance: float = 0.0,
                     config: NumericsConfig = None) -> Tuple[float, float, bool]:
    """
    Integrate a vectorized function over consecutive panels.

    Each panel is integrated with Gauss-Legendre rules of two orders; their
    difference is the panel's error estimate. Panels whose error exceeds
    their share of the tolerance are halved (geometrically when wide in
    log z) until the total error meets the tolerance or the refinement
    budget runs out.

    Returns:
        (value, error estimate, converged)
    """
    config = config or get_numerics_config()
    edges = np.asarray(edges, dtype=float)
    pending = np.column_stack([edges[:-1], edges[1:]])
    span = edges[-1] - edges[0]
    accepted_value = 0.0
    accepted_error = 0.0

    for refinement in range(config.max_refinements + 1):
        hi, lo = _panel_estimates(func, pending, config.low_order, config.high_order)
        errors = np.abs(hi - lo)
        estimate = accepted_value + hi.sum()
        tolerance = max(abs_tolerance, rel_tolerance * abs(estimate))
        share = tolerance * (pending[:, 1] - pending[:, 0]) / span
        bad = errors > share
        if accepted_error + errors.sum() <= tolerance or refinement == config.max_refinements or not bad.any():
            value = estimate
            error = accepted_error + errors.sum()
            converged = error <= tolerance
            if not converged:
                logger.warning(f"Panel quadrature stopped at error {error:.3g} > tolerance {tolerance:.3g}")
            return float(value), float(error), bool(converged)
        accepted_value += hi[~bad].sum()
        accepted_error += errors[~bad].sum()
        pending = _split(pending[bad])
        logger.debug(f"Refinement {refinement + 1}: splitting {bad.sum()} panel(s)")
    raise AssertionError("unreachable")


def panel_edges(z_start: float, z_stop: float, log_panels_per_decade: int) -> np.ndarray:
    """Log-spaced edges up to 2 pi, then edges at most pi apart."""
    knee = 2 * math.pi
    edges = []
    if z_start < knee:
        log_end = min(knee, z_stop)
        count = max(1, int(math.ceil(math.log10(log_end / z_start) * log_panels_per_decade)))
        edges.extend(np.geomspace(z_start, log_end, count + 1))
    if z_stop > knee:
        linear_start = max(knee, z_start)
        count = max(1, int(math.ceil((z_stop - linear_start) / math.pi)))
        linear = np.linspace(linear_start, z_stop, count + 1)
        edges.extend(linear[1:] if edges else linear)
    return np.asarray(edges)


# ============================================================================
# Low-frequency analysis
# ============================================================================

def _dfs_threshold(spec: FilterSpec, schedule: PulseSchedule, config: NumericsConfig) -> float:
    scale = 2 * schedule.total_pulses + 2 * schedule.num_qubits
    return config.dfs_factor * scale ** 2


def fit_low_frequency(spec: FilterSpec, schedule: PulseSchedule, config: NumericsConfig = None) -> LowFrequencyFit:
    """
    Fit log F = log C + p log z on the configured band and locate z_lo, the
    first point above the band's start where the local slope leaves p by
    more than the configured fraction.

    The fit and the walk use log F from extended precision, so filters of
    very high order whose values underflow a double keep their power law.
    """
    config = config or get_numerics_config()
    z_fit = np.geomspace(config.slope_band_min, config.slope_band_max, config.slope_points)
    decades = math.log10(2 * math.pi / config.slope_band_min)
    z_walk = np.geomspace(config.slope_band_min, 2 * math.pi, int(decades * WALK_POINTS_PER_DECADE) + 1)
    z_mid = np.geomspace(2 * math.pi, max(config.z_hi_floor, 10.0), 64)
    F_check = np.asarray(filter_value(spec, schedule, np.concatenate([z_walk, z_mid])), dtype=float)

    if np.max(F_check) <= _dfs_threshold(spec, schedule, config):
        return LowFrequencyFit(exponent=math.nan, log_coefficient=-math.inf, z_lo=math.nan, r_squared=1.0, null=True)

    log_F = np.asarray(log_filter_value(spec, schedule, np.concatenate([z_fit, z_walk])), dtype=float)
    log_fit = log_F[:z_fit.size]
    log_walk = log_F[z_fit.size:]
    finite = np.isfinite(log_fit)
    if finite.sum() < 3:
        raise DivergentIntegral("filter has no resolvable low-frequency power law", math.nan, math.nan)
    fit = stats.linregress(np.log(z_fit[finite]), log_fit[finite])
    p = float(fit.slope)

    with np.errstate(invalid='ignore'):
        local = np.diff(log_walk) / np.diff(np.log(z_walk))
    off = np.flatnonzero(~(np.abs(local - p) <= config.slope_deviation * abs(p)))
    z_lo = float(z_walk[off[0]]) if off.size else float(z_walk[-1])
    z_lo = max(z_lo, config.slope_band_min)
    return LowFrequencyFit(exponent=p, log_coefficient=float(fit.intercept), z_lo=z_lo,
                           r_squared=float(fit.rvalue ** 2))


def _power_law_segment(log_func: Callable[[np.ndarray], np.ndarray], z_a: float,
                       exponent: float) -> Tuple[float, float]:
    """
    int_0^z_a of an integrand behaving like c z^q (1 + b z^2); q from the
    fitted filter exponent, c and b from the log of the integrand at z_a / 2
    and z_a. Worked in logs so that integrands below the double range give
    a vanishing segment instead of 0 / 0.
    """
    nodes = np.array([0.5 * z_a, z_a])
    log_h = np.asarray(log_func(nodes), dtype=float) - exponent * np.log(nodes)
    if not np.all(np.isfinite(log_h)):
        return 0.0, 0.0
    ratio = math.exp(log_h[1] - log_h[0])
    b = (ratio - 1) / (0.75 * z_a ** 2)
    # 1 + b z_a^2 / 4 = (ratio + 2) / 3 > 0
    log_c = log_h[0] - math.log((ratio + 2) / 3)
    log_z = math.log(z_a)
    leading = math.exp(log_c + (exponent + 1) * log_z) / (exponent + 1)
    correction = b * math.exp(log_c + (exponent + 3) * log_z) / (exponent + 3)
    error = abs(correction) * abs(b) * z_a ** 2
    return float(leading + correction), float(error)


def _snap_exponent(p: float) -> float:
    """F = |f|^2 rises with an even power; snap fits that land within the slack."""
    nearest = 2 * round(p / 2)
    return float(nearest) if abs(p - nearest) < EXPONENT_SLACK else p


def _exponential_terms(spec: FilterSpec, schedule: PulseSchedule, qubit: int) -> Dict[int, float]:
    """
    Coefficients a_k of f(z) = sum_k a_k e^{-i z x_k}, keyed by x_k on a
    fixed grid. Finite-width pulses split each interior term in two,
    cos(z eps / 2) e^{-i z x} = (e^{-i z (x - eps/2)} + e^{-i z (x + eps/2)}) / 2.
    """
    D = schedule.pulse_count(qubit)
    terms = {0: 1.0, int(OSCILLATION_KEY_SCALE): float((-1) ** (D + 1))}
    half_width = 0.5 * schedule.pulse_width / schedule.total_duration if spec.finite_width else 0.0
    shifts = ((-half_width, 0.5), (half_width, 0.5)) if half_width > 0 else ((0.0, 1.0),)
    for d, x in enumerate(schedule.fractions(qubit), start=1):
        for shift, share in shifts:
            key = int(round((x + shift) * OSCILLATION_KEY_SCALE))
            terms[key] = terms.get(key, 0.0) + share * 2.0 * (-1) ** d
    return terms


def oscillation_mean(spec: FilterSpec, schedule: PulseSchedule) -> float:
    """Average of the filter over z, from the coefficients of its exponentials."""
    diffs = spec.digit_differences(schedule.num_qubits)
    combined: Dict[int, float] = {}
    independent = 0.0
    for qubit, weight in enumerate(diffs):
        if not weight:
            continue
        terms = _exponential_terms(spec, schedule, qubit)
        if spec.topology is Topology.COMMON:
            for key, value in terms.items():
                combined[key] = combined.get(key, 0.0) + weight * value
        else:
            independent += abs(weight) * sum(v * v for v in terms.values())
    if spec.topology is Topology.COMMON:
        return float(sum(v * v for v in combined.values()))
    return float(independent)


# ============================================================================
# Factor I
# ============================================================================

def factor_I(spec: FilterSpec, schedule: PulseSchedule, alpha: float, tol: float = None) -> FactorResult:
    """
    I = int_0^inf F(z) / z^(alpha+2) dz for one filter and schedule.

    Args:
        spec: filter (ideal or finite width)
        schedule: pulse schedule; only its geometry in units of T matters
        alpha: power-law exponent of the noise, > 0
        tol: relative tolerance of the panel quadrature (default from config)

    Raises:
        DivergentIntegral: when the fitted exponent p gives p - alpha - 2 <= -1
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    config = get_numerics_config()
    tol = tol if tol is not None else config.rel_tolerance
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    if spec.is_trivial:
        return FactorResult(0.0, math.inf, 0.0, 0.0, True, notes=("diagonal element",))

    low = fit_low_frequency(spec, schedule, config)
    if low.null:
        logger.info(f"{spec.label} vanishes identically on {schedule.describe()}, I = 0")
        return FactorResult(0.0, math.inf, 0.0, 0.0, True, notes=("filter vanishes identically",))

    p = _snap_exponent(low.exponent)
    q = p - alpha - 2
    if q <= -1:
        result = FactorResult(math.inf, low.exponent, math.inf, math.inf, False, z_lo=low.z_lo,
                              notes=(f"integrand ~ z^{q:g} at the origin",))
        raise DivergentIntegral(
            f"I diverges at the origin for {spec.label}: filter exponent {low.exponent:.4g}, alpha {alpha:g}",
            exponent=low.exponent, alpha=alpha, result=result,
        )

    def integrand(z: np.ndarray) -> np.ndarray:
        return np.asarray(filter_value(spec, schedule, z), dtype=float) / z ** (alpha + 2)

    def log_integrand(z: np.ndarray) -> np.ndarray:
        return np.asarray(log_filter_value(spec, schedule, z), dtype=float) - (alpha + 2) * np.log(z)

    z_a = low.z_lo / LOW_SEGMENT_FACTOR
    z_hi = max(config.z_hi_floor, config.z_hi_per_pulse * schedule.total_pulses)
    low_value, low_error = _power_law_segment(log_integrand, z_a, q)

    edges = panel_edges(z_a, z_hi, config.log_panels_per_decade)
    middle, middle_error, converged = integrate_panels(integrand, edges, tol, config.abs_tolerance, config)

    decay = (alpha + 1) * z_hi ** (alpha + 1)
    tail_estimate = oscillation_mean(spec, schedule) / decay
    tail_bound = (2 * schedule.total_pulses + 2 * schedule.num_qubits) ** 2 / decay

    value = low_value + middle + tail_estimate
    error = middle_error + low_error
    converged = converged and error <= max(config.abs_tolerance, tol * abs(value))
    if not converged:
        logger.warning(f"Factor I for {spec.label} not converged: {value:.6g} +- {error:.3g}")
    logger.debug(f"I({spec.label}, alpha={alpha:g}) = {value!r} [low {low_value:.3g}, "
                 f"middle {middle:.6g}, tail {tail_estimate:.3g}]")
    return FactorResult(value=float(value), low_freq_exponent=low.exponent, abs_error_estimate=float(error),
                        tail_bound=float(tail_bound), converged=bool(converged), z_lo=low.z_lo, z_hi=z_hi)


# ============================================================================
# Decoherence
# ============================================================================

def _thermal_chi(spec: FilterSpec, schedule: PulseSchedule, noise: NoiseModel, T: float,
                 config: NumericsConfig) -> float:
    """chi = T int S(z/T) F(z) / z^2 dz over z in (0, cutoff T]."""
    density = noise.spectral_density
    z_max = density.cutoff * T
    if not math.isfinite(z_max):
        raise ValueError("thermal noise needs a spectral density with a finite cutoff")

    def integrand(z: np.ndarray) -> np.ndarray:
        F = np.asarray(filter_value(spec, schedule, z), dtype=float)
        return T * noise.spectrum(z / T) * F / z ** 2

    z_start = min(config.slope_band_min, 1e-2 * z_max) * 1e-2
    edges = panel_edges(z_start, z_max, config.log_panels_per_decade)
    kinks = density.breakpoints() * T
    kinks = kinks[(kinks > z_start) & (kinks < z_max)]
    if 0 < kinks.size <= 2000:
        edges = np.unique(np.concatenate([edges, kinks]))

    g = np.asarray(integrand(np.array([z_start, 2 * z_start])), dtype=float)
    if g[0] > 0 and g[1] > 0:
        q = math.log(g[1] / g[0]) / math.log(2.0)
        if q <= -1:
            raise DivergentIntegral(f"thermal decoherence of {spec.label} diverges at the origin",
                                    exponent=q, alpha=math.nan)
        head = g[0] * z_start / (q + 1)
    else:
        head = 0.0

    value, error, converged = integrate_panels(integrand, edges, config.rel_tolerance, config.abs_tolerance, config)
    if not converged:
        logger.warning(f"Thermal decoherence for {spec.label} not converged (error {error:.3g})")
    return float(head + value)


def decoherence_chi(spec: FilterSpec, schedule: PulseSchedule, noise: NoiseModel, T: float = None) -> float:
    """
    Decoherence exponent chi_mn(T).

    Power-law noise gives S0 T^(alpha+1) I; thermal noise integrates
    J coth / omega^2 against F(omega T). T defaults to the schedule duration;
    the schedule geometry is reused at any T.
    """
    T = schedule.total_duration if T is None else float(T)
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if spec.is_trivial:
        return 0.0
    config = get_numerics_config()
    if noise.kind is NoiseKind.POWER_LAW:
        result = factor_I(spec, schedule, noise.alpha)
        return float(noise.s0 * T ** (noise.alpha + 1) * result.value)

    low = fit_low_frequency(spec, schedule, config)
    if low.null:
        return 0.0
    return _thermal_chi(spec, schedule, noise, T, config)


def coherence_element(rho0_mn: complex, chi: float) -> complex:
    """rho_mn(T) = rho_mn(0) e^(-chi); chi = 0 leaves the element unchanged."""
    if chi < 0:
        raise ValueError(f"chi must be nonnegative, got {chi}")
    if chi == 0:
        return rho0_mn
    return rho0_mn * math.exp(-chi)


def coherence_time(spec: FilterSpec, schedule: PulseSchedule, noise: NoiseModel) -> float:
    """
    Duration T2 at which chi(T2) = 1.

    Closed form (S0 I)^(-1 / (alpha + 1)) for power-law noise; a bracketed
    root in log T for thermal noise. Infinite for protected elements.
    """
    if noise.kind is NoiseKind.POWER_LAW:
        result = factor_I(spec, schedule, noise.alpha)
        if result.value == 0:
            return math.inf
        return float((noise.s0 * result.value) ** (-1.0 / (noise.alpha + 1)))

    def excess(log_T: float) -> float:
        return decoherence_chi(spec, schedule, noise, math.exp(log_T)) - 1.0

    start = math.log(schedule.total_duration)
    value = excess(start)
    if value == -1.0:
        return math.inf
    step = math.log(2.0) if value < 0 else -math.log(2.0)
    previous = start
    for _ in range(60):
        current = previous + step
        if (excess(current) >= 0) == (step > 0):
            break
        previous = current
    else:
        logger.warning(f"No coherence time bracket found for {spec.label}")
        return math.inf
    low, high = sorted((previous, current))
    root = optimize.brentq(excess, low, high, xtol=1e-12)
    return float(math.exp(root))


def dephase_density_matrix(rho0: np.ndarray, schedule: PulseSchedule, noise: NoiseModel,
                           topology: Topology = Topology.COMMON, T: float = None,
                           pulse_model: PulseModel = PulseModel.IDEAL) -> np.ndarray:
    """
    Pure-dephasing evolution of a 2^N x 2^N density matrix: every
    off-diagonal element decays by e^(-chi_mn), the diagonal is kept.
    Elements with the same digit differences (up to sign) share one chi.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    size = 2 ** schedule.num_qubits
    if rho0.shape != (size, size):
        raise ValueError(f"density matrix must be {size}x{size}, got {rho0.shape}")
    rho = rho0.copy()
    cache: Dict[Tuple[int, ...], float] = {}
    for m in range(size):
        for n in range(m + 1, size):
            spec = FilterSpec(m, n, topology, pulse_model)
            diffs = tuple(int(d) for d in spec.digit_differences(schedule.num_qubits))
            key = max(diffs, tuple(-d for d in diffs))
            if key not in cache:
                cache[key] = decoherence_chi(spec, schedule, noise, T)
            rho[m, n] = coherence_element(rho0[m, n], cache[key])
            rho[n, m] = np.conj(rho[m, n])
    return rho
