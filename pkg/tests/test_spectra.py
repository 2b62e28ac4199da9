"""
Tests for spectra.py module.

The factor I against closed forms, divergence detection, the decoherence
function for power-law and thermal noise, coherence times and the
density-matrix evolution.
"""

import math

import numpy as np
import pytest

from filters import FilterSpec, PulseModel, Topology, filter_value, parse_filter_label
from sequences import NuddLevelCounts, custom_schedule, free_evolution, nudd_schedule, sdd_schedule
from spectra import (
    DivergentIntegral,
    NoiseModel,
    OhmicSpectralDensity,
    TabulatedSpectralDensity,
    coherence_element,
    coherence_time,
    decoherence_chi,
    dephase_density_matrix,
    factor_I,
    fit_low_frequency,
    gauss_rule,
    integrate_panels,
    oscillation_mean,
    panel_edges,
    thermal_weight,
)

SINGLE = FilterSpec(1, 0)
LN2 = math.log(2.0)


class TestQuadrature:
    """Panel quadrature building blocks."""

    def test_gauss_rule_weights(self):
        nodes, weights = gauss_rule(8)
        assert weights.sum() == pytest.approx(2.0)
        assert np.all(np.abs(nodes) < 1)

    def test_integrate_sine(self):
        value, error, converged = integrate_panels(np.sin, [0.0, math.pi / 2, math.pi], 1e-12)
        assert value == pytest.approx(2.0, rel=1e-12)
        assert converged
        assert error <= 1e-11

    def test_integrate_refines_peaked_function(self):
        value, _, converged = integrate_panels(lambda x: 1.0 / (1e-4 + x ** 2), [-1.0, 1.0], 1e-8)
        assert value == pytest.approx(2 * math.atan(1e2) / 1e-2, rel=1e-7)
        assert converged

    def test_panel_edges(self):
        edges = panel_edges(0.1, 20.0, 10)
        assert edges[0] == pytest.approx(0.1)
        assert edges[-1] == pytest.approx(20.0)
        assert np.all(np.diff(edges) > 0)
        assert np.any(np.isclose(edges, 2 * math.pi))
        assert np.max(np.diff(edges)) <= math.pi + 1e-12


class TestOscillationMean:

    def test_free_evolution(self):
        assert oscillation_mean(SINGLE, free_evolution(1, 1.0)) == pytest.approx(2.0)

    def test_hahn_echo(self, hahn_echo):
        assert oscillation_mean(SINGLE, hahn_echo) == pytest.approx(6.0)

    def test_finite_width_splits_interior_terms(self):
        schedule = custom_schedule([[0.5]], 1.0, pulse_width=0.02)
        finite = SINGLE.with_pulse_model(PulseModel.FINITE_WIDTH)
        assert oscillation_mean(SINGLE, schedule) == pytest.approx(6.0)
        assert oscillation_mean(finite, schedule) == pytest.approx(4.0)
        z = np.linspace(1.0, 20001.0, 400001)
        assert np.mean(filter_value(finite, schedule, z)) == pytest.approx(4.0, rel=2e-2)


class TestFactorI:

    @pytest.mark.smoke
    def test_hahn_echo_one_over_f(self, hahn_echo):
        # F = 16 sin^4(z/4), I = int sin^4(u) / u^3 du = ln 2
        result = factor_I(SINGLE, hahn_echo, 1.0)
        assert result.value == pytest.approx(LN2, rel=1e-3)
        assert result.converged
        assert result.low_freq_exponent == pytest.approx(4.0, abs=0.05)

    def test_independent_of_duration(self):
        short = factor_I(SINGLE, sdd_schedule(1, 2, 1.0), 1.0).value
        long = factor_I(SINGLE, sdd_schedule(1, 2, 7.0), 1.0).value
        assert long == pytest.approx(short, rel=1e-9)

    def test_free_evolution_diverges_for_one_over_f(self):
        with pytest.raises(DivergentIntegral) as excinfo:
            factor_I(SINGLE, free_evolution(1, 1.0), 1.0)
        assert excinfo.value.alpha == 1.0
        assert excinfo.value.exponent == pytest.approx(2.0, abs=0.05)
        assert math.isinf(excinfo.value.result.value)

    def test_trivial_element(self, sdd4):
        assert factor_I(FilterSpec(2, 2), sdd4, 1.0).value == 0.0

    def test_protected_element(self, sdd4):
        result = factor_I(parse_filter_label("F23c"), sdd4, 1.0)
        assert result.value == 0.0
        assert result.converged

    @pytest.mark.slow
    def test_more_sdd_pulses_protect_better(self):
        spec = parse_filter_label("F14c")
        values = [factor_I(spec, sdd_schedule(2, D, 1.0), 1.0).value for D in (2, 4, 8)]
        assert values[0] > values[1] > values[2] > 0

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_alpha_must_be_positive(self, hahn_echo, alpha):
        with pytest.raises(ValueError):
            factor_I(SINGLE, hahn_echo, alpha)

    def test_tolerance_must_be_positive(self, hahn_echo):
        with pytest.raises(ValueError):
            factor_I(SINGLE, hahn_echo, 1.0, tol=0.0)

    def test_low_frequency_fit(self, sdd4):
        fit = fit_low_frequency(parse_filter_label("F14c"), sdd4)
        assert fit.exponent == pytest.approx(6.0, abs=0.05)
        assert fit.r_squared > 0.999
        assert not fit.null

    @pytest.mark.slow
    def test_low_frequency_fit_below_double_range(self):
        fit = fit_low_frequency(SINGLE, nudd_schedule(NuddLevelCounts((60,)), 1.0))
        assert fit.exponent == pytest.approx(122.0, abs=0.05)
        assert math.isfinite(fit.log_coefficient)
        assert fit.r_squared > 0.999

    @pytest.mark.slow
    @pytest.mark.parametrize("L", [40, 60])
    def test_high_order_udd(self, L):
        # 20 pulses give I = 0.0502; longer sequences protect better
        result = factor_I(SINGLE, nudd_schedule(NuddLevelCounts((L,)), 1.0), 1.0)
        assert math.isfinite(result.value)
        assert 0 < result.value < 0.0502
        assert result.low_freq_exponent == pytest.approx(2 * (L + 1), abs=0.05)
        assert result.converged


class TestNoiseModels:

    def test_power_law_needs_positive_alpha(self):
        with pytest.raises(ValueError):
            NoiseModel.power_law(0.0)

    def test_thermal_needs_density(self):
        with pytest.raises(ValueError):
            NoiseModel(kind='thermal')

    def test_thermal_weight(self):
        omega = np.array([0.1, 1.0, 10.0])
        assert thermal_weight(omega, 0.0) == pytest.approx([1.0, 1.0, 1.0])
        assert thermal_weight(omega, 2.0) == pytest.approx(1.0 / np.tanh(omega / 4.0))

    def test_ohmic_parameters(self):
        with pytest.raises(ValueError):
            OhmicSpectralDensity(eta=1.0, omega_c=0.0)

    def test_tabulated_from_csv(self, tmp_path):
        path = tmp_path / "density.csv"
        path.write_text("omega,J\n0.0,0.0\n1.0,2.0\n3.0,0.0\n")
        density = TabulatedSpectralDensity.from_csv(str(path))
        assert density.cutoff == 3.0
        assert density(np.array([0.5, 2.0, 5.0])) == pytest.approx([1.0, 1.0, 0.0])

    @pytest.mark.smoke
    def test_sample_density_file(self, sample_io):
        density = TabulatedSpectralDensity.from_csv(str(sample_io / "ohmic_density.csv"))
        assert density.cutoff == 16.0
        nodes = np.array([0.5, 1.0, 4.0])
        assert density(nodes) == pytest.approx(nodes * np.exp(-nodes), rel=1e-12)

    def test_tabulated_must_increase(self):
        with pytest.raises(ValueError):
            TabulatedSpectralDensity([1.0, 0.5], [1.0, 1.0])


class TestDecoherence:

    def test_power_law_scaling_with_duration(self, hahn_echo):
        noise = NoiseModel.power_law(1.0, s0=2.0)
        assert decoherence_chi(SINGLE, hahn_echo, noise, T=3.0) == pytest.approx(2.0 * 9.0 * LN2, rel=1e-3)
        ratio = decoherence_chi(SINGLE, hahn_echo, noise, T=2.0) / decoherence_chi(SINGLE, hahn_echo, noise)
        assert ratio == pytest.approx(4.0, rel=1e-12)

    def test_ohmic_free_evolution_closed_form(self):
        # chi = eta ln(1 + (omega_c T)^2) at zero temperature
        noise = NoiseModel.thermal(OhmicSpectralDensity(eta=0.5, omega_c=2.0), temperature=0.0)
        chi = decoherence_chi(SINGLE, free_evolution(1, 1.0), noise)
        assert chi == pytest.approx(0.5 * math.log(1 + 4.0), rel=1e-5)

    def test_protected_element_has_no_decoherence(self, sdd4):
        noise = NoiseModel.power_law(1.0)
        assert decoherence_chi(parse_filter_label("F23c"), sdd4, noise) == 0.0

    def test_coherence_element(self):
        assert coherence_element(0.5 + 0.5j, 0.0) == 0.5 + 0.5j
        assert coherence_element(1.0, 2.0) == pytest.approx(math.exp(-2.0))
        with pytest.raises(ValueError):
            coherence_element(1.0, -0.1)

    def test_coherence_time_power_law(self, hahn_echo):
        noise = NoiseModel.power_law(1.0, s0=3.0)
        T2 = coherence_time(SINGLE, hahn_echo, noise)
        assert decoherence_chi(SINGLE, hahn_echo, noise, T=T2) == pytest.approx(1.0, rel=1e-9)

    def test_coherence_time_of_protected_element(self, sdd4):
        assert math.isinf(coherence_time(parse_filter_label("F23c"), sdd4, NoiseModel.power_law(1.0)))

    def test_coherence_time_thermal(self):
        noise = NoiseModel.thermal(OhmicSpectralDensity(eta=0.5, omega_c=2.0))
        T2 = coherence_time(SINGLE, free_evolution(1, 1.0), noise)
        # eta ln(1 + (omega_c T2)^2) = 1
        assert T2 == pytest.approx(math.sqrt(math.exp(2.0) - 1) / 2.0, rel=1e-4)


class TestDensityMatrix:

    @pytest.mark.slow
    def test_sdd_keeps_protected_coherence(self, sdd4):
        rho0 = np.full((4, 4), 0.25, dtype=complex)
        rho = dephase_density_matrix(rho0, sdd4, NoiseModel.power_law(1.0, s0=5.0), Topology.COMMON)
        assert rho[1, 2] == pytest.approx(0.25)
        assert np.diag(rho) == pytest.approx(np.diag(rho0))
        assert abs(rho[0, 3]) < 0.25
        assert rho == pytest.approx(rho.conj().T)

    def test_shape_checked(self, sdd4):
        with pytest.raises(ValueError):
            dephase_density_matrix(np.eye(2), sdd4, NoiseModel.power_law(1.0))
