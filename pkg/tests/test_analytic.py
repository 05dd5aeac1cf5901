"""
Tests de las fórmulas analíticas de la trampa abierta

Oráculos: forma cerrada de δψ con erfc complejo (scipy.special), identidades
entre t_Z y el coeficiente anómalo, la integral doble de cruce y el corchete
de escape evaluado en aritmética decimal.
"""
import cmath
import math
from decimal import Decimal, localcontext

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import erf, erfc, fresnel

from zenotrap.core.analytic import (
    LeftMode,
    RightMode,
    anomalous_coefficient,
    bound_energy,
    boundary_derivative,
    conventional_zeno_time,
    delta_psi,
    effective_edge,
    eigenmode,
    energy_moments,
    escape_bracket,
    escape_probability,
    escape_spectrum,
    free_propagator,
    left_right_coupling,
    nonescape_from_survival,
    penetration_depth,
    spectral_F,
    step_onset_time,
    survival_amplitude_integral,
    survival_amplitude_short,
    survival_probability_conventional,
    survival_probability_short,
    transition_amplitude_integral,
    transition_probability,
    validity_horizon,
    zeno_rate,
    zeno_time,
)
from zenotrap.core.grid import WaveFunction, make_grid
from zenotrap.core.special import adaptive_gauss_legendre
from zenotrap.core.tdse import Potential, prepare_states
from zenotrap.models.models import TrapConfig, ZenoRateKind

TRAP = TrapConfig.hard_wall()


def delta_psi_closed_form(x: float, t: float, n: int, config: TrapConfig) -> complex:
    """δψ con ∫₀^√t exp(−q/u² − p u²)du expresada con erfc"""
    M = config.M
    energy = bound_energy(n, config)
    alpha = 0.5 * M * (x - config.a) ** 2
    phase = cmath.exp(-0.25j * math.pi)
    root_p = phase * math.sqrt(energy)
    root_q = phase * math.sqrt(alpha)
    root_t = math.sqrt(t)
    integral = 0.5 * math.sqrt(math.pi) / (2.0 * root_p) * (
        cmath.exp(-2.0 * root_p * root_q) * erfc(root_q / root_t - root_p * root_t)
        - cmath.exp(2.0 * root_p * root_q) * erfc(root_q / root_t + root_p * root_t)
    )
    prefactor = ((0.5j / M) * boundary_derivative(n, config) * 2.0 * math.sqrt(M / (2.0 * math.pi))
                 * phase * cmath.exp(-1j * energy * t))
    return prefactor * integral


def decimal_bracket(x: float, digits: int = 50) -> complex:
    """Corchete de escape 1 − e^{−ix}·Σ (ix)^k/(k!(2k+1)) en aritmética Decimal"""
    with localcontext() as ctx:
        ctx.prec = digits
        X = Decimal(x)
        threshold = Decimal(10) ** -(digits - 5)
        # i^k cicla entre (1, 0), (0, 1), (−1, 0), (0, −1)
        cycle = ((1, 0), (0, 1), (-1, 0), (0, -1))
        sum_re = sum_im = cos_x = sin_x = Decimal(0)
        power = Decimal(1)
        k = 0
        while power > threshold or k < 4:
            re, im = cycle[k % 4]
            sum_re += re * power / (2 * k + 1)
            sum_im += im * power / (2 * k + 1)
            cos_x += re * power
            sin_x += im * power
            k += 1
            power = power * X / k
        # e^{−ix}·suma
        prod_re = cos_x * sum_re + sin_x * sum_im
        prod_im = cos_x * sum_im - sin_x * sum_re
        return complex(float(1 - prod_re), float(-prod_im))


# ═══════════════════════════════════════════════════════════════
# Base izquierda/derecha y escalas
# ═══════════════════════════════════════════════════════════════


class TestBasis:

    def test_left_mode_normalized(self):
        x = np.linspace(0.0, 1.0, 20001)
        values = eigenmode(LeftMode(2), x, TRAP)
        assert trapezoid(values ** 2, x) == pytest.approx(1.0, rel=1e-8)

    def test_modes_vanish_on_the_other_side(self):
        assert eigenmode(LeftMode(1), 1.5, TRAP) == 0.0
        assert eigenmode(RightMode(3.0), 0.5, TRAP) == 0.0

    def test_invalid_modes(self):
        with pytest.raises(ValueError):
            LeftMode(0)
        with pytest.raises(ValueError):
            RightMode(-1.0)

    def test_energy_and_horizon(self):
        assert bound_energy(2, TRAP) == pytest.approx(2.0 * math.pi ** 2)
        assert validity_horizon(1, TRAP) == pytest.approx(2.0 / math.pi ** 2)

    def test_boundary_derivative_sign(self):
        assert boundary_derivative(1, TRAP) == pytest.approx(-math.sqrt(2.0) * math.pi)
        assert boundary_derivative(2, TRAP) > 0

    def test_free_propagator_modulus(self):
        assert abs(free_propagator(0.3, 0.01, 1.0)) == pytest.approx(math.sqrt(1.0 / (2.0 * math.pi * 0.01)))
        with pytest.raises(ValueError):
            free_propagator(0.3, 0.0, 1.0)

    def test_free_propagator_semigroup(self):
        # ∫ G(x−y,t1)G(y,t2)dy sobre una ventana finita = G(x,t1+t2)·(1−i)(C(w)+iS(w))
        t1, t2, x, M = 0.03, 0.02, 0.3, 1.0
        t = t1 + t2
        center, half_width = x * t2 / t, 1.0
        result = adaptive_gauss_legendre(
            lambda y: free_propagator(x - y, t1, M) * free_propagator(y, t2, M),
            center - half_width, center + half_width, rtol=1e-12,
        )
        beta = M * t / (2.0 * t1 * t2)
        sine, cosine = fresnel(half_width * math.sqrt(2.0 * beta / math.pi))
        expected = free_propagator(x, t, M) * (1.0 - 1.0j) * (cosine + 1j * sine)
        assert abs(result.value - expected) <= 1e-6 * abs(free_propagator(x, t, M))

    def test_penetration_depth_and_onset(self):
        step = TrapConfig.step_trap()
        depth = penetration_depth(1, step)
        assert depth == pytest.approx(1.0 / math.sqrt(2.0 * (step.V0 - math.pi ** 2 / 2.0)), rel=1e-12)
        assert depth == pytest.approx(4.502e-3, rel=1e-3)
        assert effective_edge(1, step) == pytest.approx(1.0 + depth)
        assert step_onset_time(1, step) == pytest.approx(100.0 * depth ** 2)
        assert 2.0e-3 < step_onset_time(4, step) < 2.1e-3

    def test_hard_wall_has_sharp_edge(self):
        assert penetration_depth(3, TRAP) == 0.0
        assert effective_edge(3, TRAP) == TRAP.a
        assert step_onset_time(3, TRAP) == 0.0

    def test_unbound_level_has_no_depth(self):
        with pytest.raises(ValueError, match="not bound"):
            penetration_depth(4, TrapConfig.step_trap(50.0))


# ═══════════════════════════════════════════════════════════════
# Onda emitida
# ═══════════════════════════════════════════════════════════════


class TestDeltaPsi:

    @pytest.mark.parametrize("x", [0.85, 0.95, 1.0, 1.02, 1.1, 1.3])
    def test_matches_erfc_closed_form(self, x):
        t = 0.001
        expected = delta_psi_closed_form(x, t, 1, TRAP)
        assert abs(delta_psi(x, t, 1, TRAP) - expected) <= 1e-7 * abs(delta_psi_closed_form(1.0, t, 1, TRAP))

    def test_edge_density_grows_linearly(self):
        for t in (1e-7, 1e-6):
            assert abs(delta_psi(1.0, t, 1, TRAP)) ** 2 == pytest.approx(math.pi * t, rel=1e-2)

    def test_edge_amplitude_exponent(self):
        times = np.array([1e-7, 1e-6, 1e-5])
        peaks = np.array([abs(delta_psi(1.0, t, 1, TRAP)) for t in times])
        slope = np.polyfit(np.log(times), np.log(peaks), 1)[0]
        assert slope == pytest.approx(0.5, abs=0.1)

    def test_mirror_symmetric(self):
        xi = np.linspace(0.01, 0.2, 7)
        left = delta_psi(1.0 - xi, 0.001, 1, TRAP)
        right = delta_psi(1.0 + xi, 0.001, 1, TRAP)
        np.testing.assert_allclose(left, right, rtol=1e-12)

    def test_array_shape_preserved(self):
        assert delta_psi(np.array([[0.9, 1.1]]), 0.001, 1, TRAP).shape == (1, 2)

    def test_negative_position(self):
        with pytest.raises(ValueError):
            delta_psi(-0.1, 0.001, 1, TRAP)


# ═══════════════════════════════════════════════════════════════
# Amplitud de supervivencia y tiempo de Zeno
# ═══════════════════════════════════════════════════════════════


class TestSurvival:

    def test_zeno_time_value(self):
        assert zeno_time(1, TRAP).t_Z == pytest.approx(0.41709, abs=1e-4)

    def test_zeno_time_scaling(self):
        assert zeno_time(2, TRAP).t_Z == pytest.approx(zeno_time(1, TRAP).t_Z * 2 ** (-4.0 / 3.0))

    def test_coefficient_matches_zeno_time(self):
        coefficient = anomalous_coefficient(1, TRAP)
        assert abs(coefficient) == pytest.approx(2.6244, abs=1e-4)
        assert math.sqrt(2.0) * abs(coefficient) == pytest.approx(zeno_time(1, TRAP).t_Z ** -1.5, rel=1e-12)
        assert cmath.phase(coefficient) == pytest.approx(-0.25 * math.pi)

    def test_short_form_against_double_integral(self):
        t = 0.01
        exact = survival_amplitude_integral(t, 1, TRAP)
        short = survival_amplitude_short(t, 1, TRAP)
        assert abs(short.value - exact.expansion_value) <= 5e-4

    def test_double_integral_stays_below_one(self):
        amplitude = survival_amplitude_integral(0.005, 1, TRAP)
        assert amplitude.probability < 1.0
        assert 1.0 - amplitude.probability == pytest.approx((0.005 / zeno_time(1, TRAP).t_Z) ** 1.5, rel=0.05)

    def test_short_probability_follows_three_halves(self):
        t = 1e-3
        short = survival_amplitude_short(t, 1, TRAP)
        assert short.probability == pytest.approx(survival_probability_short(t, 1, TRAP), abs=5e-5)

    def test_survival_not_clamped(self):
        assert survival_probability_short(1.0, 1, TRAP) < 0

    def test_survival_vectorized(self):
        values = survival_probability_short(np.array([0.0, 0.01]), 1, TRAP)
        assert values[0] == 1.0 and values[1] < 1.0

    def test_nonescape_relation(self):
        assert nonescape_from_survival(0.8) == pytest.approx(0.9)
        with pytest.raises(ValueError):
            nonescape_from_survival(1.5)


class TestRates:

    def test_anomalous_and_conventional(self):
        t_z = zeno_time(1, TRAP).t_Z
        assert zeno_rate(1e-4, t_z) == pytest.approx(math.sqrt(1e-4) / t_z ** 1.5)
        assert zeno_rate(1e-4, t_z, ZenoRateKind.CONVENTIONAL) == pytest.approx(1e-4 / t_z ** 2)

    def test_anomalous_exceeds_conventional_below_t_z(self):
        t_z = zeno_time(1, TRAP).t_Z
        for tau in (1e-5, 1e-3, 0.1):
            assert zeno_rate(tau, t_z) > zeno_rate(tau, t_z, ZenoRateKind.CONVENTIONAL)

    def test_conventional_time_limits(self):
        assert conventional_zeno_time(0.0) == math.inf
        assert conventional_zeno_time(4.0) == pytest.approx(0.5)
        assert survival_probability_conventional(0.25, 0.5) == pytest.approx(0.75)

    def test_hard_wall_variance_scales_inversely_with_spacing(self):
        spacings, variances = [], []
        for points in (1201, 2401, 4801, 9601):
            config = TrapConfig.hard_wall(length=1.2)
            grid = make_grid(config, points)
            psi = WaveFunction.from_function(
                grid, lambda x: np.where(x <= 1.0, math.sqrt(2.0) * np.sin(math.pi * x), 0.0))
            spacings.append(grid.dx)
            variances.append(energy_moments(psi, config)[1])
        assert np.polyfit(np.log(spacings), np.log(variances), 1)[0] == pytest.approx(-1.0, abs=0.1)
        assert conventional_zeno_time(variances[-1]) < conventional_zeno_time(variances[0])

    def test_step_ground_state_variance_is_resolution_stable(self):
        variances = []
        for points in (6001, 12001):
            config = TrapConfig.step_trap(length=1.2)
            grid = make_grid(config, points)
            psi = prepare_states(grid, config, 1)[0]
            variances.append(energy_moments(psi, config)[1])
        assert variances[1] == pytest.approx(variances[0], rel=0.01)
        assert 300.0 < variances[1] < 900.0


# ═══════════════════════════════════════════════════════════════
# Espectros de escape
# ═══════════════════════════════════════════════════════════════


class TestEscape:

    def test_series_and_direct_agree_at_switch(self):
        x = np.array([5e-4, 1e-3, 2e-3])
        np.testing.assert_allclose(escape_bracket(x, "series"), escape_bracket(x, "direct"), rtol=1e-9)

    def test_bracket_small_argument(self):
        assert escape_bracket(1e-6) == pytest.approx((2j / 3.0) * 1e-6, rel=1e-5)

    @pytest.mark.parametrize("x", [1e-6, 1e-4, 1e-3, 1e-2])
    def test_small_argument_against_extended_precision(self, x):
        expected = decimal_bracket(x)
        assert abs(escape_bracket(x) - expected) <= 1e-6 * abs(expected)
        k, M = 3.0, TRAP.M
        t = 2.0 * M * x / k ** 2
        closed = 2.0 * t / (TRAP.a ** 3 * M ** 3 * k ** 2) * abs(expected) ** 2
        assert spectral_F(k, t, TRAP) == pytest.approx(closed, rel=1e-6)

    def test_direct_bracket_on_a_large_batch(self):
        x = np.geomspace(1e-3, 64.0, 2000)
        values = escape_bracket(x, "direct")
        z = np.exp(-0.25j * math.pi) * np.sqrt(x)
        reference = 1.0 - np.sqrt(math.pi) / (2.0 * z) * np.exp(-1j * x) * erf(z)
        assert np.all(np.isfinite(values))
        np.testing.assert_allclose(values, reference, rtol=1e-9, atol=1e-14)
        for index in (0, 1000, 1999):
            expected = decimal_bracket(float(x[index]))
            assert abs(values[index] - expected) <= 1e-9 * abs(expected)

    def test_bracket_tends_to_one(self):
        assert abs(escape_bracket(1e4)) == pytest.approx(1.0, abs=0.02)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            escape_bracket(1.0, "spline")

    def test_transition_ratio_is_pi_over_a(self):
        t = 0.001
        for m in (2, 3, 5):
            k_m = m * math.pi
            ratio = transition_probability(m, 1, t, TRAP) / escape_spectrum(k_m, t, 1, TRAP)
            assert ratio == pytest.approx(math.pi, rel=1e-12)

    def test_spectrum_scales_with_level(self):
        k = np.array([10.0, 40.0])
        np.testing.assert_allclose(escape_spectrum(k, 0.001, 2, TRAP), 4.0 * spectral_F(k, 0.001, TRAP))

    def test_low_and_high_momentum_exponents(self):
        times = np.array([1e-4, 2e-4, 4e-4])
        low = [spectral_F(0.5, t, TRAP) for t in times]
        high = [spectral_F(5e4, t, TRAP) for t in times]
        assert np.polyfit(np.log(times), np.log(low), 1)[0] == pytest.approx(3.0, abs=0.1)
        assert np.polyfit(np.log(times), np.log(high), 1)[0] == pytest.approx(1.0, abs=0.1)

    def test_escape_matches_half_loss(self):
        t = 0.001
        expected = 0.5 * (t / zeno_time(1, TRAP).t_Z) ** 1.5
        assert escape_probability(t, 1, TRAP) == pytest.approx(expected, rel=0.05)

    def test_discrete_sum_matches_integral(self):
        t = 0.005
        continuum = escape_probability(t, 1, TRAP)
        assert escape_probability(t, 1, TRAP, b=8.0) == pytest.approx(continuum, rel=0.01)

    def test_transition_amplitude_integral(self):
        t = 0.001
        amplitude = transition_amplitude_integral(2, 1, t, TRAP)
        assert abs(amplitude) ** 2 == pytest.approx(transition_probability(2, 1, t, TRAP), rel=0.10)

    def test_transition_requires_distinct_levels(self):
        with pytest.raises(ValueError):
            transition_amplitude_integral(1, 1, 0.001, TRAP)
        with pytest.raises(ValueError):
            transition_probability(3, 3, 0.001, TRAP)


# ═══════════════════════════════════════════════════════════════
# Acoplamiento izquierda/derecha
# ═══════════════════════════════════════════════════════════════


class TestCoupling:

    def test_basis_is_diagonal_on_grid(self):
        config = TrapConfig.hard_wall(length=3.0)
        grid = make_grid(config, 601)
        walled = left_right_coupling(grid, Potential.hard_wall_box(grid, config), 3, 3, config)
        opened = left_right_coupling(grid, Potential.open_trap(grid), 3, 3, config)
        assert walled < 1e-9
        assert opened < 1e-9
