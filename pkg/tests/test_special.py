"""
Tests de Erf complejo y de la cuadratura de Gauss–Legendre

Oráculos: scipy.special.erf y la serie de Maclaurin en aritmética decimal.
"""
import cmath
import math
from decimal import Decimal, localcontext

import numpy as np
import pytest
from scipy.special import erf

from zenotrap.core.special import adaptive_gauss_legendre, complex_erf
from zenotrap.utils.errors import ComplexErfRangeError, ConvergenceError

PI_DIGITS = "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899"


def decimal_erf(z: complex, digits: int = 90) -> complex:
    """Serie de Maclaurin de Erf con parte real e imaginaria en Decimal"""
    with localcontext() as ctx:
        ctx.prec = digits
        re, im = Decimal(z.real), Decimal(z.imag)
        m_re, m_im = -(re * re - im * im), -(2 * re * im)
        t_re, t_im = re, im
        s_re, s_im = re, im
        threshold = Decimal(10) ** -(digits - 20)
        k = 0
        while True:
            k += 1
            t_re, t_im = (t_re * m_re - t_im * m_im) / k, (t_re * m_im + t_im * m_re) / k
            s_re += t_re / (2 * k + 1)
            s_im += t_im / (2 * k + 1)
            if k > 10 and abs(t_re) + abs(t_im) < threshold:
                break
        scale = 2 / Decimal(PI_DIGITS).sqrt()
        return complex(float(s_re * scale), float(s_im * scale))


# ═══════════════════════════════════════════════════════════════
# complex_erf
# ═══════════════════════════════════════════════════════════════


class TestComplexErf:

    @pytest.mark.parametrize("radius", [0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0])
    def test_ray_against_decimal_series(self, radius):
        z = radius * cmath.exp(-0.25j * math.pi)
        expected = decimal_erf(z)
        assert abs(complex_erf(z) - expected) <= 1e-12 * max(1.0, abs(expected))

    def test_matches_scipy_on_a_lattice(self):
        re, im = np.meshgrid(np.linspace(-5.5, 5.5, 23), np.linspace(-3.5, 3.5, 15))
        z = re + 1j * im
        np.testing.assert_allclose(complex_erf(z), erf(z), rtol=1e-11, atol=1e-13)

    def test_real_axis(self):
        x = np.linspace(-3.0, 3.0, 13)
        np.testing.assert_allclose(complex_erf(x).real, erf(x), rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(complex_erf(x).imag, 0.0, atol=1e-15)

    def test_odd_symmetry(self):
        z = 2.3 - 1.7j
        assert complex_erf(-z) == pytest.approx(-complex_erf(z), rel=1e-14)

    def test_large_batch_on_fraction_ray(self):
        # 1000 puntos, todos en la región de la fracción continua, en una sola llamada
        radius = np.linspace(4.1, 8.0, 1000)
        z = radius * np.exp(-0.25j * math.pi)
        values = complex_erf(z)
        assert values.shape == (1000,)
        np.testing.assert_allclose(values, erf(z), rtol=1e-12, atol=1e-13)
        for index in (0, 499, 999):
            expected = decimal_erf(complex(z[index]))
            assert abs(values[index] - expected) <= 1e-12 * max(1.0, abs(expected))

    @pytest.fixture
    def random_batch(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(-6.0, 6.0, 1000) + 1j * rng.uniform(-6.0, 6.0, 1000)
        in_fraction = (np.abs(z) > 4.0) & (np.abs(z.real) >= 1.0)
        assert in_fraction.any() and (~in_fraction).any()
        return z

    def test_batched_conjugation_symmetry(self, random_batch):
        np.testing.assert_allclose(
            complex_erf(np.conj(random_batch)), np.conj(complex_erf(random_batch)),
            rtol=1e-13, atol=1e-15,
        )

    def test_batched_odd_symmetry(self, random_batch):
        np.testing.assert_allclose(
            complex_erf(-random_batch), -complex_erf(random_batch), rtol=1e-13, atol=1e-15
        )

    def test_random_batch_matches_scipy(self, random_batch):
        np.testing.assert_allclose(complex_erf(random_batch), erf(random_batch), rtol=1e-10, atol=1e-13)

    def test_scalar_returns_complex(self):
        assert isinstance(complex_erf(0.5), complex)
        assert complex_erf(0.0) == 0

    def test_overflow_region(self):
        with pytest.raises(ComplexErfRangeError):
            complex_erf(30j)

    def test_non_finite_input(self):
        with pytest.raises(ValueError):
            complex_erf(complex("nan"))


# ═══════════════════════════════════════════════════════════════
# adaptive_gauss_legendre
# ═══════════════════════════════════════════════════════════════


class TestQuadrature:

    def test_sine(self):
        result = adaptive_gauss_legendre(np.sin, 0.0, math.pi)
        assert result.value.real == pytest.approx(2.0, abs=1e-13)
        assert result.error <= 1e-10 * 2.0

    def test_complex_oscillation(self):
        result = adaptive_gauss_legendre(lambda x: np.exp(1j * 40.0 * x), 0.0, 1.0)
        expected = (cmath.exp(40j) - 1.0) / 40j
        assert abs(result.value - expected) < 1e-12

    def test_failure_raises(self):
        with pytest.raises(ConvergenceError) as info:
            adaptive_gauss_legendre(lambda x: np.sin(1e5 * x), 0.0, 1.0, max_panels=4)
        assert info.value.error is not None
