"""
Special - Funciones especiales y cuadratura

- complex_erf: Erf(z) en el plano complejo (serie de Maclaurin en precisión
  extendida para |z| <= 4, fracción continua de Laplace fuera)
- adaptive_gauss_legendre: Gauss–Legendre compuesto con duplicación de paneles
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from ..utils.errors import ComplexErfRangeError, ConvergenceError

logger = logging.getLogger(__name__)

SERIES_RADIUS = 4.0
# e^{-z²} por encima de e^700 desborda float64
OVERFLOW_EXPONENT = 700.0
MAX_SERIES_TERMS = 6000
MAX_FRACTION_TERMS = 20000
# convergencia por elemento de la fracción continua (unos pocos ulps)
FRACTION_TOL = 4.0 * np.finfo(float).eps

_LONG_EPS = np.finfo(np.longdouble).eps
_TWO_OVER_SQRT_PI = np.longdouble(2) / np.sqrt(np.longdouble(math.pi))


def complex_erf(z):
    """
    Función error Erf(z) = (2/√π)∫₀^z e^{-t²}dt para argumentos complejos

    Args:
        z: Escalar o array complejo

    Returns:
        Erf(z) con la misma forma (complex si la entrada es escalar)

    Raises:
        ComplexErfRangeError: si |e^{-z²}| desborda (|Im z| grande, |Re z| pequeño)
        ValueError: si z no es finito
    """
    values = np.asarray(z, dtype=np.complex128)
    flat = np.atleast_1d(values).ravel()
    if not np.all(np.isfinite(flat)):
        raise ValueError("complex_erf requires finite arguments")

    growth = -(flat * flat).real
    if np.any(growth > OVERFLOW_EXPONENT):
        worst = flat[int(np.argmax(growth))]
        raise ComplexErfRangeError(f"Erf({worst}) overflows double precision")

    result = np.empty_like(flat)
    use_fraction = (np.abs(flat) > SERIES_RADIUS) & (np.abs(flat.real) >= 1.0)
    if np.any(~use_fraction):
        result[~use_fraction] = _erf_series(flat[~use_fraction])
    if np.any(use_fraction):
        result[use_fraction] = _erf_continued_fraction(flat[use_fraction])

    if values.ndim == 0:
        return complex(result[0])
    return result.reshape(values.shape)


def _erf_series(z: np.ndarray) -> np.ndarray:
    """Maclaurin: (2/√π) Σ (-1)^k z^{2k+1} / (k!(2k+1)), acumulada en long double"""
    zl = z.astype(np.clongdouble)
    minus_z2 = -(zl * zl)
    term = zl.copy()
    total = zl.copy()
    for k in range(1, MAX_SERIES_TERMS):
        term = term * minus_z2 / k
        contribution = term / (2 * k + 1)
        total = total + contribution
        if np.all(np.abs(contribution) <= _LONG_EPS * np.abs(total)):
            break
    else:
        raise ConvergenceError("Maclaurin series for Erf did not converge")
    return (_TWO_OVER_SQRT_PI * total).astype(np.complex128)


def _erf_continued_fraction(z: np.ndarray) -> np.ndarray:
    """
    Erf = 1 - erfc con erfc(z) = e^{-z²}/√π · 1/(z + ½/(z + 1/(z + 3/2/(z + ...))))

    Válida para Re z > 0; el semiplano izquierdo usa Erf(-z) = -Erf(z).
    Lentz modificado por elemento: cada punto se congela al converger.
    """
    sign = np.where(z.real < 0, -1.0, 1.0)
    w = z * sign
    tiny = 1e-300

    f = w.copy()
    c = w.copy()
    d = np.zeros_like(w)
    active = np.ones(w.shape, dtype=bool)
    for j in range(1, MAX_FRACTION_TERMS):
        idx = np.flatnonzero(active)
        a_j = 0.5 * j
        d_a = w[idx] + a_j * d[idx]
        d_a = np.where(d_a == 0, tiny, d_a)
        d_a = 1.0 / d_a
        c_a = w[idx] + a_j / c[idx]
        c_a = np.where(c_a == 0, tiny, c_a)
        delta = c_a * d_a
        d[idx] = d_a
        c[idx] = c_a
        f[idx] = f[idx] * delta
        active[idx[np.abs(delta - 1.0) <= FRACTION_TOL]] = False
        if not active.any():
            break
    else:
        raise ConvergenceError(
            f"continued fraction for erfc did not converge at {int(active.sum())} points"
        )

    erfc = np.exp(-w * w) / (math.sqrt(math.pi) * f)
    return sign * (1.0 - erfc)


@dataclass
class QuadratureResult:
    """Resultado de una cuadratura adaptativa"""
    value: complex
    error: float
    panels: int


def _composite(func, lower, upper, panels, nodes, weights):
    edges = np.linspace(lower, upper, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    points = mid[:, None] + half[:, None] * nodes[None, :]
    samples = np.asarray(func(points.ravel())).reshape(points.shape)
    return complex(np.sum(samples * weights[None, :] * half[:, None]))


def adaptive_gauss_legendre(
    func: Callable[[np.ndarray], np.ndarray],
    lower: float,
    upper: float,
    *,
    order: int = 20,
    rtol: float = 1e-10,
    atol: float = 0.0,
    max_panels: int = 8192,
) -> QuadratureResult:
    """
    Integra `func` sobre [lower, upper] duplicando paneles hasta convergencia

    Args:
        func: Integrando vectorizado (array de nodos -> array de valores)
        lower: Límite inferior
        upper: Límite superior
        order: Nodos de Gauss–Legendre por panel
        rtol: Tolerancia relativa entre estimaciones sucesivas
        atol: Tolerancia absoluta
        max_panels: Máximo número de paneles

    Returns:
        QuadratureResult con valor, error estimado y paneles usados

    Raises:
        ConvergenceError: si no se alcanza la tolerancia
    """
    nodes, weights = roots_legendre(order)
    panels = 1
    previous = _composite(func, lower, upper, panels, nodes, weights)
    while True:
        panels *= 2
        current = _composite(func, lower, upper, panels, nodes, weights)
        error = abs(current - previous)
        if error <= max(rtol * abs(current), atol):
            return QuadratureResult(current, error, panels)
        if panels >= max_panels:
            raise ConvergenceError(
                f"Gauss-Legendre did not converge on [{lower}, {upper}] "
                f"(estimate={current}, error={error:.3e}, panels={panels})",
                estimate=abs(current), error=error,
            )
        previous = current
