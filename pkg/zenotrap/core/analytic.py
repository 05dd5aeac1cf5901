"""
Analytic - Fórmulas cerradas y de cuadratura para la trampa abierta

Responsabilidades:
- Base izquierda/derecha, energías y horizonte de validez
- Onda emitida δψ(x,t) desde el borde de la trampa
- Amplitud de supervivencia (integral doble y expansión t^{3/2})
- Tiempo de Zeno anómalo, tasas, espectros de escape y relación P = (1+S)/2
- Diagnóstico de momentos de energía (línea base cuadrática)
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..models.models import Barrier, TrapConfig, ZenoRateKind
from ..utils.errors import ConvergenceError
from .grid import Grid1D, PROBABILITY_SLACK, WaveFunction
from .special import adaptive_gauss_legendre, complex_erf

logger = logging.getLogger(__name__)

# e^{-iπ/4} = √(1/i)
PHASE_MINUS_PI_4 = cmath.exp(-0.25j * math.pi)

SERIES_SWITCH = 1e-3
SERIES_TERMS = 12
# corte de la cuadratura de escape en x = E·t
ESCAPE_X_CUT = 2500.0
ESCAPE_X_EDGES = (0.0, 1.0, 10.0, 100.0, 500.0, ESCAPE_X_CUT)
# inicio de la ley t^{3/2} sobre un escalón finito, en unidades de M·δ²
STEP_ONSET_FACTOR = 100.0


@dataclass(frozen=True)
class LeftMode:
    """Modo interior φ_n^L"""
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class RightMode:
    """Modo exterior φ_k^R"""
    k: float

    def __post_init__(self):
        if not self.k >= 0:
            raise ValueError(f"k must be >= 0, got {self.k}")


@dataclass(frozen=True)
class SurvivalAmplitude:
    """A^{n←n}(t) con el término de frontera separado"""
    value: complex
    t: float
    n: int
    boundary: complex
    energy: float

    @property
    def probability(self) -> float:
        return abs(self.value) ** 2

    @property
    def expansion_value(self) -> complex:
        """1 − iE_n t + frontera: comparable término a término con la forma corta"""
        return 1.0 - 1j * self.energy * self.t + self.boundary


@dataclass(frozen=True)
class ZenoTimes:
    t_Z: float
    n: int
    t_Z_N: Optional[float] = None


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")


def eigenmode(mode: Union[LeftMode, RightMode], x, config: TrapConfig):
    """
    Amplitud real de φ_n^L o φ_k^R en x

    Args:
        mode: LeftMode(n) o RightMode(k)
        x: Posición (escalar o array, x >= 0)
        config: Geometría de la trampa

    Returns:
        Amplitud con la forma de x
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise ValueError("eigenmode requires x >= 0")
    a = config.a
    if isinstance(mode, LeftMode):
        values = np.where(xs <= a, math.sqrt(2.0 / a) * np.sin(mode.n * math.pi * xs / a), 0.0)
    elif isinstance(mode, RightMode):
        values = np.where(xs >= a, math.sqrt(2.0 / math.pi) * np.sin(mode.k * (xs - a)), 0.0)
    else:
        raise TypeError(f"unknown mode {mode!r}")
    return float(values) if values.ndim == 0 else values


def bound_energy(n: int, config: TrapConfig) -> float:
    _check_n(n)
    return n ** 2 * math.pi ** 2 / (2.0 * config.M * config.a ** 2)


def free_energy(k, config: TrapConfig):
    ks = np.asarray(k, dtype=float)
    if np.any(ks < 0):
        raise ValueError("k must be >= 0")
    energy = ks ** 2 / (2.0 * config.M)
    return float(energy) if energy.ndim == 0 else energy


def validity_horizon(n: int, config: TrapConfig) -> float:
    """2t0/(π²n²): tiempo que tarda δψ en alcanzar la pared x = 0"""
    _check_n(n)
    return 2.0 * config.t0 / (math.pi ** 2 * n ** 2)


def penetration_depth(n: int, config: TrapConfig) -> float:
    """
    Longitud de decaimiento δ = 1/√(2M(V0 − E_n)) de la cola del estado bajo el escalón

    Devuelve 0 para la caja de paredes duras.
    """
    _check_n(n)
    if config.barrier == Barrier.HARD_WALL:
        return 0.0
    gap = config.V0 - bound_energy(n, config)
    if gap <= 0:
        raise ValueError(f"level {n} is not bound under V0={config.V0}")
    return 1.0 / math.sqrt(2.0 * config.M * gap)


def effective_edge(n: int, config: TrapConfig) -> float:
    """Borde efectivo a + δ: la onda emitida es simétrica respecto de este punto"""
    return config.a + penetration_depth(n, config)


def step_onset_time(n: int, config: TrapConfig) -> float:
    """
    Tiempo a partir del cual el escalón finito actúa como un borde abrupto

    La ley t^{3/2} requiere que la dispersión √(t/M) supere con holgura a δ;
    por debajo domina el redondeo de la cola. Vale 0 para paredes duras.
    """
    depth = penetration_depth(n, config)
    return STEP_ONSET_FACTOR * config.M * depth ** 2


def boundary_derivative(n: int, config: TrapConfig) -> float:
    """φ_n^L'(a) = (2/a)^{1/2}(nπ/a)(−1)^n"""
    _check_n(n)
    a = config.a
    return math.sqrt(2.0 / a) * (n * math.pi / a) * (-1) ** n


def free_propagator(dx, t: float, M: float):
    """
    Propagador libre G(dx,t) = √(M/2πit)·exp[iM·dx²/2t]

    Raises:
        ValueError: si t <= 0
    """
    _check_t(t)
    d = np.asarray(dx, dtype=float)
    kernel = math.sqrt(M / (2.0 * math.pi * t)) * PHASE_MINUS_PI_4 * np.exp(0.5j * M * d ** 2 / t)
    return complex(kernel) if kernel.ndim == 0 else kernel


def _warn_horizon(t: float, n: int, config: TrapConfig, where: str) -> None:
    horizon = validity_horizon(n, config)
    if t > horizon:
        logger.warning(f"[WARN] {where}: t={t:.3e} beyond validity horizon {horizon:.3e} (n={n})")
    elif t > 0.1 * horizon:
        logger.debug(f"[INFO] {where}: t={t:.3e} is {t / horizon:.2f} of the validity horizon")


# ═══════════════════════════════════════════════════════════════
# Onda emitida
# ═══════════════════════════════════════════════════════════════

def _emission_integral(alpha: float, t: float, energy: float, rtol: float) -> Tuple[complex, float]:
    """
    ∫₀^{√t} exp(iα/u² + iE·u²) du por el contorno 0 → w → √t, w = √t(1−i)/2

    En el primer tramo u² = −it s²/2, el integrando es real y decae como
    exp(−2α/t s²) en el origen; el segundo tramo no oscila más que e^{iα/t}.
    """
    root_t = math.sqrt(t)
    corner = root_t * (1.0 - 1.0j) / 2.0
    span = root_t - corner

    def first_leg(s):
        s2 = s * s
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            exponent = -2.0 * alpha / (t * s2) + 0.5 * energy * t * s2
            return np.exp(exponent) * corner

    def second_leg(s):
        u = corner + s * span
        u2 = u * u
        return np.exp(1j * alpha / u2 + 1j * energy * u2) * span

    atol = 1e-14 * root_t
    first = adaptive_gauss_legendre(first_leg, 0.0, 1.0, rtol=rtol, atol=atol)
    second = adaptive_gauss_legendre(second_leg, 0.0, 1.0, rtol=rtol, atol=atol)
    return first.value + second.value, first.error + second.error


def delta_psi(x, t: float, n: int, config: TrapConfig, *, rtol: float = 1e-10):
    """
    Onda emitida δψ(x,t) = (i/2M)∫₀ᵗ dt₁ G(x−a, t−t₁) e^{−iE_n t₁} φ_n^L'(a)

    Con u = √(t−t₁) el núcleo 1/√(t−t₁) desaparece y queda
    2√(M/2πi)·e^{−iE_n t}·∫₀^{√t} exp(iM(x−a)²/2u² + iE_n u²) du.

    Args:
        x: Posición o array de posiciones (x >= 0)
        t: Tiempo desde la apertura (0 < t)
        n: Nivel inicial
        config: Geometría de la trampa
        rtol: Tolerancia relativa de la cuadratura

    Returns:
        δψ con la forma de x

    Raises:
        ConvergenceError: si el error estimado supera 1e−8 del pico
    """
    _check_t(t)
    _check_n(n)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise ValueError("delta_psi requires x >= 0")
    _warn_horizon(t, n, config, "delta_psi")

    M = config.M
    energy = bound_energy(n, config)
    prefactor = ((0.5j / M) * boundary_derivative(n, config)
                 * 2.0 * math.sqrt(M / (2.0 * math.pi)) * PHASE_MINUS_PI_4
                 * cmath.exp(-1j * energy * t))

    flat = np.atleast_1d(xs).ravel()
    values = np.empty(flat.shape, dtype=np.complex128)
    errors = np.empty(flat.shape, dtype=float)
    for i, position in enumerate(flat):
        alpha = 0.5 * M * (position - config.a) ** 2
        integral, error = _emission_integral(alpha, t, energy, rtol)
        values[i] = prefactor * integral
        errors[i] = abs(prefactor) * error

    peak = float(np.max(np.abs(values)))
    worst = float(np.max(errors))
    if worst > 1e-8 * max(peak, np.finfo(float).tiny):
        raise ConvergenceError(
            f"delta_psi quadrature error {worst:.3e} exceeds 1e-8 of peak {peak:.3e}",
            estimate=peak, error=worst,
        )
    if xs.ndim == 0:
        return complex(values[0])
    return values.reshape(xs.shape)


# ═══════════════════════════════════════════════════════════════
# Amplitudes de supervivencia y transición
# ═══════════════════════════════════════════════════════════════

def _boundary_double_integral(outer_energy: float, inner_energy: float, t: float, M: float,
                              rtol: float) -> complex:
    """
    ∫₀ᵗ dt₂ e^{−iE_out(t−t₂)} ∫₀^{t₂} dt₁ G(0, t₂−t₁) e^{−iE_in t₁}

    Sustituciones t₂ = v², t₂ − t₁ = u², u = v·w: ambos integrandos quedan suaves.
    """
    kernel = 2.0 * math.sqrt(M / (2.0 * math.pi)) * PHASE_MINUS_PI_4

    def inner(v: float) -> complex:
        beta = inner_energy * v * v
        result = adaptive_gauss_legendre(lambda w: np.exp(1j * beta * w * w), 0.0, 1.0, rtol=rtol)
        return v * result.value

    def outer(vs):
        values = np.empty(vs.shape, dtype=np.complex128)
        for i, v in enumerate(vs):
            t2 = v * v
            phase = np.exp(-1j * outer_energy * (t - t2) - 1j * inner_energy * t2)
            values[i] = 2.0 * v * phase * kernel * inner(v)
        return values

    return adaptive_gauss_legendre(outer, 0.0, math.sqrt(t), rtol=rtol).value


def survival_amplitude_integral(t: float, n: int, config: TrapConfig, *,
                                rtol: float = 1e-10) -> SurvivalAmplitude:
    """
    A(t) = e^{−iE_n t} + término de frontera (integral doble en tiempos de cruce)

    Returns:
        SurvivalAmplitude; `expansion_value` da 1 − iE_n t + frontera
    """
    _check_t(t)
    _check_n(n)
    _warn_horizon(t, n, config, "survival_amplitude_integral")
    energy = bound_energy(n, config)
    strength = boundary_derivative(n, config) ** 2 / (2.0 * config.M) ** 2
    boundary = -strength * _boundary_double_integral(energy, energy, t, config.M, rtol)
    value = cmath.exp(-1j * energy * t) + boundary
    if abs(value) > 1.0 + PROBABILITY_SLACK:
        logger.warning(f"[WARN] |A({t:.3e})| = {abs(value):.12f} exceeds 1")
    return SurvivalAmplitude(value=value, t=t, n=n, boundary=boundary, energy=energy)


def anomalous_coefficient(n: int, config: TrapConfig) -> complex:
    """Coeficiente (√2 n² π^{3/2}/3M^{3/2}a³)·e^{−iπ/4} del término t^{3/2}"""
    _check_n(n)
    modulus = math.sqrt(2.0) * n ** 2 * math.pi ** 1.5 / (3.0 * config.M ** 1.5 * config.a ** 3)
    return modulus * PHASE_MINUS_PI_4


def survival_amplitude_short(t: float, n: int, config: TrapConfig) -> SurvivalAmplitude:
    """A ≈ 1 − iE_n t − c·e^{−iπ/4}·t^{3/2}"""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    _check_n(n)
    energy = bound_energy(n, config)
    boundary = -anomalous_coefficient(n, config) * t ** 1.5
    value = 1.0 - 1j * energy * t + boundary
    return SurvivalAmplitude(value=value, t=t, n=n, boundary=boundary, energy=energy)


def transition_amplitude_integral(m: int, n: int, t: float, config: TrapConfig, *,
                                  rtol: float = 1e-10) -> complex:
    """
    A^{m←n}(t) = −(2M)^{−2}φ_m'(a)φ_n'(a)·∫₀ᵗdt₂ e^{−iE_m(t−t₂)}∫₀^{t₂}dt₁ G(0,t₂−t₁)e^{−iE_n t₁}

    Raises:
        ValueError: si m == n
    """
    if m == n:
        raise ValueError("transition amplitude needs m != n; use survival_amplitude_integral")
    _check_t(t)
    strength = boundary_derivative(m, config) * boundary_derivative(n, config) / (2.0 * config.M) ** 2
    return -strength * _boundary_double_integral(
        bound_energy(m, config), bound_energy(n, config), t, config.M, rtol)


# ═══════════════════════════════════════════════════════════════
# Tiempo de Zeno y tasas
# ═══════════════════════════════════════════════════════════════

def zeno_time(n: int, config: TrapConfig) -> ZenoTimes:
    """t_Z(n) = 3^{2/3}Ma²/(2^{2/3}π n^{4/3})"""
    _check_n(n)
    t_z = 3.0 ** (2.0 / 3.0) * config.M * config.a ** 2 / (2.0 ** (2.0 / 3.0) * math.pi * n ** (4.0 / 3.0))
    return ZenoTimes(t_Z=t_z, n=n)


def survival_probability_short(t, n: int, config: TrapConfig):
    """S = 1 − (t/t_Z)^{3/2}, sin recortar a [0, 1]"""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise ValueError("t must be >= 0")
    survival = 1.0 - (ts / zeno_time(n, config).t_Z) ** 1.5
    return float(survival) if survival.ndim == 0 else survival


def zeno_rate(tau: float, t_Z: float, kind: ZenoRateKind = ZenoRateKind.ANOMALOUS) -> float:
    """
    Tasa de decaimiento bajo medidas cada τ

    Args:
        tau: Intervalo entre medidas
        t_Z: Tiempo de Zeno
        kind: ANOMALOUS (τ^{1/2}/t_Z^{3/2}) o CONVENTIONAL (τ/t_Z²)
    """
    if not (tau > 0 and t_Z > 0):
        raise ValueError(f"tau and t_Z must be positive (tau={tau}, t_Z={t_Z})")
    if ZenoRateKind(kind) == ZenoRateKind.ANOMALOUS:
        return math.sqrt(tau) / t_Z ** 1.5
    return tau / t_Z ** 2


def conventional_zeno_time(variance: float) -> float:
    """τ_Z = 1/√ΔH²; ∞ para un autoestado"""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return math.inf
    return 1.0 / math.sqrt(variance)


def survival_probability_conventional(t, t_Z: float):
    ts = np.asarray(t, dtype=float)
    survival = 1.0 - (ts / t_Z) ** 2
    return float(survival) if survival.ndim == 0 else survival


# ═══════════════════════════════════════════════════════════════
# Espectros de escape
# ═══════════════════════════════════════════════════════════════

def _bracket_direct(x: np.ndarray) -> np.ndarray:
    z = PHASE_MINUS_PI_4 * np.sqrt(x)
    return 1.0 - (math.sqrt(math.pi) / (2.0 * z)) * np.exp(-1j * x) * complex_erf(z)


def _bracket_series(x: np.ndarray) -> np.ndarray:
    """−Σ_{j≥1} 2^j(−ix)^j/(2j+1)!! = (2i/3)x + (4/15)x² − ..."""
    term = np.ones_like(x, dtype=np.complex128)
    total = np.zeros_like(x, dtype=np.complex128)
    for j in range(1, SERIES_TERMS + 1):
        term = term * (-2j * x) / (2 * j + 1)
        total = total - term
    return total


def escape_bracket(x, method: str = "auto"):
    """
    1 − (√π/2z)·e^{z²}·Erf(z) con z = e^{−iπ/4}√x, x = E·t

    Args:
        x: E·t (> 0), escalar o array
        method: "auto" (serie bajo 1e−3), "direct" o "series"
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("E·t must be positive")
    flat = np.atleast_1d(xs).ravel()
    if method == "direct":
        result = _bracket_direct(flat)
    elif method == "series":
        result = _bracket_series(flat)
    elif method == "auto":
        result = np.empty(flat.shape, dtype=np.complex128)
        small = flat < SERIES_SWITCH
        if np.any(small):
            result[small] = _bracket_series(flat[small])
        if np.any(~small):
            result[~small] = _bracket_direct(flat[~small])
    else:
        raise ValueError(f"unknown method '{method}'")
    return complex(result[0]) if xs.ndim == 0 else result.reshape(xs.shape)


def spectral_F(k, t: float, config: TrapConfig):
    """
    F(k,t) = (2t/a³M³k²)·|1 − (√(iπ)/2√(Et))·e^{−iEt}·Erf(√(−iEt))|²

    Returns:
        F con la forma de k
    """
    _check_t(t)
    ks = np.asarray(k, dtype=float)
    if np.any(ks <= 0):
        raise ValueError("k must be positive")
    bracket = escape_bracket(free_energy(ks, config) * t)
    values = 2.0 * t / (config.a ** 3 * config.M ** 3 * ks ** 2) * np.abs(bracket) ** 2
    return float(values) if np.ndim(values) == 0 else values


def escape_spectrum(k, t: float, n: int, config: TrapConfig):
    """W_n(k,t) ≈ n²F(k,t)"""
    _check_n(n)
    _warn_horizon(t, n, config, "escape_spectrum")
    return n ** 2 * spectral_F(k, t, config)


def transition_probability(m: int, n: int, t: float, config: TrapConfig) -> float:
    """W_{m←n} ≈ (πn²/a)·F(k_m,t) con k_m = mπ/a"""
    if m == n:
        raise ValueError("transition probability needs m != n; survival is handled separately")
    _check_n(m)
    _check_n(n)
    k_m = m * math.pi / config.a
    return math.pi * n ** 2 / config.a * spectral_F(k_m, t, config)


def escape_probability(t: float, n: int, config: TrapConfig, b: Optional[float] = None) -> float:
    """
    ∫₀^∞ W_n(k,t)dk, o Σ_m W_n(mπ/b,t)·π/b si se da la longitud exterior b

    La integral continua se hace en x = E·t, donde ∫F dk ∝ t^{3/2}∫|·|²x^{−3/2}dx;
    más allá del corte se suma la cola analítica de 2t/k².
    """
    _check_t(t)
    _check_n(n)
    M, a = config.M, config.a
    k_cut = math.sqrt(2.0 * M * ESCAPE_X_CUT / t)
    tail = 2.0 * t / (a ** 3 * M ** 3 * k_cut) * (1.0 + math.pi / (12.0 * ESCAPE_X_CUT))

    if b is not None:
        if b <= 0:
            raise ValueError(f"b must be positive, got {b}")
        dk = math.pi / b
        ks = dk * np.arange(1, int(math.ceil(k_cut / dk)) + 1)
        return float(n ** 2 * (np.sum(spectral_F(ks, t, config)) * dk + tail))

    def integrand(x):
        return np.abs(escape_bracket(x)) ** 2 * x ** -1.5

    total = 0.0
    for lo, hi in zip(ESCAPE_X_EDGES[:-1], ESCAPE_X_EDGES[1:]):
        total += adaptive_gauss_legendre(integrand, lo, hi, rtol=1e-9, atol=1e-14).value.real
    scale = t ** 1.5 * math.sqrt(2.0 * M) / (2.0 * a ** 3 * M ** 4)
    return float(n ** 2 * (scale * total + tail))


def nonescape_from_survival(S):
    """P ≈ (1 + S)/2"""
    values = np.asarray(S, dtype=float)
    if np.any(values < -PROBABILITY_SLACK) or np.any(values > 1.0 + PROBABILITY_SLACK):
        raise ValueError("S must lie in [0, 1]")
    result = 0.5 * (1.0 + values)
    return float(result) if result.ndim == 0 else result


# ═══════════════════════════════════════════════════════════════
# Diagnósticos sobre la rejilla
# ═══════════════════════════════════════════════════════════════

def energy_moments(psi: WaveFunction, config: TrapConfig, potential=None) -> Tuple[float, float]:
    """
    ⟨H⟩ y ⟨H²⟩ − ⟨H⟩² con el hamiltoniano de diferencias finitas

    Args:
        psi: Estado (se normaliza internamente)
        config: Trampa (masa)
        potential: Potential de tdse; por defecto la trampa abierta

    Returns:
        (media, varianza)
    """
    from .tdse import Potential

    if potential is None:
        potential = Potential.open_trap(psi.grid)
    potential.grid.require_same(psi.grid)
    norm_sq = psi.recomputed_norm_sq()
    if norm_sq <= 0:
        raise ValueError("energy_moments requires a non-zero state")
    h_psi = potential.apply(psi.amplitudes, config.M)
    dx = psi.grid.dx
    mean = float(np.real(np.vdot(psi.amplitudes, h_psi)) * dx / norm_sq)
    second = float(np.sum(np.abs(h_psi) ** 2) * dx / norm_sq)
    return mean, max(second - mean ** 2, 0.0)


def left_right_coupling(grid: Grid1D, potential, n_max: int, m_max: int, config: TrapConfig) -> float:
    """max |⟨φ_n^L|H|φ_{k_m}^R⟩| con modos exteriores k_m = mπ/(L−a)"""
    x = grid.x
    a = config.a
    exterior = config.L - a
    h_right = []
    for m in range(1, m_max + 1):
        right = np.where(x >= a, math.sqrt(2.0 / exterior) * np.sin(m * math.pi * (x - a) / exterior), 0.0)
        right[-1] = 0.0
        h_right.append(potential.apply(right.astype(np.complex128), config.M))
    worst = 0.0
    for n in range(1, n_max + 1):
        left = eigenmode(LeftMode(n), x, config)
        for h_r in h_right:
            worst = max(worst, abs(np.dot(left, h_r)) * grid.dx)
    return worst
