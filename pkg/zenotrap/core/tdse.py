"""
TDSE - Oráculo numérico: Crank–Nicolson sobre la rejilla

Responsabilidades:
- Potenciales (caja de paredes duras, escalón finito, trampa abierta)
- Propagador CN con factorización LU cacheada por (rejilla, potencial, dt)
- Estados ligados por tiempo imaginario con Gram–Schmidt
- Observables: S, P, corriente, espectro exterior, descomposición L/R
"""
from __future__ import annotations

import cmath
import logging
import math
import sys
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.fft import dst
from scipy.sparse.linalg import splu
from tqdm import tqdm

from ..models.models import Barrier, TrapConfig
from ..utils.errors import ConfigError, ConvergenceError, GridMismatchError
from .grid import Grid1D, MomentumSpectrum, SpectralDecomposition, TimeSeries, WaveFunction, make_grid

logger = logging.getLogger(__name__)

RUN_DRIFT_TOLERANCE = 1e-9
IMAGINARY_DTAU = 0.05
IMAGINARY_MAX_ITERATIONS = 20000
IMAGINARY_MIN_ITERATIONS = 5
ENERGY_RTOL = 1e-10
STATE_TOL = 1e-9
SPECTRUM_TAIL_LIMIT = 0.01
PROPAGATOR_CACHE_SIZE = 64


# ═══════════════════════════════════════════════════════════════
# Potenciales
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class Potential:
    """
    Potencial muestreado en la rejilla

    `walls` son nodos interiores tratados como paredes de Dirichlet: se
    desacoplan de sus vecinos y su amplitud permanece nula.
    """
    grid: Grid1D
    values: np.ndarray
    label: str
    walls: Tuple[int, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} potential values, got {values.shape}")
        if not np.all(np.isfinite(values[1:-1])):
            raise ValueError("potential must be finite at interior points")
        for wall in self.walls:
            if not 0 < wall < self.grid.n_points - 1:
                raise ValueError(f"wall node {wall} is not interior")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def hard_wall_box(cls, grid: Grid1D, config: TrapConfig) -> "Potential":
        """Caja cerrada: V = 0 y pared de Dirichlet en el nodo de x = a"""
        wall = grid.locate(config.a)
        return cls(grid, np.zeros(grid.n_points), "hard_wall_box", (wall,))

    @classmethod
    def step_trap(cls, grid: Grid1D, config: TrapConfig) -> "Potential":
        """V = 0 para x < a, V0 desde el nodo de x = a inclusive"""
        if config.V0 is None or config.V0 <= 0:
            raise ConfigError("step trap requires V0 > 0")
        step = grid.locate(config.a)
        values = np.zeros(grid.n_points)
        values[step:] = config.V0
        return cls(grid, values, "step_trap")

    @classmethod
    def open_trap(cls, grid: Grid1D) -> "Potential":
        """Trampa con el láser en x = a apagado: V = 0 en (0, L)"""
        return cls(grid, np.zeros(grid.n_points), "open_trap")

    @classmethod
    def initial(cls, grid: Grid1D, config: TrapConfig) -> "Potential":
        """Potencial de preparación según la barrera configurada"""
        if config.barrier == Barrier.HARD_WALL:
            return cls.hard_wall_box(grid, config)
        return cls.step_trap(grid, config)

    def diagonals(self, M: float) -> Tuple[np.ndarray, np.ndarray]:
        """Diagonal y subdiagonal de H sobre los nodos interiores 1..N−2"""
        dx = self.grid.dx
        kinetic = 1.0 / (M * dx * dx)
        diag = kinetic + self.values[1:-1].copy()
        off = np.full(self.grid.n_points - 3, -0.5 * kinetic)
        for wall in self.walls:
            i = wall - 1
            diag[i] = kinetic
            if i > 0:
                off[i - 1] = 0.0
            if i < off.size:
                off[i] = 0.0
        return diag, off

    def matrix(self, M: float) -> sparse.csc_matrix:
        diag, off = self.diagonals(M)
        return sparse.diags([off, diag, off], [-1, 0, 1], format="csc")

    def apply(self, amplitudes: np.ndarray, M: float) -> np.ndarray:
        """H·ψ sobre el vector completo (extremos y paredes a cero)"""
        values = np.asarray(amplitudes, dtype=np.complex128)
        result = np.zeros_like(values)
        result[1:-1] = self.matrix(M) @ values[1:-1]
        for wall in self.walls:
            result[wall] = 0.0
        return result


def interior_weights(grid: Grid1D, a: float) -> np.ndarray:
    """
    Pesos de trapecio para ∫₀^a con interpolación lineal en la celda del borde

    Si a cae en un nodo: 1 para x < a y 1/2 en el nodo de a.
    """
    position = (a - grid.x_min) / grid.dx
    edge = int(math.floor(position + 1e-9))
    if not 0 <= edge < grid.n_points - 1:
        raise ValueError(f"edge {a} lies outside the grid")
    fraction = max(position - edge, 0.0)
    weights = np.zeros(grid.n_points)
    weights[:edge] = 1.0
    weights[edge] = 0.5 + fraction - 0.5 * fraction ** 2
    weights[edge + 1] = 0.5 * fraction ** 2
    return weights


def rayleigh_energy(psi: WaveFunction, potential: Potential, M: float) -> float:
    potential.grid.require_same(psi.grid)
    h_psi = potential.apply(psi.amplitudes, M)
    return float(np.real(np.vdot(psi.amplitudes, h_psi)) * psi.grid.dx / psi.recomputed_norm_sq())


# ═══════════════════════════════════════════════════════════════
# Propagación en tiempo real
# ═══════════════════════════════════════════════════════════════

class PropagatorCN:
    """
    Paso de Crank–Nicolson (1 + i dt H/2) ψ' = (1 − i dt H/2) ψ

    La matriz implícita se factoriza una vez con splu; una instancia no se
    comparte entre hilos mientras avanza.
    """

    def __init__(self, potential: Potential, dt: float, M: float = 1.0):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.potential = potential
        self.grid = potential.grid
        self.dt = dt
        self.M = M
        hamiltonian = potential.matrix(M)
        identity = sparse.identity(hamiltonian.shape[0], dtype=np.complex128, format="csc")
        self._implicit = splu((identity + 0.5j * dt * hamiltonian).tocsc())
        self._explicit = (identity - 0.5j * dt * hamiltonian).tocsr()

    def step_amplitudes(self, values: np.ndarray) -> np.ndarray:
        result = np.zeros(values.shape, dtype=np.complex128)
        result[1:-1] = self._implicit.solve(self._explicit @ values[1:-1])
        return result

    def step(self, psi: WaveFunction) -> WaveFunction:
        self.grid.require_same(psi.grid)
        return WaveFunction(self.grid, self.step_amplitudes(psi.amplitudes))


def evolve(psi: WaveFunction, propagator: PropagatorCN, n_steps: int, *,
           progress: bool = False) -> WaveFunction:
    """
    Aplica n_steps pasos CN

    Args:
        psi: Estado inicial
        propagator: Propagador sobre la misma rejilla
        n_steps: Número de pasos (>= 0)
        progress: Barra tqdm en stderr

    Returns:
        Estado evolucionado

    Raises:
        GridMismatchError: si las rejillas difieren
    """
    if not propagator.grid.same_as(psi.grid):
        raise GridMismatchError("wavefunction and propagator live on different grids")
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    values = psi.amplitudes.copy()
    steps = range(n_steps)
    if progress:
        steps = tqdm(steps, desc="  CN", unit="step", leave=False, file=sys.stderr)
    for _ in steps:
        values = propagator.step_amplitudes(values)
    result = WaveFunction(psi.grid, values)

    if psi.norm_sq > 0:
        drift = abs(result.norm_sq - psi.norm_sq) / psi.norm_sq
        if drift > RUN_DRIFT_TOLERANCE:
            logger.warning(f"[TDSE] norm drift {drift:.3e} after {n_steps} steps (dt={propagator.dt:.3e})")
        else:
            logger.debug(f"[TDSE] norm drift {drift:.3e} after {n_steps} steps")
    return result


@dataclass(frozen=True)
class TimeStepSchedule:
    """dt_short hasta switch, dt_long después; cada tramo se ajusta a un número entero de pasos"""
    dt_short: float = 1e-6
    dt_long: float = 1e-5
    switch: float = 0.01

    def __post_init__(self):
        if not (self.dt_short > 0 and self.dt_long > 0):
            raise ValueError("time steps must be positive")
        if self.switch < 0:
            raise ValueError("switch time must be >= 0")

    def segments(self, t_from: float, t_to: float) -> List[Tuple[int, float]]:
        """Lista de (pasos, dt efectivo) que lleva de t_from a t_to"""
        if t_to < t_from:
            raise ValueError("cannot propagate backwards in time")
        pieces = []
        if t_from < self.switch < t_to:
            pieces.append((t_from, self.switch, self.dt_short))
            pieces.append((self.switch, t_to, self.dt_long))
        else:
            base = self.dt_short if t_from < self.switch else self.dt_long
            pieces.append((t_from, t_to, base))
        result = []
        for start, stop, base in pieces:
            span = stop - start
            if span <= 0:
                continue
            steps = max(1, int(math.ceil(span / base - 1e-9)))
            result.append((steps, span / steps))
        return result


class OpenTrapEvolver:
    """Evolución tras apagar el láser, con un propagador cacheado por dt"""

    def __init__(self, grid: Grid1D, config: TrapConfig, schedule: Optional[TimeStepSchedule] = None,
                 *, progress: bool = False):
        self.grid = grid
        self.config = config
        self.schedule = schedule or TimeStepSchedule()
        self.potential = Potential.open_trap(grid)
        self.progress = progress
        self._cache: Dict[str, PropagatorCN] = {}

    def propagator(self, dt: float) -> PropagatorCN:
        key = f"{dt:.15e}"
        if key not in self._cache:
            if len(self._cache) >= PROPAGATOR_CACHE_SIZE:
                self._cache.clear()
            self._cache[key] = PropagatorCN(self.potential, dt, self.config.M)
        return self._cache[key]

    def advance(self, states: Sequence[WaveFunction], t_from: float, t_to: float) -> List[WaveFunction]:
        current = list(states)
        for steps, dt in self.schedule.segments(t_from, t_to):
            propagator = self.propagator(dt)
            current = [evolve(psi, propagator, steps, progress=self.progress) for psi in current]
        return current

    def snapshots(self, states0: Sequence[WaveFunction], times: Sequence[float]
                  ) -> Iterator[Tuple[float, List[WaveFunction]]]:
        """Genera (t, estados) en cada tiempo de muestreo (creciente, >= 0)"""
        for state in states0:
            self.grid.require_same(state.grid)
        current = list(states0)
        clock = 0.0
        for t in times:
            if t < clock:
                raise ValueError("sample times must be increasing")
            current = self.advance(current, clock, t)
            clock = t
            yield t, current


# ═══════════════════════════════════════════════════════════════
# Tiempo imaginario
# ═══════════════════════════════════════════════════════════════

def count_bound_states(config: TrapConfig, grid: Optional[Grid1D] = None) -> int:
    """
    Estados ligados del escalón: floor(a√(2MV0)/π + 1/2)

    En la caja de paredes duras sólo limita la rejilla (nodos interiores de [0, a]).
    """
    if config.barrier == Barrier.HARD_WALL:
        if grid is None:
            return sys.maxsize
        return grid.locate(config.a) - 1
    return int(math.floor(config.a * math.sqrt(2.0 * config.M * config.V0) / math.pi + 0.5))


def _interior_guess(grid: Grid1D, config: TrapConfig, level: int) -> np.ndarray:
    x = grid.x[1:-1]
    return np.where(x < config.a, np.sin(level * math.pi * x / config.a), 0.0)


def _project_out(vector: np.ndarray, lower: Sequence[np.ndarray], dx: float) -> np.ndarray:
    # dos pasadas de Gram–Schmidt
    for _ in range(2):
        for state in lower:
            vector = vector - np.dot(state, vector) * dx * state
    return vector


def bound_states(potential: Potential, grid: Grid1D, config: TrapConfig, count: int, *,
                 dtau: float = IMAGINARY_DTAU,
                 max_iterations: int = IMAGINARY_MAX_ITERATIONS) -> List[WaveFunction]:
    """
    Los `count` estados ligados más bajos por tiempo imaginario

    Cada iteración resuelve (1 + dτ·H)φ' = φ, proyecta fuera los estados
    inferiores y normaliza. Converge cuando el cociente de Rayleigh cambia
    menos de 1e−10 relativo y el estado menos de 1e−9 en norma L².

    Args:
        potential: Potencial de preparación
        grid: Rejilla
        config: Trampa
        count: Número de estados (>= 1)
        dtau: Paso de tiempo imaginario
        max_iterations: Tope de iteraciones por estado

    Returns:
        Lista de WaveFunction reales y normalizadas, en orden de energía

    Raises:
        ConfigError: si se piden más estados de los que admite el escalón
        ConvergenceError: si se alcanza el tope de iteraciones
    """
    potential.grid.require_same(grid)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    available = count_bound_states(config, grid)
    if count > available:
        raise ConfigError(f"requested {count} bound states but the trap holds {available}")

    dx = grid.dx
    hamiltonian = potential.matrix(config.M)
    identity = sparse.identity(hamiltonian.shape[0], format="csc")
    solver = splu((identity + dtau * hamiltonian).tocsc())

    def rayleigh(vector: np.ndarray) -> float:
        return float(np.dot(vector, hamiltonian @ vector) * dx)

    found: List[np.ndarray] = []
    for level in range(1, count + 1):
        vector = _project_out(_interior_guess(grid, config, level), found, dx)
        vector /= math.sqrt(np.dot(vector, vector) * dx)
        energy = rayleigh(vector)
        for iteration in range(1, max_iterations + 1):
            updated = _project_out(solver.solve(vector), found, dx)
            updated /= math.sqrt(np.dot(updated, updated) * dx)
            new_energy = rayleigh(updated)
            change = math.sqrt(np.dot(updated - vector, updated - vector) * dx)
            vector = updated
            stationary = abs(new_energy - energy) <= ENERGY_RTOL * abs(new_energy)
            energy = new_energy
            if iteration >= IMAGINARY_MIN_ITERATIONS and stationary and change <= STATE_TOL:
                logger.info(f"[TDSE] bound state {level}: E={energy:.10f} after {iteration} iterations")
                break
        else:
            raise ConvergenceError(
                f"imaginary time did not converge for level {level} after {max_iterations} iterations",
                estimate=energy,
            )
        found.append(vector)

    states = []
    for vector in found:
        full = np.zeros(grid.n_points, dtype=np.complex128)
        full[1:-1] = vector
        states.append(WaveFunction(grid, full))
    return states


def ground_state(potential: Potential, grid: Grid1D, config: TrapConfig, n_target: int = 1,
                 **kwargs) -> WaveFunction:
    """Estado ligado número n_target (1 = fundamental)"""
    if n_target < 1:
        raise ValueError(f"n_target must be >= 1, got {n_target}")
    return bound_states(potential, grid, config, n_target, **kwargs)[-1]


def prepare_states(grid: Grid1D, config: TrapConfig, count: int) -> List[WaveFunction]:
    """Estados iniciales de la trampa cerrada según config.barrier"""
    return bound_states(Potential.initial(grid, config), grid, config, count)


# ═══════════════════════════════════════════════════════════════
# Observables
# ═══════════════════════════════════════════════════════════════

def survival_numeric(psi0: WaveFunction, psi_t: WaveFunction) -> float:
    """S = |⟨ψ₀|ψ(t)⟩|²"""
    return abs(psi0.inner(psi_t)) ** 2


def nonescape_numeric(psi_t: WaveFunction, config: TrapConfig, edge: Optional[float] = None) -> float:
    """P = ∫₀^c |ψ|² dx con c = config.a salvo que se indique otro borde"""
    weights = interior_weights(psi_t.grid, config.a if edge is None else edge)
    return float(np.sum(weights * np.abs(psi_t.amplitudes) ** 2) * psi_t.grid.dx)


def current_at(psi_t: WaveFunction, x: float, config: TrapConfig) -> float:
    """j = Im[ψ*·∂ₓψ]/M con diferencia centrada"""
    grid = psi_t.grid
    index = grid.locate(x)
    if not 0 < index < grid.n_points - 1:
        raise ValueError(f"x={x} is not an interior grid point")
    values = psi_t.amplitudes
    derivative = (values[index + 1] - values[index - 1]) / (2.0 * grid.dx)
    return float(np.imag(np.conj(values[index]) * derivative) / config.M)


def evolve_series(psi0: WaveFunction, grid: Grid1D, config: TrapConfig, times: Sequence[float], *,
                  schedule: Optional[TimeStepSchedule] = None,
                  observables: Sequence[str] = ("S", "P", "j"),
                  progress: bool = False,
                  edge: Optional[float] = None) -> Dict[str, TimeSeries]:
    """
    Propaga ψ₀ en la trampa abierta y registra observables en cada tiempo

    Args:
        psi0: Estado preparado en la trampa cerrada
        grid: Rejilla
        config: Trampa
        times: Tiempos de muestreo estrictamente crecientes
        schedule: Pasos de tiempo (por defecto 1e−6 / 1e−5 con cambio en 0.01)
        observables: Subconjunto de "S", "P", "j"
        progress: Barra tqdm
        edge: Borde de integración de P (por defecto config.a)

    Returns:
        Dict de TimeSeries por observable
    """
    unknown = set(observables) - {"S", "P", "j"}
    if unknown:
        raise ValueError(f"unknown observables: {sorted(unknown)}")
    evolver = OpenTrapEvolver(grid, config, schedule, progress=progress)
    records: Dict[str, List[float]] = {name: [] for name in observables}
    for _, (psi_t,) in evolver.snapshots([psi0], times):
        if "S" in records:
            records["S"].append(survival_numeric(psi0, psi_t))
        if "P" in records:
            records["P"].append(nonescape_numeric(psi_t, config, edge))
        if "j" in records:
            records["j"].append(current_at(psi_t, config.a, config))
    return {
        name: TimeSeries(label=name, times=np.asarray(times, dtype=float), values=np.asarray(values),
                         probability=(name != "j"))
        for name, values in records.items()
    }


def _sine_coefficients(values: np.ndarray, width: float, dx: float) -> np.ndarray:
    """√(2/width)·dx·Σ ψ_j sin(mπ j dx/width) por DST-I"""
    transform = dst(values.real, type=1) + 1j * dst(values.imag, type=1)
    return math.sqrt(2.0 / width) * dx * 0.5 * transform


def _exterior_coefficients(psi_t: WaveFunction, config: TrapConfig) -> Tuple[np.ndarray, float]:
    grid = psi_t.grid
    edge = grid.locate(config.a)
    intervals = grid.n_points - 1 - edge
    if intervals < 2:
        raise ValueError("exterior region is not resolved")
    width = intervals * grid.dx
    coefficients = _sine_coefficients(psi_t.amplitudes[edge + 1:-1], width, grid.dx)
    return coefficients, math.pi / width


def momentum_spectrum_numeric(psi_t: WaveFunction, config: TrapConfig,
                              m_cut: Optional[int] = None) -> MomentumSpectrum:
    """
    Densidad W(k_m) = |c_m|²/Δk en los modos exteriores k_m = mπ/(L−a)

    Raises:
        ConvergenceError: si la masa más allá de m_cut supera el 1% de la norma exterior
    """
    coefficients, dk = _exterior_coefficients(psi_t, config)
    weights = np.abs(coefficients) ** 2
    if m_cut is not None:
        if m_cut < 1:
            raise ValueError("m_cut must be >= 1")
        total = float(np.sum(weights))
        tail = float(np.sum(weights[m_cut:]))
        if total > 0 and tail > SPECTRUM_TAIL_LIMIT * total:
            raise ConvergenceError(
                f"exterior spectrum tail beyond m={m_cut} holds {tail / total:.2%} of the exterior norm",
                estimate=total, error=tail,
            )
        weights = weights[:m_cut]
    k = dk * np.arange(1, weights.size + 1)
    return MomentumSpectrum(k=k, density=weights / dk, discrete=True, dk=dk)


def decompose(psi_t: WaveFunction, config: TrapConfig, n_left_max: int, m_right_max: int) -> SpectralDecomposition:
    """b_n = ⟨φ_n^L|ψ⟩ y c_m = ⟨φ_{k_m}^R|ψ⟩ por cuadratura en la rejilla"""
    if n_left_max < 1 or m_right_max < 1:
        raise ValueError("cutoffs must be >= 1")
    grid = psi_t.grid
    edge = grid.locate(config.a)
    if n_left_max > edge - 1:
        raise ValueError(f"n_left_max={n_left_max} exceeds the {edge - 1} interior modes of the grid")
    left = _sine_coefficients(psi_t.amplitudes[1:edge], edge * grid.dx, grid.dx)[:n_left_max]
    right, dk = _exterior_coefficients(psi_t, config)
    if m_right_max > right.size:
        raise ValueError(f"m_right_max={m_right_max} exceeds the {right.size} exterior modes of the grid")
    return SpectralDecomposition(left_coeffs=left, right_coeffs=right[:m_right_max], dk=dk)


def emitted_wave(psi0: WaveFunction, psi_t: WaveFunction, energy: float, t: float) -> WaveFunction:
    """δψ = ψ(t) − e^{−iEt}ψ₀"""
    return psi_t - psi0.scaled(cmath.exp(-1j * energy * t))


def optical_theorem_residual(psi0: WaveFunction, psi_t: WaveFunction, energy: float, t: float) -> float:
    """|2Re⟨e^{−iEt}ψ₀|δψ⟩ + ⟨δψ|δψ⟩|"""
    rotated = psi0.scaled(cmath.exp(-1j * energy * t))
    delta = psi_t - rotated
    return abs(2.0 * rotated.inner(delta).real + delta.inner(delta).real)


def mirror_asymmetry(delta: WaveFunction, config: TrapConfig, xi_max: float) -> float:
    """max_ξ |δψ(a−ξ) − δψ(a+ξ)| / max|δψ|"""
    grid = delta.grid
    edge = grid.locate(config.a)
    reach = min(int(xi_max / grid.dx), edge - 1, grid.n_points - 2 - edge)
    if reach < 1:
        raise ValueError("xi_max does not cover any grid offset")
    values = delta.amplitudes
    offsets = np.arange(1, reach + 1)
    peak = float(np.max(np.abs(values)))
    if peak == 0:
        return 0.0
    return float(np.max(np.abs(values[edge - offsets] - values[edge + offsets])) / peak)


@dataclass(frozen=True)
class TdseSettings:
    """Resolución numérica de una corrida: nodos de la rejilla y pasos de tiempo"""
    n_points: int = 24001
    schedule: TimeStepSchedule = TimeStepSchedule()
    progress: bool = False

    def grid(self, config: TrapConfig) -> Grid1D:
        return make_grid(config, self.n_points)

    def evolver(self, grid: Grid1D, config: TrapConfig) -> OpenTrapEvolver:
        return OpenTrapEvolver(grid, config, self.schedule, progress=self.progress)
