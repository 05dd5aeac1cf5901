"""
Grid - Rejilla uniforme, funciones de onda y series temporales

Responsabilidades:
- Construir la rejilla [0, L] con los extremos incluidos
- Llevar la contabilidad de la norma de ψ (paredes de Dirichlet)
- Transportar S(t), P(t), W(t) y espectros entre módulos
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional

import numpy as np
from scipy.integrate import trapezoid

from ..models.models import TrapConfig
from ..utils.errors import GridMismatchError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
PROBABILITY_SLACK = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Rejilla uniforme sobre [x_min, x_max] con n_points nodos"""
    x_max: float
    n_points: int
    x_min: float = 0.0

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(f"n_points must be >= 3, got {self.n_points}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        nodes = np.linspace(self.x_min, self.x_max, self.n_points)
        nodes.flags.writeable = False
        return nodes

    def index_of(self, position: float) -> int:
        """Índice del nodo más cercano a `position`"""
        index = int(round((position - self.x_min) / self.dx))
        return min(max(index, 0), self.n_points - 1)

    def locate(self, position: float) -> int:
        """
        Índice del nodo de `position`, avisando si queda lejos de la rejilla

        Returns:
            índice del nodo más cercano
        """
        index = self.index_of(position)
        offset = abs(self.x[index] - position)
        if offset > self.dx:
            logger.warning(f"[GRID] x={position} lies {offset:.3e} from the nearest node (dx={self.dx:.3e})")
        elif offset > 1e-6 * self.dx:
            logger.info(f"[GRID] x={position} is off-node by {offset / self.dx:.3f} dx")
        return index

    def same_as(self, other: "Grid1D") -> bool:
        return (self.n_points == other.n_points
                and math.isclose(self.x_min, other.x_min, abs_tol=1e-15)
                and math.isclose(self.x_max, other.x_max, rel_tol=1e-15))

    def require_same(self, other: "Grid1D") -> None:
        if not self.same_as(other):
            raise GridMismatchError(
                f"grid mismatch: [{self.x_min}, {self.x_max}]x{self.n_points} "
                f"vs [{other.x_min}, {other.x_max}]x{other.n_points}"
            )


def make_grid(config: TrapConfig, n_points: int) -> Grid1D:
    """
    Construye la rejilla [0, L] de la trampa

    Args:
        config: Geometría de la trampa
        n_points: Número de nodos (>= 3)

    Returns:
        Grid1D con x = 0 y x = L incluidos

    Raises:
        ValueError: si n_points < 3 o L no es finito
    """
    if n_points < 3:
        raise ValueError(f"n_points must be >= 3, got {n_points}")
    if not math.isfinite(config.L):
        raise ValueError(f"L must be finite, got {config.L}")
    grid = Grid1D(x_max=config.L, n_points=n_points)
    grid.locate(config.a)
    return grid


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Amplitud compleja sobre la rejilla; ψ(0) = ψ(L) = 0"""
    grid: Grid1D
    amplitudes: np.ndarray
    norm_sq: float = field(init=False)

    def __post_init__(self):
        values = np.array(self.amplitudes, dtype=np.complex128)
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} amplitudes, got {values.shape}")
        if values[0] != 0 or values[-1] != 0:
            raise ValueError("Dirichlet walls require psi(0) = psi(L) = 0")
        values.flags.writeable = False
        object.__setattr__(self, "amplitudes", values)
        object.__setattr__(self, "norm_sq", _norm_sq(values, self.grid.dx))

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable[[np.ndarray], np.ndarray]) -> "WaveFunction":
        values = np.asarray(func(grid.x), dtype=np.complex128).copy()
        values[0] = 0.0
        values[-1] = 0.0
        return cls(grid, values)

    def recomputed_norm_sq(self) -> float:
        return _norm_sq(self.amplitudes, self.grid.dx)

    def inner(self, other: "WaveFunction", mask: Optional[np.ndarray] = None) -> complex:
        """⟨self|other⟩ por cuadratura en la rejilla (opcionalmente restringida)"""
        self.grid.require_same(other.grid)
        bra = np.conj(self.amplitudes)
        ket = other.amplitudes
        if mask is not None:
            bra = bra[mask]
            ket = ket[mask]
        return complex(np.dot(bra, ket) * self.grid.dx)

    def with_amplitudes(self, values: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, values)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        self.grid.require_same(other.grid)
        return WaveFunction(self.grid, self.amplitudes - other.amplitudes)

    def scaled(self, factor: complex) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes * factor)


def _norm_sq(values: np.ndarray, dx: float) -> float:
    return float(np.sum(np.abs(values) ** 2) * dx)


def normalize(psi: WaveFunction) -> WaveFunction:
    """
    Normaliza ψ a Σ|ψ|²dx = 1

    Raises:
        ValueError: si la norma es cero
    """
    norm_sq = psi.recomputed_norm_sq()
    if norm_sq <= 0.0 or not math.isfinite(norm_sq):
        raise ValueError("cannot normalize a zero-norm wavefunction")
    return psi.scaled(1.0 / math.sqrt(norm_sq))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Coeficientes b_n (interior) y c_m (modos exteriores k_m = mπ/(L−a))"""
    left_coeffs: np.ndarray
    right_coeffs: np.ndarray
    dk: float

    @property
    def k(self) -> np.ndarray:
        return self.dk * np.arange(1, len(self.right_coeffs) + 1)

    @property
    def right_density(self) -> np.ndarray:
        """|c_m|²/Δk, densidad en el continuo"""
        return np.abs(self.right_coeffs) ** 2 / self.dk

    def left_weight(self) -> float:
        return float(np.sum(np.abs(self.left_coeffs) ** 2))

    def right_weight(self) -> float:
        return float(np.sum(np.abs(self.right_coeffs) ** 2))

    def total_norm(self) -> float:
        return self.left_weight() + self.right_weight()


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Registros (t, valor); t estrictamente creciente"""
    label: str
    times: np.ndarray
    values: np.ndarray
    probability: bool = True
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError(f"{self.label}: times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if self.probability and self.out_of_range:
            logger.warning(f"[WARN] {self.label}: values outside [0, 1] (validity horizon exceeded?)")

    @property
    def out_of_range(self) -> bool:
        """Valores de probabilidad fuera de [0, 1 + 1e-9]; nunca se recortan"""
        if not self.probability or self.values.size == 0:
            return False
        return bool(np.any(self.values < 0.0) or np.any(self.values > 1.0 + PROBABILITY_SLACK))

    def __len__(self) -> int:
        return int(self.times.size)

    def records(self):
        return list(zip(self.times.tolist(), self.values.tolist()))


@dataclass(frozen=True, eq=False)
class MomentumSpectrum:
    """Pares (k, W(k)); discreto (modos de la caja b) o continuo"""
    k: np.ndarray
    density: np.ndarray
    discrete: bool
    dk: Optional[float] = None

    def integrated(self) -> float:
        """Σ W(k_m)Δk (discreto) o ∫W dk por trapecios (continuo)"""
        if self.discrete:
            return float(np.sum(self.density) * self.dk)
        return float(trapezoid(self.density, self.k))

    def peak_k(self) -> float:
        return float(self.k[int(np.argmax(self.density))])
