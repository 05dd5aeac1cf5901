"""
ManyBody - Supervivencia y no-escape de N átomos

Bosones débilmente interactuantes: potencias de las probabilidades de una
partícula. Bosones fermionizados: determinantes de solapamientos de una
partícula ocupando los niveles n = 1..N.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..models.models import ManyBodyConfig, OverlapKind, Statistics, TrapConfig
from .analytic import zeno_time
from .grid import WaveFunction
from .tdse import interior_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """Matriz N×N de solapamientos de una partícula"""
    entries: np.ndarray
    kind: OverlapKind

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"overlap matrix must be square, got shape {entries.shape}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def boson_zeno_time(t_Z_single: float, N: int) -> float:
    """t_Z^{(N)} = t_Z/N^{2/3}"""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return t_Z_single / N ** (2.0 / 3.0)


def fermionized_zeno_time(N: int, config: TrapConfig) -> float:
    """t_Z^{(N)} = [Σ_{n=1}^N t_Z(n)^{−3/2}]^{−2/3}"""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    total = sum(zeno_time(n, config).t_Z ** -1.5 for n in range(1, N + 1))
    return total ** (-2.0 / 3.0)


def many_body_zeno_time(mb_config: ManyBodyConfig, trap_config: TrapConfig) -> float:
    """Tiempo de Zeno de N átomos según la estadística configurada"""
    if mb_config.statistics == Statistics.FERMIONIZED:
        return fermionized_zeno_time(mb_config.N, trap_config)
    return boson_zeno_time(zeno_time(1, trap_config).t_Z, mb_config.N)


def boson_probabilities(t, t_Z_single: float, N: int):
    """
    S^{(N)} = S(t)^N y P^{(N)} = ((1+S)/2)^N con S = 1 − (t/t_Z)^{3/2}

    Returns:
        (S_N, P_N) con la forma de t
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    survival = 1.0 - (np.asarray(t, dtype=float) / t_Z_single) ** 1.5
    s_n = survival ** N
    p_n = (0.5 * (1.0 + survival)) ** N
    if np.ndim(s_n) == 0:
        return float(s_n), float(p_n)
    return s_n, p_n


def overlap_matrix(states0: Sequence[WaveFunction], states_t: Sequence[WaveFunction],
                   kind: OverlapKind, config: TrapConfig, edge: Optional[float] = None) -> OverlapMatrix:
    """
    Plain: ⟨φ_n(0)|φ_k(t)⟩; InteriorWeighted: ⟨φ_n(t)|P_L|φ_k(t)⟩ con P_L = ∫₀^c

    El borde c es config.a salvo que se pase `edge`.

    Raises:
        ValueError: listas de distinta longitud
        GridMismatchError: rejillas distintas
    """
    if len(states0) != len(states_t) or not states_t:
        raise ValueError(f"need two non-empty lists of equal length ({len(states0)} vs {len(states_t)})")
    grid = states_t[0].grid
    for state in list(states0) + list(states_t):
        grid.require_same(state.grid)

    kets = np.array([state.amplitudes for state in states_t])
    if OverlapKind(kind) == OverlapKind.PLAIN:
        bras = np.conj(np.array([state.amplitudes for state in states0]))
        entries = bras @ kets.T * grid.dx
    else:
        weights = interior_weights(grid, config.a if edge is None else edge)
        entries = np.conj(kets) @ (kets * weights).T * grid.dx
    return OverlapMatrix(entries=entries, kind=OverlapKind(kind))


def det_probability(matrix: OverlapMatrix) -> float:
    """
    Probabilidad de N partículas a partir del determinante de solapamientos

    Plain devuelve |det|². InteriorWeighted es la matriz de Gram de los
    orbitales proyectados al interior, cuyo determinante ya es real y no
    negativo: se devuelve |det| para que N = 1 reproduzca P(t).

    Raises:
        ValueError: si hay entradas NaN o infinitas
    """
    if not np.all(np.isfinite(matrix.entries)):
        raise ValueError("overlap matrix contains NaN or infinite entries")
    modulus = abs(np.linalg.det(matrix.entries))
    value = modulus if matrix.kind == OverlapKind.INTERIOR_WEIGHTED else modulus ** 2
    if value > 1.0 + 1e-9:
        logger.warning(f"[WARN] determinant probability {value:.12f} exceeds 1")
    return float(value)


def fermionized_probabilities(states0: Sequence[WaveFunction], states_t: Sequence[WaveFunction],
                              config: TrapConfig, edge: Optional[float] = None) -> Tuple[float, float]:
    """(S^{(N)}, P^{(N)}) a partir de los determinantes de solapamiento"""
    survival = det_probability(overlap_matrix(states0, states_t, OverlapKind.PLAIN, config))
    interior = overlap_matrix(states0, states_t, OverlapKind.INTERIOR_WEIGHTED, config, edge)
    nonescape = det_probability(interior)
    return survival, nonescape

