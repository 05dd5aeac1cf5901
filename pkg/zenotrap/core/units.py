"""
Units - Conversión entre unidades naturales (ħ = M = a = 1) y SI

Todas las magnitudes internas están en unidades de t0 = M·a²/ħ; el paso a
segundos sólo ocurre en el borde del CLI.
"""
from __future__ import annotations

import logging
from typing import Dict

import scipy.constants as sc

from ..models.models import ManyBodyConfig, PhysicalSpecies, Statistics, TrapConfig
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

# Masas atómicas en unidades de masa atómica (CODATA / AME)
ATOMIC_MASSES_U: Dict[str, float] = {
    "Rb-85": 84.911789738,
    "Rb-87": 86.909180531,
    "Na-23": 22.9897692820,
}

SPECIES: Dict[str, PhysicalSpecies] = {
    name: PhysicalSpecies(name=name, mass=mass_u * sc.atomic_mass)
    for name, mass_u in ATOMIC_MASSES_U.items()
}


def get_species(name: str) -> PhysicalSpecies:
    """
    Busca una especie en la tabla incorporada

    Raises:
        ConfigError: si la especie no existe
    """
    try:
        return SPECIES[name]
    except KeyError:
        known = ", ".join(sorted(SPECIES))
        raise ConfigError(f"Unknown species '{name}' (known: {known})") from None


def t0_physical(species: PhysicalSpecies, a: float) -> float:
    """
    Tiempo natural t0 = M·a²/ħ en segundos

    Args:
        species: Especie atómica
        a: Anchura de la trampa en metros

    Returns:
        t0 en segundos
    """
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    return species.mass * a ** 2 / sc.hbar


def to_seconds(t_natural: float, species: PhysicalSpecies, a: float) -> float:
    return t_natural * t0_physical(species, a)


def to_natural(seconds: float, species: PhysicalSpecies, a: float) -> float:
    return seconds / t0_physical(species, a)


def observability_window(
    species: PhysicalSpecies,
    a: float,
    N: int,
    statistics: Statistics = Statistics.FERMIONIZED,
    loss: float = 0.25,
) -> float:
    """
    Tiempo (s) en el que la pérdida anómala 1 − S^(N) alcanza `loss`

    Con loss = 1/4 y N = 4 fermionizados reproduce las ventanas de ~0.15 s
    (Rb-85) y ~0.041 s (Na-23) para a = 80 μm.
    """
    from .manybody import many_body_zeno_time

    if not 0 < loss < 1:
        raise ValueError(f"loss must lie in (0, 1), got {loss}")
    t_zn = many_body_zeno_time(ManyBodyConfig(N=N, statistics=statistics), TrapConfig())
    return to_seconds(t_zn * loss ** (2.0 / 3.0), species, a)
