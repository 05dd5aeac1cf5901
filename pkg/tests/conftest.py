"""
Fixtures compartidos: trampas cortas y rejillas gruesas para que la suite
por defecto corra en segundos. Las corridas de aceptación usan la rejilla
completa y llevan la marca `slow`.
"""
import pytest

from zenotrap.core.grid import make_grid
from zenotrap.core.tdse import OpenTrapEvolver, TimeStepSchedule, prepare_states
from zenotrap.models.models import TrapConfig

SMALL_LENGTH = 3.0
SMALL_POINTS = 3001  # dx = 1e-3


@pytest.fixture(scope="session")
def hard_wall_trap():
    return TrapConfig.hard_wall(length=SMALL_LENGTH)


@pytest.fixture(scope="session")
def step_trap():
    return TrapConfig.step_trap(length=SMALL_LENGTH)


@pytest.fixture(scope="session")
def small_grid(hard_wall_trap):
    return make_grid(hard_wall_trap, SMALL_POINTS)


@pytest.fixture(scope="session")
def schedule():
    return TimeStepSchedule(dt_short=1e-6, dt_long=1e-5, switch=0.01)


@pytest.fixture(scope="session")
def hard_wall_states(small_grid, hard_wall_trap):
    """Los tres niveles más bajos de la caja de paredes duras"""
    return prepare_states(small_grid, hard_wall_trap, 3)


@pytest.fixture(scope="session")
def hard_wall_evolved(small_grid, hard_wall_trap, hard_wall_states, schedule):
    """ψ₁ evolucionado en la trampa abierta hasta t = 0.001 y t = 0.005"""
    evolver = OpenTrapEvolver(small_grid, hard_wall_trap, schedule)
    psi0 = hard_wall_states[0]
    (psi_short,) = evolver.advance([psi0], 0.0, 0.001)
    (psi_long,) = evolver.advance([psi_short], 0.001, 0.005)
    return {0.001: psi_short, 0.005: psi_long}
