"""
zenotrap - Efecto Zeno anómalo de átomos que escapan de una trampa de caja abierta

Unidades naturales ħ = M = a = 1 (t0 = M·a²/ħ) en todo el paquete.
"""
from __future__ import annotations

__version__ = "1.0.0"

from .models.models import (  # noqa: E402
    Barrier,
    Engine,
    EngineSelection,
    ManyBodyConfig,
    MeasurementMode,
    OutputFormat,
    OverlapKind,
    RunConfig,
    Statistics,
    TrapConfig,
    ZenoProtocol,
    ZenoRateKind,
)
from .utils.errors import (  # noqa: E402
    ComplexErfRangeError,
    ConfigError,
    ConvergenceError,
    GridMismatchError,
    ValidityError,
    ZenoTrapError,
)

__all__ = [
    "__version__",
    "Barrier",
    "Engine",
    "EngineSelection",
    "ManyBodyConfig",
    "MeasurementMode",
    "OutputFormat",
    "OverlapKind",
    "RunConfig",
    "Statistics",
    "TrapConfig",
    "ZenoProtocol",
    "ZenoRateKind",
    "ComplexErfRangeError",
    "ConfigError",
    "ConvergenceError",
    "GridMismatchError",
    "ValidityError",
    "ZenoTrapError",
]
