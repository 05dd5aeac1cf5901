"""
Pydantic models for trap, many-body, protocol and run configuration
"""
from __future__ import annotations

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# V0·t0 of the finite-step trap used in the numerical experiments
DEFAULT_V0_T0 = (50.0 * math.pi) ** 2


class Barrier(str, Enum):
    HARD_WALL = "hard_wall"
    STEP = "step"


class Statistics(str, Enum):
    BOSON_CONDENSATE = "boson_condensate"
    FERMIONIZED = "fermionized"


class OverlapKind(str, Enum):
    PLAIN = "plain"
    INTERIOR_WEIGHTED = "interior_weighted"


class MeasurementMode(str, Enum):
    SURVIVAL_PROJECTION = "survival_projection"
    INTERIOR_PROJECTION = "interior_projection"


class Engine(str, Enum):
    ANALYTIC = "analytic"
    TDSE = "tdse"


class EngineSelection(str, Enum):
    ANALYTIC = "analytic"
    TDSE = "tdse"
    BOTH = "both"


class ZenoRateKind(str, Enum):
    ANOMALOUS = "anomalous"
    CONVENTIONAL = "conventional"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


# Trap geometry (natural units, hbar = 1)
class TrapConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float = Field(1.0, gt=0, description="trap width")
    M: float = Field(1.0, gt=0, description="particle mass")
    barrier: Barrier = Barrier.STEP
    V0: Optional[float] = Field(DEFAULT_V0_T0, description="step height, energy units")
    L: float = Field(12.0, description="computational box length")

    @model_validator(mode="after")
    def _check_geometry(self) -> "TrapConfig":
        if not math.isfinite(self.L):
            raise ValueError(f"L must be finite, got {self.L}")
        if self.L <= self.a:
            raise ValueError(f"L must exceed a (L={self.L}, a={self.a})")
        if self.barrier == Barrier.STEP and (self.V0 is None or self.V0 <= 0):
            raise ValueError("Step barrier requires V0 > 0")
        return self

    @property
    def t0(self) -> float:
        return self.M * self.a ** 2

    @property
    def b(self) -> float:
        """Outer wall position"""
        return self.L

    @classmethod
    def step_trap(cls, v0_t0: float = DEFAULT_V0_T0, *, a: float = 1.0, M: float = 1.0,
                  length: float = 12.0) -> "TrapConfig":
        """Finite-step trap with V0 given in units of 1/t0 and L in units of a"""
        t0 = M * a ** 2
        return cls(a=a, M=M, barrier=Barrier.STEP, V0=v0_t0 / t0, L=length * a)

    @classmethod
    def hard_wall(cls, *, a: float = 1.0, M: float = 1.0, length: float = 12.0) -> "TrapConfig":
        return cls(a=a, M=M, barrier=Barrier.HARD_WALL, V0=None, L=length * a)

    def with_length(self, L: float) -> "TrapConfig":
        return self.model_copy(update={"L": L})


class ManyBodyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int = Field(1, ge=1)
    statistics: Statistics = Statistics.FERMIONIZED

    @property
    def occupied_levels(self) -> List[int]:
        if self.statistics == Statistics.FERMIONIZED:
            return list(range(1, self.N + 1))
        return [1] * self.N


class ZenoProtocol(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float = Field(..., gt=0, description="inter-measurement time")
    m_max: int = Field(100, ge=1)
    mode: MeasurementMode = MeasurementMode.SURVIVAL_PROJECTION
    engine: Engine = Engine.ANALYTIC


class PhysicalSpecies(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    mass: float = Field(..., gt=0, description="kilograms")


# Run configuration consumed by the CLI
class RunConfig(BaseModel):
    """Every key is settable from a config file or --set key=value"""
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # trap
    n: int = Field(1, ge=1)
    barrier: Barrier = Barrier.STEP
    v0_t0: float = Field(DEFAULT_V0_T0, gt=0)
    length: float = Field(12.0, gt=1.0, description="L/a")
    n_points: int = Field(24001, ge=3)

    # propagation
    dt_short: float = Field(1e-6, gt=0)
    dt_long: float = Field(1e-5, gt=0)
    dt_switch: float = Field(0.01, ge=0)

    # fig1 / fig2 snapshot
    t: float = Field(0.001, gt=0)
    x_min: float = Field(0.8, ge=0)
    x_max: float = Field(1.2, gt=0)
    x_points: int = Field(401, ge=3)
    k_max: float = Field(300.0, gt=0)
    k_points: int = Field(600, ge=2)
    m_transitions: int = Field(8, ge=2)

    # fig3 / fig4 time grid and fit window
    t_min: float = Field(1e-4, gt=0)
    t_max: float = Field(0.02, gt=0)
    t_points: int = Field(25, ge=5)
    fit_t_min: float = Field(1e-4, gt=0)
    fit_t_max: float = Field(0.01, gt=0)

    # many-body
    particles: int = Field(4, ge=1)
    statistics: Statistics = Statistics.FERMIONIZED

    # zeno protocol
    taus: List[float] = Field(default_factory=lambda: [2.5e-3, 5e-3, 1e-2])
    m_max: int = Field(100, ge=5)
    protocol_mode: MeasurementMode = MeasurementMode.SURVIVAL_PROJECTION
    engine: EngineSelection = EngineSelection.BOTH

    # units
    species: str = "Rb-85"
    a_meters: float = Field(80e-6, gt=0)
    loss_threshold: float = Field(0.25, gt=0, lt=1)

    # output
    output_format: OutputFormat = OutputFormat.CSV
    output_path: Optional[str] = None

    @field_validator("taus", mode="before")
    @classmethod
    def _split_taus(cls, value):
        if isinstance(value, str):
            return [float(item) for item in value.split(",") if item.strip()]
        return value

    @field_validator("taus")
    @classmethod
    def _positive_taus(cls, value: List[float]) -> List[float]:
        if any(tau <= 0 for tau in value):
            raise ValueError("every tau must be positive")
        return value

    @field_validator("output_path", mode="before")
    @classmethod
    def _empty_path(cls, value):
        if isinstance(value, str) and not value.strip():
            return None
        return value

    @model_validator(mode="after")
    def _check_windows(self) -> "RunConfig":
        if self.t_min >= self.t_max:
            raise ValueError("t_min must be below t_max")
        if self.fit_t_min >= self.fit_t_max:
            raise ValueError("fit_t_min must be below fit_t_max")
        if self.x_min >= self.x_max:
            raise ValueError("x_min must be below x_max")
        return self

    def trap(self) -> TrapConfig:
        """TrapConfig in natural units (a = M = 1)"""
        if self.barrier == Barrier.HARD_WALL:
            return TrapConfig.hard_wall(length=self.length)
        return TrapConfig.step_trap(self.v0_t0, length=self.length)
