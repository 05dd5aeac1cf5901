"""
Zeno - Protocolo de medidas repetidas y ajuste de tasas

Evoluciona, mide cada τ y acumula la población W(mτ). W se registra justo
después de cada proyección.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..models.models import Engine, MeasurementMode, TrapConfig, ZenoProtocol, ZenoRateKind
from ..utils.errors import ValidityError
from .analytic import nonescape_from_survival, survival_probability_short, validity_horizon, zeno_rate, zeno_time
from .grid import TimeSeries, WaveFunction
from .tdse import TdseSettings, interior_weights, prepare_states, survival_numeric

logger = logging.getLogger(__name__)

RECORD_CONVENTION = "after_projection"


@dataclass(frozen=True)
class RateFit:
    """Ajuste lineal de log W frente a t"""
    rate: float
    intercept: float
    residual_rms: float
    n_points: int


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    fit: RateFit
    rate_anomalous: float
    rate_conventional: float


@dataclass(frozen=True)
class ZenoFit:
    """t_Z con exponente fijo 3/2 y exponente libre de log(1−S) frente a log t"""
    t_Z: float
    exponent: float
    n_points: int


def _cycle_times(protocol: ZenoProtocol) -> np.ndarray:
    return protocol.tau * np.arange(1, protocol.m_max + 1)


def _analytic_record(protocol: ZenoProtocol, n: int, config: TrapConfig) -> np.ndarray:
    horizon = validity_horizon(n, config)
    if protocol.tau > horizon:
        raise ValidityError(f"tau={protocol.tau:.3e} exceeds the analytic validity horizon {horizon:.3e}")
    survival = survival_probability_short(protocol.tau, n, config)
    if survival <= 0:
        raise ValidityError(f"short-time survival S({protocol.tau:.3e}) = {survival:.3e} is not positive")
    if protocol.mode == MeasurementMode.INTERIOR_PROJECTION:
        per_cycle = nonescape_from_survival(survival)
    else:
        per_cycle = survival
    return per_cycle ** np.arange(1, protocol.m_max + 1)


def _tdse_record(protocol: ZenoProtocol, n: int, config: TrapConfig, settings: TdseSettings) -> np.ndarray:
    grid = settings.grid(config)
    psi0 = prepare_states(grid, config, n)[-1]
    evolver = settings.evolver(grid, config)
    cycles = np.arange(1, protocol.m_max + 1)

    if protocol.mode == MeasurementMode.SURVIVAL_PROJECTION:
        (psi_tau,) = evolver.advance([psi0], 0.0, protocol.tau)
        return survival_numeric(psi0, psi_tau) ** cycles

    # proyector interior: anula x >= a, con la pared restaurada un instante
    keep = interior_weights(grid, config.a) == 1.0
    state: WaveFunction = psi0
    retained = 1.0
    record = np.empty(protocol.m_max)
    for m in range(protocol.m_max):
        (state,) = evolver.advance([state], 0.0, protocol.tau)
        projected = np.where(keep, state.amplitudes, 0.0)
        fraction = float(np.sum(np.abs(projected) ** 2) * grid.dx)
        retained *= fraction
        record[m] = retained
        state = WaveFunction(grid, projected / math.sqrt(fraction))
    return record


def run_protocol(protocol: ZenoProtocol, n: int, config: TrapConfig,
                 settings: Optional[TdseSettings] = None) -> TimeSeries:
    """
    Ejecuta m_max ciclos de evolución y medida

    Args:
        protocol: τ, número de ciclos, modo de medida y motor
        n: Nivel inicial
        config: Trampa
        settings: Resolución numérica para el motor TDSE

    Returns:
        TimeSeries W(mτ), m = 1..m_max, registrada tras cada proyección

    Raises:
        ValidityError: motor analítico con τ más allá del horizonte de validez
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if protocol.engine == Engine.ANALYTIC:
        values = _analytic_record(protocol, n, config)
    else:
        values = _tdse_record(protocol, n, config, settings or TdseSettings())
    logger.info(f"[INFO] protocol tau={protocol.tau:.3e} engine={protocol.engine.value} "
                f"mode={protocol.mode.value}: W(final)={values[-1]:.9f}")
    return TimeSeries(
        label="W",
        times=_cycle_times(protocol),
        values=values,
        metadata={"record": RECORD_CONVENTION, "engine": protocol.engine.value, "mode": protocol.mode.value},
    )


def fit_rate(series: TimeSeries) -> RateFit:
    """
    γ por mínimos cuadrados de log W frente a t

    Raises:
        ValueError: menos de 5 puntos o algún W <= 0
    """
    if len(series) < 5:
        raise ValueError(f"fit_rate needs at least 5 points, got {len(series)}")
    if np.any(series.values <= 0):
        raise ValueError("fit_rate requires positive W values")
    logs = np.log(series.values)
    slope, intercept = np.polyfit(series.times, logs, 1)
    residuals = logs - (slope * series.times + intercept)
    fit = RateFit(rate=float(abs(slope)), intercept=float(intercept),
                  residual_rms=float(np.sqrt(np.mean(residuals ** 2))), n_points=len(series))
    logger.debug(f"[FIT] rate={fit.rate:.6e} rms={fit.residual_rms:.2e}")
    return fit


def sweep(taus: Sequence[float], n: int, config: TrapConfig, protocol_template: ZenoProtocol,
          settings: Optional[TdseSettings] = None) -> List[SweepPoint]:
    """run_protocol + fit_rate para cada τ, con las tasas anómala y convencional de referencia"""
    if not taus:
        raise ValueError("sweep needs at least one tau")
    t_z = zeno_time(n, config).t_Z
    points = []
    for tau in taus:
        protocol = protocol_template.model_copy(update={"tau": tau})
        fit = fit_rate(run_protocol(protocol, n, config, settings))
        points.append(SweepPoint(
            tau=tau,
            fit=fit,
            rate_anomalous=zeno_rate(tau, t_z, ZenoRateKind.ANOMALOUS),
            rate_conventional=zeno_rate(tau, t_z, ZenoRateKind.CONVENTIONAL),
        ))
    return points


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pendiente de log y frente a log x por mínimos cuadrados"""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("loglog_slope needs two equal-length arrays with at least 2 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("loglog_slope requires positive values")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def fit_zeno_time(times: Sequence[float], survival: Sequence[float]) -> ZenoFit:
    """
    Ajusta 1 − S = (t/t_Z)^{3/2}

    Returns:
        ZenoFit con t_Z (exponente fijo) y el exponente libre
    """
    t = np.asarray(times, dtype=float)
    loss = 1.0 - np.asarray(survival, dtype=float)
    if t.size < 2:
        raise ValueError("fit_zeno_time needs at least 2 points")
    if np.any(loss <= 0) or np.any(t <= 0):
        raise ValueError("fit_zeno_time needs t > 0 and S < 1")
    log_t_z = float(np.mean(np.log(t) - np.log(loss) / 1.5))
    fit = ZenoFit(t_Z=math.exp(log_t_z), exponent=loglog_slope(t, loss), n_points=int(t.size))
    logger.info(f"[FIT] t_Z={fit.t_Z:.6f} exponent={fit.exponent:.4f} over {fit.n_points} points")
    return fit
