"""
Experiments - Construcción de las tablas que emite cada subcomando

Cada función recibe el RunConfig resuelto y devuelve un ResultTable listo
para serializar. La física vive en analytic, tdse, manybody y zeno; aquí
sólo se orquesta y se resumen los ajustes en los metadatos.
"""
from __future__ import annotations

import logging
import math
from typing import List, Tuple

import numpy as np

from ..models.models import (
    Engine,
    EngineSelection,
    ManyBodyConfig,
    RunConfig,
    Statistics,
    TrapConfig,
    ZenoProtocol,
    ZenoRateKind,
)
from ..utils.errors import ConfigError
from ..utils.output import ResultTable
from .analytic import (
    delta_psi,
    effective_edge,
    escape_probability,
    escape_spectrum,
    step_onset_time,
    transition_amplitude_integral,
    transition_probability,
    validity_horizon,
    zeno_rate,
    zeno_time,
)
from .manybody import boson_probabilities, fermionized_probabilities, many_body_zeno_time
from .tdse import (
    OpenTrapEvolver,
    Potential,
    TdseSettings,
    TimeStepSchedule,
    decompose,
    emitted_wave,
    evolve_series,
    mirror_asymmetry,
    momentum_spectrum_numeric,
    nonescape_numeric,
    prepare_states,
    rayleigh_energy,
    survival_numeric,
)
from .units import get_species, observability_window, t0_physical, to_seconds
from .zeno import RECORD_CONVENTION, fit_zeno_time, loglog_slope, sweep

logger = logging.getLogger(__name__)

NAN = float("nan")
# límite superior del contraste P = (1+S)/2, en unidades de t0
NONESCAPE_CHECK_T = 0.02


def settings_for(config: RunConfig, progress: bool = False) -> TdseSettings:
    """Resolución numérica a partir del RunConfig"""
    schedule = TimeStepSchedule(config.dt_short, config.dt_long, config.dt_switch)
    return TdseSettings(n_points=config.n_points, schedule=schedule, progress=progress)


def engines_for(selection: EngineSelection) -> Tuple[bool, bool]:
    """(analítico activo, TDSE activo)"""
    selection = EngineSelection(selection)
    return selection != EngineSelection.TDSE, selection != EngineSelection.ANALYTIC


def _sample_times(config: RunConfig) -> np.ndarray:
    return np.geomspace(config.t_min, config.t_max, config.t_points)


def _fit_window(times: np.ndarray, config: RunConfig, horizon: float, onset: float = 0.0) -> np.ndarray:
    """
    Máscara de tiempos dentro de [max(fit_t_min, inicio), min(fit_t_max, 0.4·horizonte)]

    `onset` es el inicio de la ley 3/2 sobre un escalón finito (0 con paredes duras).
    """
    lower = max(config.fit_t_min, onset)
    upper = min(config.fit_t_max, 0.4 * horizon)
    mask = (times >= lower * (1 - 1e-12)) & (times <= upper * (1 + 1e-12))
    if np.count_nonzero(mask) < 2:
        raise ConfigError(
            f"fit window [{lower:.3e}, {upper:.3e}] holds fewer than 2 sample times"
        )
    if onset > config.fit_t_min:
        logger.info(f"[INFO] finite step: fit window starts at {lower:.3e} instead of {config.fit_t_min:.3e}")
    return mask


def _nonescape_window(times: np.ndarray, trap: TrapConfig, horizon: float, onset: float) -> np.ndarray:
    """Tiempos en [inicio, min(0.02·t0, horizonte)] donde se contrasta P = (1+S)/2"""
    upper = min(NONESCAPE_CHECK_T * trap.t0, horizon)
    return (times >= onset * (1 - 1e-12)) & (times <= upper * (1 + 1e-12))


# ═══════════════════════════════════════════════════════════════
# fig1: onda emitida
# ═══════════════════════════════════════════════════════════════

def fig1_data(config: RunConfig, settings: TdseSettings) -> ResultTable:
    """
    δψ(x, t) alrededor del borde, analítico y diferencia TDSE

    Ambas curvas usan la retirada de una pared dura: es el escenario exacto
    de la fórmula analítica.
    """
    use_analytic, use_tdse = engines_for(config.engine)
    trap = TrapConfig.hard_wall(length=config.length)
    xs = np.linspace(config.x_min, config.x_max, config.x_points) * trap.a
    metadata = {"barrier": trap.barrier.value, "t_over_t0": config.t / trap.t0, "n": config.n}

    analytic = np.full(xs.shape, NAN, dtype=np.complex128)
    if use_analytic:
        analytic = delta_psi(xs, config.t, config.n, trap)
        if math.isclose(config.x_min + config.x_max, 2.0, rel_tol=0, abs_tol=1e-12):
            peak = float(np.max(np.abs(analytic)))
            metadata["mirror_asymmetry_analytic"] = float(np.max(np.abs(analytic - analytic[::-1])) / peak)

    numeric = np.full(xs.shape, NAN, dtype=np.complex128)
    if use_tdse:
        grid = settings.grid(trap)
        psi0 = prepare_states(grid, trap, config.n)[-1]
        energy = rayleigh_energy(psi0, Potential.hard_wall_box(grid, trap), trap.M)
        (psi_t,) = settings.evolver(grid, trap).advance([psi0], 0.0, config.t)
        delta = emitted_wave(psi0, psi_t, energy, config.t)
        numeric = (np.interp(xs, grid.x, delta.amplitudes.real)
                   + 1j * np.interp(xs, grid.x, delta.amplitudes.imag))
        reach = min(trap.a - config.x_min, config.x_max - trap.a)
        if reach > grid.dx:
            metadata["mirror_asymmetry_tdse"] = mirror_asymmetry(delta, trap, reach)
        metadata["rayleigh_energy"] = energy

    if use_analytic and use_tdse:
        metadata["l2_relative_difference"] = float(
            np.sqrt(np.sum(np.abs(numeric - analytic) ** 2) / np.sum(np.abs(analytic) ** 2))
        )
        logger.info(f"[OK] fig1 L2 relative difference {metadata['l2_relative_difference']:.3e}")

    rows = [
        [x / trap.a, a.real, a.imag, abs(a), b.real, b.imag, abs(b)]
        for x, a, b in zip(xs.tolist(), analytic.tolist(), numeric.tolist())
    ]
    columns = ["x_over_a", "re_analytic", "im_analytic", "abs_analytic", "re_tdse", "im_tdse", "abs_tdse"]
    return ResultTable("fig1", columns, rows, metadata)


# ═══════════════════════════════════════════════════════════════
# fig2: espectro de los átomos escapados
# ═══════════════════════════════════════════════════════════════

def fig2_data(config: RunConfig, settings: TdseSettings) -> ResultTable:
    """W_n(k,t) analítico, espectro exterior numérico y transiciones W_{m←n}"""
    use_analytic, use_tdse = engines_for(config.engine)
    trap = TrapConfig.hard_wall(length=config.length)
    n, t = config.n, config.t
    metadata = {"barrier": trap.barrier.value, "t_over_t0": t / trap.t0, "n": n}

    numeric_spectrum = None
    numeric_left = None
    if use_tdse:
        grid = settings.grid(trap)
        psi0 = prepare_states(grid, trap, n)[-1]
        (psi_t,) = settings.evolver(grid, trap).advance([psi0], 0.0, t)
        numeric_spectrum = momentum_spectrum_numeric(psi_t, trap)
        p_num = nonescape_numeric(psi_t, trap)
        escaped = numeric_spectrum.integrated()
        metadata.update({
            "peak_k_numeric": numeric_spectrum.peak_k(),
            "escaped_numeric": escaped,
            "nonescape_numeric": p_num,
            "completeness": escaped + p_num,
        })
        m_left = config.m_transitions
        numeric_left = np.abs(decompose(psi_t, trap, m_left, 1).left_coeffs) ** 2
        ks = numeric_spectrum.k[numeric_spectrum.k <= config.k_max]
        w_numeric = numeric_spectrum.density[: ks.size]
    else:
        ks = np.linspace(config.k_max / config.k_points, config.k_max, config.k_points)
        w_numeric = np.full(ks.shape, NAN)

    if use_analytic:
        w_analytic = escape_spectrum(ks, t, n, trap)
        law = math.pi / trap.a * w_analytic
        fine = np.linspace(config.k_max / config.k_points, config.k_max, config.k_points)
        metadata["peak_k_analytic"] = float(fine[int(np.argmax(escape_spectrum(fine, t, n, trap)))])
        metadata["escaped_analytic"] = escape_probability(t, n, trap)
    else:
        w_analytic = np.full(ks.shape, NAN)
        law = np.full(ks.shape, NAN)

    rows = []
    for k, wa, wn, wl in zip(ks.tolist(), np.atleast_1d(w_analytic).tolist(), w_numeric.tolist(), law.tolist()):
        ratio = wl / wa if use_analytic and wa > 0 else NAN
        rows.append([k, wa, wn, wl, ratio])
    main = ResultTable("fig2", ["k", "w_analytic", "w_numeric", "w_transition_law", "ratio"], rows, metadata)

    transition_rows = []
    for m in range(1, config.m_transitions + 1):
        if m == n:
            continue
        w_law = transition_probability(m, n, t, trap) if use_analytic else NAN
        w_integral = abs(transition_amplitude_integral(m, n, t, trap)) ** 2 if use_analytic else NAN
        w_grid = float(numeric_left[m - 1]) if numeric_left is not None else NAN
        transition_rows.append([m, m * math.pi / trap.a, w_law, w_integral, w_grid])
    main.extra.append(ResultTable(
        "transitions", ["m", "k_m", "w_transition", "w_amplitude_integral", "b_m_sq_numeric"], transition_rows,
    ))
    return main


# ═══════════════════════════════════════════════════════════════
# fig3 / fig4: supervivencia y no-escape
# ═══════════════════════════════════════════════════════════════

def _summarize_fit(metadata: dict, times: np.ndarray, survival: np.ndarray, nonescape: np.ndarray,
                   mask: np.ndarray, check: np.ndarray, prefix: str) -> None:
    fit = fit_zeno_time(times[mask], survival[mask])
    metadata[f"{prefix}_fitted_t_Z"] = fit.t_Z
    metadata[f"{prefix}_fitted_exponent"] = fit.exponent
    if not np.any(check):
        metadata[f"{prefix}_nonescape_ratio_max_deviation"] = NAN
        metadata[f"{prefix}_nonescape_max_abs_difference"] = NAN
        return
    loss_ratio = (1.0 - nonescape[check]) / (1.0 - survival[check])
    metadata[f"{prefix}_nonescape_ratio_max_deviation"] = float(np.max(np.abs(loss_ratio - 0.5)))
    metadata[f"{prefix}_nonescape_max_abs_difference"] = float(
        np.max(np.abs(nonescape[check] - 0.5 * (1.0 + survival[check])))
    )


def _window_metadata(metadata: dict, times: np.ndarray, mask: np.ndarray, check: np.ndarray,
                     onset: float, edge: float) -> None:
    metadata["step_onset"] = onset
    metadata["nonescape_edge"] = edge
    metadata["fit_window_start"] = float(times[mask][0])
    metadata["fit_window_end"] = float(times[mask][-1])
    if np.any(check):
        metadata["nonescape_check_start"] = float(times[check][0])
        metadata["nonescape_check_end"] = float(times[check][-1])


def _table_from_curves(name: str, times: np.ndarray, s_num, p_num, s_eq, p_eq, metadata: dict) -> ResultTable:
    rows = [list(row) for row in zip(times.tolist(), s_num.tolist(), p_num.tolist(), s_eq.tolist(), p_eq.tolist())]
    return ResultTable(name, ["t_over_t0", "s_num", "p_num", "s_closed_form", "p_closed_form"], rows, metadata)


def fig3_data(config: RunConfig, settings: TdseSettings) -> ResultTable:
    """
    S(t) y P(t) de un átomo: TDSE frente a la ley 3/2 y P = (1+S)/2

    Sobre un escalón finito P se integra hasta el borde efectivo a + δ y se
    normaliza por su valor en t = 0; el ajuste empieza en step_onset_time.
    """
    use_analytic, use_tdse = engines_for(config.engine)
    trap = config.trap()
    n = config.n
    times = _sample_times(config)
    t_z = zeno_time(n, trap).t_Z
    horizon = validity_horizon(n, trap)
    onset = step_onset_time(n, trap)
    edge = effective_edge(n, trap)
    metadata = {"barrier": trap.barrier.value, "n": n, "closed_form_t_Z": t_z}
    mask = _fit_window(times, config, horizon, onset)
    check = _nonescape_window(times, trap, horizon, onset)
    _window_metadata(metadata, times, mask, check, onset, edge)

    s_eq = 1.0 - (times / t_z) ** 1.5
    p_eq = 0.5 * (1.0 + s_eq)
    if not use_analytic:
        s_eq = np.full(times.shape, NAN)
        p_eq = np.full(times.shape, NAN)
    else:
        _summarize_fit(metadata, times, s_eq, p_eq, mask, check, "analytic")

    s_num = np.full(times.shape, NAN)
    p_num = np.full(times.shape, NAN)
    if use_tdse:
        grid = settings.grid(trap)
        psi0 = prepare_states(grid, trap, n)[-1]
        series = evolve_series(psi0, grid, trap, times, schedule=settings.schedule,
                               observables=("S", "P"), progress=settings.progress, edge=edge)
        reference = nonescape_numeric(psi0, trap, edge)
        metadata["nonescape_reference"] = reference
        s_num, p_num = series["S"].values, series["P"].values / reference
        _summarize_fit(metadata, times, s_num, p_num, mask, check, "tdse")
    return _table_from_curves("fig3", times / trap.t0, s_num, p_num, s_eq, p_eq, metadata)


def fig4_data(config: RunConfig, settings: TdseSettings) -> ResultTable:
    """
    Supervivencia y no-escape de N átomos (por defecto 4 bosones fermionizados)

    Ventanas y borde efectivo como en fig3, tomados del nivel ocupado más alto.
    """
    use_analytic, use_tdse = engines_for(config.engine)
    trap = config.trap()
    mb = ManyBodyConfig(N=config.particles, statistics=config.statistics)
    times = _sample_times(config)
    t_zn = many_body_zeno_time(mb, trap)
    metadata = {"barrier": trap.barrier.value, "N": mb.N, "statistics": mb.statistics.value,
                "closed_form_t_Z_N": t_zn}
    top_level = max(mb.occupied_levels)
    horizon = validity_horizon(top_level, trap)
    onset = step_onset_time(top_level, trap)
    edge = effective_edge(top_level, trap)
    mask = _fit_window(times, config, horizon, onset)
    check = _nonescape_window(times, trap, horizon, onset)
    _window_metadata(metadata, times, mask, check, onset, edge)

    if mb.statistics == Statistics.FERMIONIZED:
        s_eq = 1.0 - (times / t_zn) ** 1.5
        p_eq = 0.5 * (1.0 + s_eq)
    else:
        s_eq, p_eq = boson_probabilities(times, zeno_time(1, trap).t_Z, mb.N)
    if use_analytic:
        _summarize_fit(metadata, times, s_eq, p_eq, mask, check, "analytic")
    else:
        s_eq = np.full(times.shape, NAN)
        p_eq = np.full(times.shape, NAN)

    s_num = np.full(times.shape, NAN)
    p_num = np.full(times.shape, NAN)
    if use_tdse:
        grid = settings.grid(trap)
        fermionized = mb.statistics == Statistics.FERMIONIZED
        states0 = prepare_states(grid, trap, mb.N) if fermionized else prepare_states(grid, trap, 1)[:1]
        if fermionized:
            reference = fermionized_probabilities(states0, states0, trap, edge)[1]
        else:
            reference = nonescape_numeric(states0[0], trap, edge) ** mb.N
        metadata["nonescape_reference"] = reference
        evolver = OpenTrapEvolver(grid, trap, settings.schedule, progress=settings.progress)
        for i, (_, states_t) in enumerate(evolver.snapshots(states0, times)):
            if fermionized:
                s_num[i], p_num[i] = fermionized_probabilities(states0, states_t, trap, edge)
            else:
                s_num[i] = survival_numeric(states0[0], states_t[0]) ** mb.N
                p_num[i] = nonescape_numeric(states_t[0], trap, edge) ** mb.N
        p_num = p_num / reference
        _summarize_fit(metadata, times, s_num, p_num, mask, check, "tdse")
    return _table_from_curves("fig4", times / trap.t0, s_num, p_num, s_eq, p_eq, metadata)


# ═══════════════════════════════════════════════════════════════
# zeno: barrido de τ
# ═══════════════════════════════════════════════════════════════

def zeno_data(config: RunConfig, settings: TdseSettings) -> ResultTable:
    """γ ajustada por motor frente a τ, con las leyes anómala y convencional"""
    taus = sorted(config.taus)
    if len(taus) < 3:
        raise ConfigError(f"the zeno sweep needs at least 3 taus, got {len(taus)}")
    use_analytic, use_tdse = engines_for(config.engine)
    trap = config.trap()
    n = config.n
    t_z = zeno_time(n, trap).t_Z
    metadata = {"barrier": trap.barrier.value, "n": n, "mode": config.protocol_mode.value,
                "m_max": config.m_max, "record": RECORD_CONVENTION, "t_Z": t_z}
    onset = step_onset_time(n, trap)
    metadata["step_onset"] = onset
    if use_tdse and taus[0] < onset:
        logger.warning(
            f"[WARN] zeno: tau={taus[0]:.3e} lies below the finite-step onset {onset:.3e}; "
            f"the tdse rates there follow the rounded edge, not the 3/2 law"
        )

    fitted = {}
    for engine, enabled in ((Engine.ANALYTIC, use_analytic), (Engine.TDSE, use_tdse)):
        if not enabled:
            fitted[engine] = [NAN] * len(taus)
            continue
        template = ZenoProtocol(tau=taus[0], m_max=config.m_max, mode=config.protocol_mode, engine=engine)
        rates = [point.fit.rate for point in sweep(taus, n, trap, template, settings)]
        fitted[engine] = rates
        metadata[f"slope_{engine.value}"] = loglog_slope(taus, rates)

    anomalous = [zeno_rate(tau, t_z, ZenoRateKind.ANOMALOUS) for tau in taus]
    conventional = [zeno_rate(tau, t_z, ZenoRateKind.CONVENTIONAL) for tau in taus]
    metadata["slope_anomalous_law"] = loglog_slope(taus, anomalous)
    metadata["anomalous_exceeds_conventional"] = bool(
        all(a > c for tau, a, c in zip(taus, anomalous, conventional) if tau < t_z)
    )

    rows = [
        [tau, ga, gt, an, co]
        for tau, ga, gt, an, co in zip(taus, fitted[Engine.ANALYTIC], fitted[Engine.TDSE], anomalous, conventional)
    ]
    return ResultTable("zeno", ["tau", "gamma_analytic", "gamma_tdse", "gamma_anomalous_law", "gamma_quadratic_law"], rows, metadata)


# ═══════════════════════════════════════════════════════════════
# units: escalas físicas
# ═══════════════════════════════════════════════════════════════

def units_data(config: RunConfig) -> ResultTable:
    """t0, t_Z, t_Z^{(N)}, horizonte de validez y ventana de observación en segundos"""
    species = get_species(config.species)
    a = config.a_meters
    trap = config.trap()
    mb = ManyBodyConfig(N=config.particles, statistics=config.statistics)
    top_level = max(mb.occupied_levels)

    quantities: List[Tuple[str, float]] = [
        ("t0", trap.t0),
        ("t_Z", zeno_time(config.n, trap).t_Z),
        ("t_Z_N", many_body_zeno_time(mb, trap)),
        ("validity_horizon", validity_horizon(config.n, trap)),
        ("validity_horizon_N", validity_horizon(top_level, trap)),
    ]
    rows = [[name, value, to_seconds(value, species, a)] for name, value in quantities]
    window = observability_window(species, a, mb.N, mb.statistics, config.loss_threshold)
    rows.append(["observability_window", window / t0_physical(species, a), window])

    metadata = {"species": species.name, "mass_kg": species.mass, "a_meters": a, "N": mb.N,
                "statistics": mb.statistics.value, "loss_threshold": config.loss_threshold}
    return ResultTable("units", ["quantity", "natural_units", "seconds"], rows, metadata)
