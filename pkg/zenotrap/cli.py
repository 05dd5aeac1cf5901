"""
CLI - Punto de entrada de línea de comandos de zenotrap

Subcomandos: fig1, fig2, fig3, fig4, zeno, units, print-config.
Los datos van a stdout o a --out; los logs siempre a stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

from dotenv import load_dotenv

from . import __version__
from .core import experiments
from .models.models import EngineSelection, OutputFormat, RunConfig
from .utils.config_io import config_values, render_config, resolve_config
from .utils.errors import exit_code_for
from .utils.output import ResultTable, emit, render

logger = logging.getLogger(__name__)

ENV_LOG_LEVEL = "ZENOTRAP_LOG_LEVEL"
ENV_PROGRESS = "ZENOTRAP_PROGRESS"

COMMAND_HELP: Dict[str, str] = {
    "fig1": "Emitted wave around the trap edge. Columns: x_over_a, re/im/abs for analytic and tdse.",
    "fig2": "Momentum distribution of escaped atoms. Columns: k, w_analytic, w_numeric, "
            "w_transition_law, ratio; extra table 'transitions' with m, k_m, w_transition, "
            "w_amplitude_integral, b_m_sq_numeric.",
    "fig3": "Single-atom survival and non-escape. Columns: t_over_t0, s_num, p_num, s_closed_form, p_closed_form.",
    "fig4": "N-atom survival and non-escape (default 4 fermionized). Same columns as fig3.",
    "zeno": "Repeated-measurement rate sweep. Columns: tau, gamma_analytic, gamma_tdse, gamma_anomalous_law, gamma_quadratic_law.",
    "units": "Physical time scales. Columns: quantity, natural_units, seconds.",
    "print-config": "Print every configuration key with its resolved value.",
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Plain key = value config file.")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one config key (repeatable, applied in order).")
    common.add_argument("--format", choices=[fmt.value for fmt in OutputFormat], default=None,
                        help="Output format (default from config: csv).")
    common.add_argument("--out", default=None, help="Output path (default: stdout).")
    common.add_argument("--engine", choices=[engine.value for engine in EngineSelection], default=None,
                        help="Engines to run (default from config: both).")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG.")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenotrap",
        description="Anomalous Zeno effect of atoms escaping an opened box trap.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)
    common = _common_options()
    for name, text in COMMAND_HELP.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, os.getenv(ENV_LOG_LEVEL, "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _progress_enabled() -> bool:
    return os.getenv(ENV_PROGRESS, "false").strip().lower() in {"1", "true", "yes", "on"}


def _resolve(args: argparse.Namespace) -> RunConfig:
    overrides: List[str] = list(args.overrides)
    if args.format:
        overrides.append(f"output_format={args.format}")
    if args.out:
        overrides.append(f"output_path={args.out}")
    if args.engine:
        overrides.append(f"engine={args.engine}")
    return resolve_config(args.config, overrides)


def _build_table(cmd: str, config: RunConfig) -> ResultTable:
    if cmd == "units":
        return experiments.units_data(config)
    settings = experiments.settings_for(config, progress=_progress_enabled())
    builders: Dict[str, Callable] = {
        "fig1": experiments.fig1_data,
        "fig2": experiments.fig2_data,
        "fig3": experiments.fig3_data,
        "fig4": experiments.fig4_data,
        "zeno": experiments.zeno_data,
    }
    return builders[cmd](config, settings)


def run(args: argparse.Namespace) -> int:
    config = _resolve(args)
    text = render_config(config)
    if args.cmd == "print-config":
        emit(text, config.output_path)
        return 0
    logger.info(f"[INFO] running {args.cmd}")
    table = _build_table(args.cmd, config)
    emit(render(table, config.output_format, text, config_values(config)), config.output_path)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv(override=False)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose)

    try:
        return run(args)
    except Exception as exc:
        code = exit_code_for(exc)
        print(f"[ERROR] {exc}", file=sys.stderr)
        logger.debug("[ERROR] traceback", exc_info=True)
        return code
