"""
Config IO - Lectura y escritura del formato clave = valor de RunConfig

Precedencia: valores por defecto < archivo de ZENOTRAP_CONFIG < --config <
--set clave=valor (en el orden dado).
"""
from __future__ import annotations

import logging
import os
import re
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from pydantic import ValidationError

from ..models.models import RunConfig
from .errors import ConfigError

logger = logging.getLogger(__name__)

ENV_CONFIG = "ZENOTRAP_CONFIG"
# comentario: '#' al inicio de línea o precedido de espacio
COMMENT = re.compile(r"(^|\s)#.*$")


def parse_line(line: str, source: str = "<override>", lineno: int = 0) -> Optional[Tuple[str, str]]:
    """
    Interpreta una línea 'clave = valor'

    Returns:
        (clave, valor) o None si la línea está vacía o es un comentario

    Raises:
        ConfigError: si falta '=' o la clave está vacía
    """
    content = COMMENT.sub("", line).strip()
    if not content:
        return None
    if "=" not in content:
        raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
    key, value = (part.strip() for part in content.split("=", 1))
    if not key:
        raise ConfigError(f"{source}:{lineno}: empty key")
    return key, value


def parse_config_text(text: str, source: str = "<text>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        parsed = parse_line(line, source, lineno)
        if parsed is None:
            continue
        key, value = parsed
        if key in values:
            logger.info(f"[INFO] {source}:{lineno}: '{key}' overrides an earlier value")
        values[key] = value
    return values


def load_config_file(path: str) -> Dict[str, str]:
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(file_path.read_text(encoding="utf-8"), source=str(file_path))


def build_config(values: Mapping[str, Any]) -> RunConfig:
    """
    Valida un diccionario de valores (cadenas incluidas) contra RunConfig

    Raises:
        ConfigError: clave desconocida o valor inválido
    """
    try:
        return RunConfig(**dict(values))
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or 'config'}: {error['msg']}"
            for error in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from None


def resolve_config(config_path: Optional[str] = None, overrides: Iterable[str] = (),
                   environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Combina entorno, archivo y overrides según la precedencia documentada"""
    env = os.environ if environ is None else environ
    values: Dict[str, str] = {}
    env_path = env.get(ENV_CONFIG)
    if env_path:
        logger.debug(f"[INFO] loading {ENV_CONFIG}={env_path}")
        values.update(load_config_file(env_path))
    if config_path:
        values.update(load_config_file(config_path))
    for item in overrides:
        parsed = parse_line(item, source="--set")
        if parsed is None:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        values[parsed[0]] = parsed[1]
    return build_config(values)


def _render_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_render_value(item) for item in value)
    return str(value)


def render_config(config: RunConfig) -> str:
    """Todas las claves en orden de declaración; la salida es un archivo válido"""
    lines = ["# zenotrap run configuration (natural units: hbar = M = a = 1)"]
    for name, info in RunConfig.model_fields.items():
        value = getattr(config, name)
        comment = f"  # {info.description}" if info.description else ""
        lines.append(f"{name} = {_render_value(value)}{comment}")
    return "\n".join(lines) + "\n"


def config_values(config: RunConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")
