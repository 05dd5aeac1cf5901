"""
Output - Tablas de resultados y su emisión en CSV o JSON

Formato de números fijo (12 cifras significativas, notación científica) e
independiente del locale, para que la misma configuración produzca archivos
idénticos byte a byte.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..models.models import OutputFormat

logger = logging.getLogger(__name__)


@dataclass
class ResultTable:
    """Tabla de un comando: columnas, filas, metadatos y subtablas opcionales"""
    name: str
    columns: List[str]
    rows: List[Sequence[Any]]
    metadata: Dict[str, Any] = field(default_factory=dict)
    extra: List["ResultTable"] = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"{self.name}: row of length {len(row)} for {len(self.columns)} columns")

    def column(self, name: str) -> List[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


def format_value(value: Any) -> str:
    """Flotantes con '{:.11e}'; enteros, cadenas y booleanos tal cual"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.11e}"
    if hasattr(value, "item"):
        return format_value(value.item())
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.11e}")
    if hasattr(value, "item"):
        return _json_value(value.item())
    if hasattr(value, "value"):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_json_value(item) for item in value]
    return str(value)


def render_csv(table: ResultTable, config_text: str) -> str:
    """CSV con cabecera de metadatos '#' y la configuración resuelta completa"""
    buffer = io.StringIO()
    buffer.write(f"# zenotrap {table.name}\n")
    for key, value in table.metadata.items():
        buffer.write(f"# {key}: {format_value(value)}\n")
    for line in config_text.strip().splitlines():
        if line and not line.startswith("#"):
            buffer.write(f"# config: {line}\n")

    for index, current in enumerate([table] + list(table.extra)):
        if index:
            buffer.write(f"\n# table: {current.name}\n")
            for key, value in current.metadata.items():
                buffer.write(f"# {key}: {format_value(value)}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(current.columns)
        for row in current.rows:
            writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def _table_json(table: ResultTable) -> Dict[str, Any]:
    return {
        "name": table.name,
        "columns": list(table.columns),
        "rows": [[_json_value(value) for value in row] for row in table.rows],
        "metadata": {key: _json_value(value) for key, value in table.metadata.items()},
    }


def render_json(table: ResultTable, config_values: Dict[str, Any]) -> str:
    document = _table_json(table)
    document["command"] = table.name
    document["config"] = {key: _json_value(value) for key, value in config_values.items()}
    document["tables"] = [_table_json(extra) for extra in table.extra]
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def render(table: ResultTable, fmt: OutputFormat, config_text: str, config_values: Dict[str, Any]) -> str:
    if OutputFormat(fmt) == OutputFormat.JSON:
        return render_json(table, config_values)
    return render_csv(table, config_text)


def write_text_atomic(path: Path, text: str) -> None:
    """Escribe a un temporal y lo renombra sobre el destino"""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def emit(text: str, path: Optional[str]) -> None:
    """stdout si no hay ruta; en otro caso escritura atómica"""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    write_text_atomic(Path(path), text)
    logger.info(f"[OK] wrote {path}")
