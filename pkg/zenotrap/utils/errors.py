"""
Errors - Jerarquía de excepciones y códigos de salida
"""
from __future__ import annotations


class ZenoTrapError(Exception):
    """Base de todos los errores del paquete"""
    exit_code: int = 1


class ConfigError(ZenoTrapError, ValueError):
    """Configuración o uso inválido (clave desconocida, valor fuera de rango)"""
    exit_code = 2


class GridMismatchError(ZenoTrapError, ValueError):
    """Objetos definidos sobre rejillas distintas"""
    exit_code = 2


class ValidityError(ZenoTrapError, ValueError):
    """Parámetros fuera del horizonte de validez del motor elegido"""
    exit_code = 2


class ComplexErfRangeError(ZenoTrapError, OverflowError):
    """Argumento de Erf en la región de overflow"""
    exit_code = 3


class ConvergenceError(ZenoTrapError, RuntimeError):
    """Fallo de convergencia numérica (cuadratura, tiempo imaginario, cortes)"""
    exit_code = 3

    def __init__(self, message: str, *, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def exit_code_for(exc: BaseException) -> int:
    """
    Traduce una excepción a código de salida del CLI

    Args:
        exc: Excepción capturada

    Returns:
        0 nunca; 2 para uso/config, 3 para convergencia, 1 para el resto
    """
    if isinstance(exc, ZenoTrapError):
        return exc.exit_code
    if isinstance(exc, ValueError):
        return 2
    return 1
