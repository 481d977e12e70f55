"""
Jerarquía de errores del sistema de certificación de aleatoriedad.

Todas las excepciones heredan de ErrorCertificacion para que la CLI pueda
traducirlas a códigos de salida sin atrapar errores ajenos.
"""

from typing import Optional


class ErrorCertificacion(Exception):
    """Error base del sistema"""


class ErrorValidacion(ErrorCertificacion, ValueError):
    """Violación de un invariante o de una precondición"""


class ErrorParseo(ErrorValidacion):
    """Documento que no cumple el esquema; `ruta` indica dónde"""

    def __init__(self, mensaje: str, ruta: str = ""):
        self.ruta = ruta
        super().__init__(f"{ruta}: {mensaje}" if ruta else mensaje)


class ErrorConstruccion(ErrorValidacion):
    """Construcción imposible (por ejemplo, un POVM que no suma la identidad)"""


class ErrorSenalizacion(ErrorValidacion):
    """Marginales que dependen de la entrada de la otra parte"""


class ErrorCapacidad(ErrorCertificacion):
    """Problema fuera del rango soportado (enumeración o modo NPA)"""


class ErrorSolver(ErrorCertificacion, RuntimeError):
    """Fallo del solver semidefinido"""

    def __init__(self, mensaje: str, estado: Optional[str] = None):
        self.estado = estado
        super().__init__(f"{mensaje} (estado: {estado})" if estado else mensaje)
