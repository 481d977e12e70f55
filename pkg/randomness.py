"""
Certificación de aleatoriedad a partir de la violación máxima de C3' y C3''.

La certificación solo se emite cuando el valor observado está a distancia
`tol` de 3√3; por debajo no se interpola ninguna entropía.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import pandas as pd

from bellcat import COTA_CUANTICA_C3, BellFunctional, evaluate
from errores import ErrorValidacion
from qcore import Behavior, marginal

logger = logging.getLogger(__name__)

TOL_CERTIFICACION = 1e-9
PROBABILIDAD_LOCAL = 1.0 / 3.0


class ModoAleatoriedad(Enum):
    LOCAL = "local"
    GLOBAL = "global"


@dataclass(frozen=True)
class CertifiedRandomness:
    guessing_probability: float
    min_entropy_bits: float
    mode: ModoAleatoriedad
    certified: bool
    violation_gap: float
    value: float = float("nan")


def min_entropy(g: float) -> float:
    """−log2(g) para g en (0, 1]"""
    if not (isinstance(g, (int, float)) and 0.0 < g <= 1.0):
        raise ErrorValidacion(f"Probabilidad de adivinar fuera de (0, 1]: {g}")
    return max(0.0, -math.log2(g))


def _entrada_de_tres(b: Behavior, parte: str) -> int:
    conteos = b.scenario.alice_outcomes if parte == "A" else b.scenario.bob_outcomes
    for entrada, n in enumerate(conteos, start=1):
        if n == 3:
            return entrada
    raise ErrorValidacion(f"El comportamiento no tiene una entrada de tres resultados para {parte}")


def _brecha(f: BellFunctional, b: Behavior) -> tuple:
    valor = evaluate(f, b)
    return valor, abs(COTA_CUANTICA_C3 - valor)


def certify_local(b: Behavior, functional: BellFunctional, tol: float = TOL_CERTIFICACION) -> CertifiedRandomness:
    """Aleatoriedad local del POVM de Alice: 1/3 cuando C3' alcanza 3√3"""
    if functional.scenario != b.scenario:
        raise ErrorValidacion(f"El escenario de {functional.name} no coincide con el del comportamiento")
    _entrada_de_tres(b, "A")
    valor, brecha = _brecha(functional, b)

    if brecha <= tol:
        g = PROBABILIDAD_LOCAL
        logger.info(f"Certificado local emitido: {functional.name} = {valor:.12f}")
        return CertifiedRandomness(g, min_entropy(g), ModoAleatoriedad.LOCAL, True, brecha, valor)

    logger.warning(f"Violación no máxima ({valor:.9f}, brecha {brecha:.3e}); sin certificado local")
    return CertifiedRandomness(1.0, 0.0, ModoAleatoriedad.LOCAL, False, brecha, valor)


def certify_global(b: Behavior, functional: BellFunctional, tol: float = TOL_CERTIFICACION) -> CertifiedRandomness:
    """Aleatoriedad global de (A4, B4): máximo de la tabla conjunta cuando C3'' alcanza 3√3"""
    if functional.scenario != b.scenario:
        raise ErrorValidacion(f"El escenario de {functional.name} no coincide con el del comportamiento")
    i = _entrada_de_tres(b, "A")
    j = _entrada_de_tres(b, "B")
    valor, brecha = _brecha(functional, b)

    if brecha <= tol:
        g = float(b.bloque(i, j).max())
        logger.info(f"Certificado global emitido: {functional.name} = {valor:.12f}, G = {g:.12f}")
        return CertifiedRandomness(g, min_entropy(g), ModoAleatoriedad.GLOBAL, True, brecha, valor)

    logger.warning(f"Violación no máxima ({valor:.9f}, brecha {brecha:.3e}); sin certificado global")
    return CertifiedRandomness(1.0, 0.0, ModoAleatoriedad.GLOBAL, False, brecha, valor)


def projective_guessing_table(b: Behavior) -> pd.DataFrame:
    """
    Predictibilidad observada de las entradas de dos resultados.

    Una fila por entrada (max_a p(a|i)) y una por par de entradas
    (max_ab p(ab|ij)).
    """
    sc = b.scenario
    filas = []
    for parte, n_entradas in (("A", sc.alice_inputs), ("B", sc.bob_inputs)):
        for entrada in range(1, n_entradas + 1):
            if sc.resultados(parte, entrada) != 2:
                continue
            g = float(marginal(b, parte, entrada).max())
            filas.append({
                "alcance": "local",
                "i": entrada if parte == "A" else None,
                "j": entrada if parte == "B" else None,
                "guessing_probability": g,
                "min_entropy_bits": min_entropy(g),
            })
    for i, j in sc.pares():
        if sc.resultados("A", i) != 2 or sc.resultados("B", j) != 2:
            continue
        g = float(b.bloque(i, j).max())
        filas.append({
            "alcance": "global",
            "i": i,
            "j": j,
            "guessing_probability": g,
            "min_entropy_bits": min_entropy(g),
        })
    tabla = pd.DataFrame(filas, columns=["alcance", "i", "j", "guessing_probability", "min_entropy_bits"])
    return tabla.astype({"i": "Int64", "j": "Int64"})
