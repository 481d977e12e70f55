"""
Catálogo de funcionales de Bell.

Un funcional guarda los coeficientes c_{abij} expandidos sobre
probabilidades (los correladores se expanden como Σ a·b·p(ab|ij)).
Incluye C3, sus variantes con POVM (C3', C3''), CHSH y la carga de
funcionales definidos por el usuario en JSON.
"""

import itertools
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from errores import ErrorCapacidad, ErrorParseo, ErrorValidacion
from qcore import (
    Behavior,
    Scenario,
    _campo,
    _entero,
    _real,
    scenario_from_document,
    scenario_to_document,
)

logger = logging.getLogger(__name__)

MAX_ESTRATEGIAS = 10 ** 7
COTA_CUANTICA_C3 = 3 * math.sqrt(3)
COTA_CUANTICA_CHSH = 2 * math.sqrt(2)

Clave = Tuple[int, int, int, int]  # (a, b, i, j)


@dataclass(frozen=True)
class BellFunctional:
    """Σ c_{abij} p(ab|ij) sobre un escenario fijo"""
    scenario: Scenario
    coeffs: Mapping[Clave, float]
    name: str = "funcional"
    quantum_bound: Optional[float] = None
    classical_bound_cache: Optional[float] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        coeficientes: Dict[Clave, float] = {}
        for clave, valor in self.coeffs.items():
            a, b, i, j = clave
            # valida rangos de entrada y etiquetas
            self.scenario.indice("A", i, a)
            self.scenario.indice("B", j, b)
            if not math.isfinite(valor):
                raise ErrorValidacion(f"Coeficiente no finito en {clave}")
            if valor != 0.0:
                coeficientes[(a, b, i, j)] = float(valor)
        object.__setattr__(self, "coeffs", coeficientes)

    def matrices(self) -> Dict[Tuple[int, int], np.ndarray]:
        """Coeficientes agrupados por par de entradas, con la forma de Behavior.table"""
        sc = self.scenario
        bloques = {(i, j): np.zeros((sc.resultados("A", i), sc.resultados("B", j))) for i, j in sc.pares()}
        for (a, b, i, j), c in self.coeffs.items():
            bloques[(i, j)][sc.indice("A", i, a), sc.indice("B", j, b)] += c
        return bloques


def _agregar_correlador(coeffs: Dict[Clave, float], i: int, j: int, signo: float) -> None:
    for a in (1, -1):
        for b in (1, -1):
            coeffs[(a, b, i, j)] = coeffs.get((a, b, i, j), 0.0) + signo * a * b


def evaluate(f: BellFunctional, b: Behavior) -> float:
    """Valor del funcional sobre un comportamiento"""
    if f.scenario != b.scenario:
        raise ErrorValidacion(
            f"Escenario del funcional {f.name} no coincide con el del comportamiento"
        )
    return float(sum(np.sum(m * b.bloque(i, j)) for (i, j), m in f.matrices().items()))


# ---------------------------------------------------------------------------
# Cota clásica
# ---------------------------------------------------------------------------

def classical_bound_witness(f: BellFunctional) -> Tuple[float, Tuple[int, ...], Tuple[int, ...]]:
    """
    Máximo sobre estrategias locales deterministas y la estrategia que lo alcanza.

    Se recorren las asignaciones de Alice; para cada una Bob responde con la
    mejor salida de cada entrada por separado. Ante empates se conserva la
    primera estrategia encontrada.
    """
    sc = f.scenario
    total = math.prod(sc.alice_outcomes) * math.prod(sc.bob_outcomes)
    if total > MAX_ESTRATEGIAS:
        raise ErrorCapacidad(f"Demasiadas estrategias deterministas: {total} > {MAX_ESTRATEGIAS}")

    bloques = f.matrices()
    etiquetas_a = [sc.etiquetas("A", i) for i in range(1, sc.alice_inputs + 1)]
    etiquetas_b = [sc.etiquetas("B", j) for j in range(1, sc.bob_inputs + 1)]

    mejor_valor = -math.inf
    mejor_a: Tuple[int, ...] = ()
    mejor_b: Tuple[int, ...] = ()
    for indices_a in itertools.product(*(range(len(e)) for e in etiquetas_a)):
        valor = 0.0
        respuesta = []
        for j in range(1, sc.bob_inputs + 1):
            ganancia = sum(bloques[(i, j)][indices_a[i - 1], :] for i in range(1, sc.alice_inputs + 1))
            k = int(np.argmax(ganancia))
            valor += float(ganancia[k])
            respuesta.append(etiquetas_b[j - 1][k])
        if valor > mejor_valor:
            mejor_valor = valor
            mejor_a = tuple(etiquetas_a[i][k] for i, k in enumerate(indices_a))
            mejor_b = tuple(respuesta)

    logger.debug(f"Cota clásica de {f.name}: {mejor_valor} (A={mejor_a}, B={mejor_b})")
    return mejor_valor, mejor_a, mejor_b


def classical_bound(f: BellFunctional) -> float:
    """Cota clásica (LHV); se memoriza en el funcional"""
    if f.classical_bound_cache is None:
        valor, _, _ = classical_bound_witness(f)
        object.__setattr__(f, "classical_bound_cache", valor)
    return f.classical_bound_cache


# ---------------------------------------------------------------------------
# Constructores
# ---------------------------------------------------------------------------

TERMINOS_C3 = ((1, 1, 1), (2, 1, 1), (2, 2, 1), (3, 2, 1), (3, 3, 1), (1, 3, -1))


def correlator_terms() -> Tuple[Tuple[int, int, int], ...]:
    """Términos (i, j, signo) de C3 en forma de correladores"""
    return TERMINOS_C3


def build_c3() -> BellFunctional:
    """⟨A1B1⟩ + ⟨A2B1⟩ + ⟨A2B2⟩ + ⟨A3B2⟩ + ⟨A3B3⟩ − ⟨A1B3⟩"""
    coeffs: Dict[Clave, float] = {}
    for i, j, signo in TERMINOS_C3:
        _agregar_correlador(coeffs, i, j, signo)
    return BellFunctional(Scenario((2, 2, 2), (2, 2, 2)), coeffs, "C3", COTA_CUANTICA_C3)


def _validar_positivo(nombre: str, valor: float) -> None:
    if not (isinstance(valor, (int, float)) and math.isfinite(valor) and valor > 0):
        raise ErrorValidacion(f"{nombre} debe ser positivo, se recibió {valor}")


def build_c3_prime(alpha: float = 1.0) -> BellFunctional:
    """C3 con una cuarta entrada de Alice de tres resultados, penalizada con α"""
    _validar_positivo("alpha", alpha)
    coeffs = dict(build_c3().coeffs)
    for k, b, j in ((1, 1, 1), (2, -1, 2), (3, 1, 3)):
        coeffs[(k, b, 4, j)] = -alpha
    return BellFunctional(Scenario((2, 2, 2, 3), (2, 2, 2)), coeffs, f"C3'(alpha={alpha:g})", COTA_CUANTICA_C3)


def build_c3_double_prime(alpha: float = 1.0, beta: float = 1.0) -> BellFunctional:
    """C3' con una cuarta entrada de Bob de tres resultados, penalizada con β"""
    _validar_positivo("alpha", alpha)
    _validar_positivo("beta", beta)
    coeffs = dict(build_c3_prime(alpha).coeffs)
    for a, l, i in ((-1, 1, 1), (1, 2, 2), (-1, 3, 3)):
        coeffs[(a, l, i, 4)] = -beta
    return BellFunctional(
        Scenario((2, 2, 2, 3), (2, 2, 2, 3)),
        coeffs,
        f"C3''(alpha={alpha:g},beta={beta:g})",
        COTA_CUANTICA_C3,
    )


def build_chsh() -> BellFunctional:
    """⟨A1B1⟩ + ⟨A1B2⟩ + ⟨A2B1⟩ − ⟨A2B2⟩"""
    coeffs: Dict[Clave, float] = {}
    for i, j, signo in ((1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 2, -1)):
        _agregar_correlador(coeffs, i, j, signo)
    return BellFunctional(Scenario((2, 2), (2, 2)), coeffs, "CHSH", COTA_CUANTICA_CHSH)


# ---------------------------------------------------------------------------
# Documentos
# ---------------------------------------------------------------------------

def save_functional(f: BellFunctional) -> Dict[str, Any]:
    """Documento JSON con términos ordenados por (i, j, a, b)"""
    terminos = [
        {"a": a, "b": b, "i": i, "j": j, "c": c}
        for (a, b, i, j), c in sorted(f.coeffs.items(), key=lambda t: (t[0][2], t[0][3], -t[0][0], -t[0][1]))
    ]
    documento: Dict[str, Any] = {
        "name": f.name,
        "scenario": scenario_to_document(f.scenario),
        "terms": terminos,
    }
    if f.quantum_bound is not None:
        documento["quantum_bound"] = f.quantum_bound
    return documento


def load_functional(document: Any) -> BellFunctional:
    """Inverso de save_functional; los términos repetidos se suman"""
    nombre = _campo(document, "name", "")
    if not isinstance(nombre, str):
        raise ErrorParseo("se espera un texto", "name")
    sc = scenario_from_document(_campo(document, "scenario", ""), "scenario")
    terminos = _campo(document, "terms", "")
    if not isinstance(terminos, list):
        raise ErrorParseo("se espera una lista", "terms")

    coeffs: Dict[Clave, float] = {}
    for k, termino in enumerate(terminos):
        ruta = f"terms[{k}]"
        a = _entero(_campo(termino, "a", ruta), f"{ruta}.a")
        b = _entero(_campo(termino, "b", ruta), f"{ruta}.b")
        i = _entero(_campo(termino, "i", ruta), f"{ruta}.i")
        j = _entero(_campo(termino, "j", ruta), f"{ruta}.j")
        c = _real(_campo(termino, "c", ruta), f"{ruta}.c")
        try:
            sc.indice("A", i, a)
            sc.indice("B", j, b)
        except ErrorValidacion as e:
            raise ErrorValidacion(f"{ruta}: {e}")
        coeffs[(a, b, i, j)] = coeffs.get((a, b, i, j), 0.0) + c

    cota = None
    if "quantum_bound" in document:
        cota = _real(document["quantum_bound"], "quantum_bound")
    return BellFunctional(sc, coeffs, nombre, cota)


def cargar_funcional_archivo(ruta: str) -> BellFunctional:
    with open(ruta, "r", encoding="utf-8") as archivo:
        try:
            documento = json.load(archivo)
        except json.JSONDecodeError as e:
            raise ErrorParseo(f"JSON inválido en línea {e.lineno}: {e.msg}", ruta)
    f = load_functional(documento)
    logger.info(f"Funcional '{f.name}' cargado desde {ruta} ({len(f.coeffs)} términos)")
    return f


def guardar_funcional_archivo(f: BellFunctional, ruta: str) -> str:
    with open(ruta, "w", encoding="utf-8") as archivo:
        json.dump(save_functional(f), archivo, indent=2, ensure_ascii=False)
    return ruta


NOMBRES_CATALOGO = ["c3", "c3p", "c3pp", "chsh"]


def catalog(nombre: str, alpha: float = 1.0, beta: float = 1.0) -> BellFunctional:
    """Resuelve un nombre del catálogo o la ruta de un archivo de desigualdad"""
    clave = nombre.strip().lower()
    if clave == "c3":
        return build_c3()
    if clave == "c3p":
        return build_c3_prime(alpha)
    if clave == "c3pp":
        return build_c3_double_prime(alpha, beta)
    if clave == "chsh":
        return build_chsh()
    if os.path.exists(nombre):
        return cargar_funcional_archivo(nombre)
    raise ErrorValidacion(
        f"Desigualdad desconocida '{nombre}'. Opciones: {', '.join(NOMBRES_CATALOGO)} o una ruta a un archivo JSON"
    )
