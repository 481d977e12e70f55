"""
Núcleo de álgebra lineal densa para qubits y pares de qubits.

Contiene los operadores hermíticos, matrices densidad, mediciones,
realizaciones y comportamientos (tablas p(ab|ij)) del escenario de Bell
bipartito. Índices de entrada desde 1; etiquetas (+1, -1) para entradas
de dos resultados y 1..n para las demás.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from errores import ErrorParseo, ErrorSenalizacion, ErrorValidacion

logger = logging.getLogger(__name__)

TOL_ALGEBRA = 1e-12
TOL_AUTOVALOR = 1e-10
TOL_NORMALIZACION = 1e-10
TOL_SENALIZACION = 1e-8


def _constante(matriz) -> np.ndarray:
    arr = np.array(matriz, dtype=complex)
    arr.setflags(write=False)
    return arr


IDENTIDAD_2 = _constante(np.eye(2))
SIGMA_X = _constante([[0, 1], [1, 0]])
SIGMA_Y = _constante([[0, -1j], [1j, 0]])
SIGMA_Z = _constante([[1, 0], [0, -1]])


def etiquetas_para(n_resultados: int) -> Tuple[int, ...]:
    """(+1, -1) para dos resultados; 1..n en otro caso"""
    if n_resultados == 2:
        return (1, -1)
    return tuple(range(1, n_resultados + 1))


# ---------------------------------------------------------------------------
# Operadores
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Matriz hermítica densa 2×2 o 4×4"""
    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.shape not in ((2, 2), (4, 4)):
            raise ErrorValidacion(f"Dimensión no soportada: {arr.shape}; se espera 2×2 o 4×4")
        desvio = float(np.max(np.abs(arr - arr.conj().T)))
        if desvio > TOL_ALGEBRA:
            raise ErrorValidacion(f"Operador no hermítico (desvío {desvio:.3e})")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Autovalores en orden creciente"""
        if self.dim == 2:
            a = self.entries[0, 0].real
            d = self.entries[1, 1].real
            b = abs(self.entries[0, 1])
            media = (a + d) / 2
            radio = math.sqrt(((a - d) / 2) ** 2 + b ** 2)
            return np.array([media - radio, media + radio])
        return np.linalg.eigvalsh(self.entries)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Estado cuántico: traza 1 y semidefinido positivo"""
    op: HermitianOperator

    def __post_init__(self):
        traza = np.trace(self.op.entries)
        if abs(traza - 1) > TOL_ALGEBRA:
            raise ErrorValidacion(f"Traza del estado distinta de 1: {traza.real:.15f}")
        minimo = float(np.min(self.op.eigenvalues()))
        if minimo < -TOL_AUTOVALOR:
            raise ErrorValidacion(f"Estado con autovalor negativo: {minimo:.3e}")

    @property
    def dim(self) -> int:
        return self.op.dim


class TipoMedicion(Enum):
    PROYECTIVA = "projective"
    GENERAL = "general"


@dataclass(frozen=True, eq=False)
class Measurement:
    """Medición de un qubit: efectos ordenados que suman la identidad"""
    effects: Tuple[HermitianOperator, ...]
    kind: TipoMedicion = TipoMedicion.GENERAL
    labels: Tuple[int, ...] = ()

    def __post_init__(self):
        efectos = tuple(self.effects)
        if len(efectos) < 2:
            raise ErrorValidacion("Una medición necesita al menos dos efectos")
        for k, efecto in enumerate(efectos):
            if efecto.dim != 2:
                raise ErrorValidacion(f"Efecto {k + 1} no es un operador de qubit")
            autovalores = efecto.eigenvalues()
            if autovalores[0] < -TOL_AUTOVALOR or autovalores[-1] > 1 + TOL_AUTOVALOR:
                raise ErrorValidacion(f"Efecto {k + 1} con autovalores fuera de [0, 1]: {autovalores}")
            if self.kind is TipoMedicion.PROYECTIVA:
                m = efecto.entries
                if float(np.max(np.abs(m @ m - m))) > TOL_ALGEBRA:
                    raise ErrorValidacion(f"Efecto {k + 1} no es un proyector")

        suma = sum(e.entries for e in efectos)
        desvio = float(np.max(np.abs(suma - IDENTIDAD_2)))
        if desvio > TOL_ALGEBRA:
            raise ErrorValidacion(f"Los efectos no suman la identidad (desvío {desvio:.3e})")

        etiquetas = tuple(self.labels) if self.labels else etiquetas_para(len(efectos))
        if len(etiquetas) != len(efectos) or len(set(etiquetas)) != len(etiquetas):
            raise ErrorValidacion(f"Etiquetas inválidas {etiquetas} para {len(efectos)} efectos")

        object.__setattr__(self, "effects", efectos)
        object.__setattr__(self, "labels", etiquetas)

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def effect(self, etiqueta: int) -> HermitianOperator:
        try:
            return self.effects[self.labels.index(etiqueta)]
        except ValueError:
            raise ErrorValidacion(f"Etiqueta {etiqueta} no pertenece a la medición {self.labels}")


@dataclass(frozen=True)
class Scenario:
    """Cantidad de resultados por entrada de cada parte"""
    alice_outcomes: Tuple[int, ...]
    bob_outcomes: Tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(n) for n in self.alice_outcomes)
        b = tuple(int(n) for n in self.bob_outcomes)
        if not a or not b:
            raise ErrorValidacion("Cada parte necesita al menos una entrada")
        if min(a + b) < 2:
            raise ErrorValidacion("Cada entrada necesita al menos dos resultados")
        object.__setattr__(self, "alice_outcomes", a)
        object.__setattr__(self, "bob_outcomes", b)

    @property
    def alice_inputs(self) -> int:
        return len(self.alice_outcomes)

    @property
    def bob_inputs(self) -> int:
        return len(self.bob_outcomes)

    def resultados(self, parte: str, entrada: int) -> int:
        conteos = self.alice_outcomes if parte == "A" else self.bob_outcomes
        if not 1 <= entrada <= len(conteos):
            raise ErrorValidacion(f"Entrada {entrada} fuera de rango para la parte {parte} (1..{len(conteos)})")
        return conteos[entrada - 1]

    def etiquetas(self, parte: str, entrada: int) -> Tuple[int, ...]:
        return etiquetas_para(self.resultados(parte, entrada))

    def indice(self, parte: str, entrada: int, etiqueta: int) -> int:
        etiquetas = self.etiquetas(parte, entrada)
        if etiqueta not in etiquetas:
            raise ErrorValidacion(f"Etiqueta {etiqueta} inválida para {parte}{entrada}; válidas: {etiquetas}")
        return etiquetas.index(etiqueta)

    def pares(self) -> List[Tuple[int, int]]:
        return [(i, j) for i in range(1, self.alice_inputs + 1) for j in range(1, self.bob_inputs + 1)]

    def es_dos_resultados(self) -> bool:
        return all(n == 2 for n in self.alice_outcomes + self.bob_outcomes)


@dataclass(frozen=True, eq=False)
class Realization:
    """Estado compartido y mediciones de Alice y Bob"""
    state: DensityMatrix
    alice: Tuple[Measurement, ...]
    bob: Tuple[Measurement, ...]

    def __post_init__(self):
        if self.state.dim != 4:
            raise ErrorValidacion("La realización necesita un estado de dos qubits")
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "bob", tuple(self.bob))
        if not self.alice or not self.bob:
            raise ErrorValidacion("Cada parte necesita al menos una medición")

    @property
    def scenario(self) -> Scenario:
        return Scenario(tuple(m.n_outcomes for m in self.alice), tuple(m.n_outcomes for m in self.bob))

    def medicion(self, parte: str, entrada: int) -> Measurement:
        mediciones = self.alice if parte == "A" else self.bob
        if not 1 <= entrada <= len(mediciones):
            raise ErrorValidacion(f"La realización no tiene la entrada {parte}{entrada}")
        return mediciones[entrada - 1]


@dataclass(frozen=True, eq=False)
class Behavior:
    """Tabla completa p(a,b|i,j); `table[(i, j)]` es una matriz resultados_A × resultados_B"""
    scenario: Scenario
    table: Mapping[Tuple[int, int], np.ndarray]

    def __post_init__(self):
        tabla: Dict[Tuple[int, int], np.ndarray] = {}
        for i, j in self.scenario.pares():
            if (i, j) not in self.table:
                raise ErrorValidacion(f"Falta el bloque de entradas ({i}, {j})")
            bloque = np.array(self.table[(i, j)], dtype=float)
            forma = (self.scenario.resultados("A", i), self.scenario.resultados("B", j))
            if bloque.shape != forma:
                raise ErrorValidacion(f"Bloque ({i}, {j}) con forma {bloque.shape}; se espera {forma}")
            if bloque.min() < -TOL_ALGEBRA or bloque.max() > 1 + TOL_ALGEBRA:
                raise ErrorValidacion(f"Probabilidades fuera de [0, 1] en el bloque ({i}, {j})")
            bloque = np.clip(bloque, 0.0, 1.0)
            if abs(bloque.sum() - 1) > TOL_NORMALIZACION:
                raise ErrorValidacion(f"Bloque ({i}, {j}) no normalizado: suma {bloque.sum():.12f}")
            bloque.setflags(write=False)
            tabla[(i, j)] = bloque
        if len(self.table) != len(tabla):
            raise ErrorValidacion("La tabla contiene bloques fuera del escenario")
        object.__setattr__(self, "table", tabla)

    def bloque(self, i: int, j: int) -> np.ndarray:
        try:
            return self.table[(i, j)]
        except KeyError:
            raise ErrorValidacion(f"El comportamiento no tiene el par de entradas ({i}, {j})")

    def p(self, a: int, b: int, i: int, j: int) -> float:
        bloque = self.bloque(i, j)
        return float(bloque[self.scenario.indice("A", i, a), self.scenario.indice("B", j, b)])


# ---------------------------------------------------------------------------
# Operaciones
# ---------------------------------------------------------------------------

def pauli_decompose(op: HermitianOperator) -> Tuple[float, float, float, float]:
    """Coeficientes reales (γ0, γ1, γ2, γ3) de (I, σz, σy, σx)"""
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    if op.dim != 2:
        raise ErrorValidacion("pauli_decompose solo admite operadores 2×2")
    m = op.entries
    return tuple(float(np.trace(m @ base).real / 2) for base in (IDENTIDAD_2, SIGMA_Z, SIGMA_Y, SIGMA_X))


def pauli_reconstruct(g0: float, g1: float, g2: float, g3: float) -> HermitianOperator:
    """γ0·I + γ1·σz + γ2·σy + γ3·σx"""
    return HermitianOperator(g0 * IDENTIDAD_2 + g1 * SIGMA_Z + g2 * SIGMA_Y + g3 * SIGMA_X)


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Producto de Kronecker a ⊗ b de dos operadores de qubit"""
    if a.dim != 2 or b.dim != 2:
        raise ErrorValidacion(f"tensor espera operadores 2×2, recibió {a.dim}×{a.dim} y {b.dim}×{b.dim}")
    return HermitianOperator(np.kron(a.entries, b.entries))


def born_joint(state: DensityMatrix, ea: HermitianOperator, eb: HermitianOperator) -> float:
    """tr(ρ · ea ⊗ eb), validada y recortada a [0, 1]"""
    if state.dim != 4:
        raise ErrorValidacion("born_joint necesita un estado de dos qubits")
    valor = np.trace(state.op.entries @ tensor(ea, eb).entries)
    if abs(valor.imag) > TOL_ALGEBRA:
        raise ErrorValidacion(f"Probabilidad con parte imaginaria {valor.imag:.3e}")
    p = float(valor.real)
    if p < -TOL_ALGEBRA or p > 1 + TOL_ALGEBRA:
        raise ErrorValidacion(f"Probabilidad fuera de rango: {p:.15f}")
    return min(1.0, max(0.0, p))


def behavior_from_realization(r: Realization) -> Behavior:
    """Regla de Born sobre todas las entradas y salidas"""
    tabla = {}
    for i, ma in enumerate(r.alice, start=1):
        for j, mb in enumerate(r.bob, start=1):
            bloque = np.empty((ma.n_outcomes, mb.n_outcomes))
            for ka, ea in enumerate(ma.effects):
                for kb, eb in enumerate(mb.effects):
                    bloque[ka, kb] = born_joint(r.state, ea, eb)
            tabla[(i, j)] = bloque
    return Behavior(r.scenario, tabla)


def correlator(b: Behavior, i: int, j: int) -> float:
    """⟨A_i B_j⟩ = Σ a·b·p(ab|ij) para entradas de dos resultados"""
    if b.scenario.resultados("A", i) != 2 or b.scenario.resultados("B", j) != 2:
        raise ErrorValidacion(f"El correlador solo está definido para entradas ±1; ({i}, {j}) no lo es")
    signos = np.array([1.0, -1.0])
    return float(signos @ b.bloque(i, j) @ signos)


def marginal(b: Behavior, parte: str, entrada: int) -> np.ndarray:
    """p(a|i) (o p(b|j)); falla si depende de la entrada de la otra parte"""
    if parte == "A":
        filas = [b.bloque(entrada, j).sum(axis=1) for j in range(1, b.scenario.bob_inputs + 1)]
    elif parte == "B":
        filas = [b.bloque(i, entrada).sum(axis=0) for i in range(1, b.scenario.alice_inputs + 1)]
    else:
        raise ErrorValidacion(f"Parte desconocida: {parte}")
    filas = np.array(filas)
    desvio = float(np.max(filas.max(axis=0) - filas.min(axis=0)))
    if desvio > TOL_SENALIZACION:
        raise ErrorSenalizacion(f"La marginal de {parte}{entrada} depende de la otra entrada (desvío {desvio:.3e})")
    return filas.mean(axis=0)


def projective_measurement(observable) -> Measurement:
    """{(I + O)/2, (I - O)/2} con etiquetas (+1, -1)"""
    o = observable.entries if isinstance(observable, HermitianOperator) else np.array(observable, dtype=complex)
    if float(np.max(np.abs(o @ o - IDENTIDAD_2))) > TOL_ALGEBRA:
        raise ErrorValidacion("El observable no tiene autovalores ±1")
    return Measurement(
        (HermitianOperator((IDENTIDAD_2 + o) / 2), HermitianOperator((IDENTIDAD_2 - o) / 2)),
        kind=TipoMedicion.PROYECTIVA,
        labels=(1, -1),
    )


def phi_plus() -> DensityMatrix:
    """|φ₊⟩⟨φ₊| con |φ₊⟩ = (|00⟩ + |11⟩)/√2"""
    psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    return DensityMatrix(HermitianOperator(np.outer(psi, psi.conj())))


def werner_state(v: float) -> DensityMatrix:
    """v|φ₊⟩⟨φ₊| + (1 - v) I/4"""
    if not 0.0 <= v <= 1.0:
        raise ErrorValidacion(f"Visibilidad fuera de [0, 1]: {v}")
    return DensityMatrix(HermitianOperator(v * phi_plus().op.entries + (1 - v) * np.eye(4) / 4))


def uniform_behavior(scenario: Scenario) -> Behavior:
    """Correlaciones completamente aleatorias"""
    tabla = {}
    for i, j in scenario.pares():
        na, nb = scenario.resultados("A", i), scenario.resultados("B", j)
        tabla[(i, j)] = np.full((na, nb), 1.0 / (na * nb))
    return Behavior(scenario, tabla)


def mix_behaviors(p: float, b1: Behavior, b2: Behavior) -> Behavior:
    """p·b1 + (1 - p)·b2"""
    if not 0.0 <= p <= 1.0:
        raise ErrorValidacion(f"Peso de mezcla fuera de [0, 1]: {p}")
    if b1.scenario != b2.scenario:
        raise ErrorValidacion("Los comportamientos pertenecen a escenarios distintos")
    tabla = {par: p * b1.table[par] + (1 - p) * b2.table[par] for par in b1.scenario.pares()}
    return Behavior(b1.scenario, tabla)


def deterministic_behavior(scenario: Scenario, salidas_alice: Sequence[int],
                           salidas_bob: Sequence[int]) -> Behavior:
    """Estrategia local determinista: una etiqueta fija por entrada"""
    if len(salidas_alice) != scenario.alice_inputs or len(salidas_bob) != scenario.bob_inputs:
        raise ErrorValidacion("La estrategia no asigna una salida a cada entrada")
    tabla = {}
    for i, j in scenario.pares():
        bloque = np.zeros((scenario.resultados("A", i), scenario.resultados("B", j)))
        bloque[scenario.indice("A", i, salidas_alice[i - 1]), scenario.indice("B", j, salidas_bob[j - 1])] = 1.0
        tabla[(i, j)] = bloque
    return Behavior(scenario, tabla)


# ---------------------------------------------------------------------------
# Documentos JSON
# ---------------------------------------------------------------------------

def _entero(valor: Any, ruta: str) -> int:
    if isinstance(valor, bool) or not isinstance(valor, int):
        raise ErrorParseo(f"se espera un entero, se recibió {valor!r}", ruta)
    return valor


def _real(valor: Any, ruta: str) -> float:
    if isinstance(valor, bool) or not isinstance(valor, (int, float)):
        raise ErrorParseo(f"se espera un número, se recibió {valor!r}", ruta)
    if not math.isfinite(valor):
        raise ErrorParseo("número no finito", ruta)
    return float(valor)


def _campo(doc: Mapping, clave: str, ruta: str) -> Any:
    if not isinstance(doc, Mapping):
        raise ErrorParseo("se espera un objeto", ruta)
    if clave not in doc:
        raise ErrorParseo(f"falta el campo '{clave}'", ruta)
    return doc[clave]


def scenario_to_document(scenario: Scenario) -> Dict[str, Any]:
    return {
        "alice_inputs": scenario.alice_inputs,
        "bob_inputs": scenario.bob_inputs,
        "alice_outcomes": list(scenario.alice_outcomes),
        "bob_outcomes": list(scenario.bob_outcomes),
    }


def scenario_from_document(doc: Any, ruta: str = "scenario") -> Scenario:
    n_alice = _entero(_campo(doc, "alice_inputs", ruta), f"{ruta}.alice_inputs")
    n_bob = _entero(_campo(doc, "bob_inputs", ruta), f"{ruta}.bob_inputs")
    conteos = {}
    for parte, n in (("alice_outcomes", n_alice), ("bob_outcomes", n_bob)):
        lista = _campo(doc, parte, ruta)
        if not isinstance(lista, list):
            raise ErrorParseo("se espera una lista", f"{ruta}.{parte}")
        if len(lista) != n:
            raise ErrorParseo(f"se esperan {n} entradas, hay {len(lista)}", f"{ruta}.{parte}")
        conteos[parte] = tuple(_entero(v, f"{ruta}.{parte}[{k}]") for k, v in enumerate(lista))
    try:
        return Scenario(conteos["alice_outcomes"], conteos["bob_outcomes"])
    except ErrorValidacion as e:
        raise ErrorParseo(str(e), ruta)


def behavior_to_document(b: Behavior) -> Dict[str, Any]:
    """Documento JSON: escenario + filas {i, j, a, b, p}"""
    filas = []
    sc = b.scenario
    for i, j in sc.pares():
        for a in sc.etiquetas("A", i):
            for bb in sc.etiquetas("B", j):
                filas.append({"i": i, "j": j, "a": a, "b": bb, "p": b.p(a, bb, i, j)})
    return {"scenario": scenario_to_document(sc), "table": filas}


def behavior_from_document(doc: Any) -> Behavior:
    """Inverso de behavior_to_document; las entradas ausentes valen 0"""
    sc = scenario_from_document(_campo(doc, "scenario", ""), "scenario")
    filas = _campo(doc, "table", "")
    if not isinstance(filas, list):
        raise ErrorParseo("se espera una lista", "table")
    tabla = {(i, j): np.zeros((sc.resultados("A", i), sc.resultados("B", j))) for i, j in sc.pares()}
    vistas = set()
    for k, fila in enumerate(filas):
        ruta = f"table[{k}]"
        i = _entero(_campo(fila, "i", ruta), f"{ruta}.i")
        j = _entero(_campo(fila, "j", ruta), f"{ruta}.j")
        a = _entero(_campo(fila, "a", ruta), f"{ruta}.a")
        bb = _entero(_campo(fila, "b", ruta), f"{ruta}.b")
        p = _real(_campo(fila, "p", ruta), f"{ruta}.p")
        ka, kb = sc.indice("A", i, a), sc.indice("B", j, bb)
        if (i, j, a, bb) in vistas:
            raise ErrorParseo(f"celda duplicada (i={i}, j={j}, a={a}, b={bb})", ruta)
        vistas.add((i, j, a, bb))
        tabla[(i, j)][ka, kb] = p
    return Behavior(sc, tabla)
