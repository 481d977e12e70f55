"""
Realizaciones de referencia, POVM antialineados y extracción de
coeficientes de Bloch a partir de comportamientos.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errores import ErrorConstruccion, ErrorParseo, ErrorValidacion
from qcore import (
    IDENTIDAD_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Behavior,
    HermitianOperator,
    Measurement,
    Realization,
    TipoMedicion,
    _campo,
    _real,
    born_joint,
    marginal,
    pauli_decompose,
    pauli_reconstruct,
    phi_plus,
    projective_measurement,
)

logger = logging.getLogger(__name__)

RAIZ3 = math.sqrt(3)
TOL_DIRECCION = 1e-10
TOL_RANGO = 1e-10
TOL_INDEPENDENCIA = 1e-8
TOL_ANTIALINEACION = 1e-10

# p(k, b | A4, Bj) que deben anularse: (k, b, j)
OBJETIVOS_A4 = [(1, 1, 1), (2, -1, 2), (3, 1, 3)]
# p(a, l | Ai, B4) que deben anularse: (a, l, i)
OBJETIVOS_B4 = [(-1, 1, 1), (1, 2, 2), (-1, 3, 3)]

OBSERVABLES_ALICE = (
    SIGMA_Z,
    (RAIZ3 * SIGMA_X + SIGMA_Z) / 2,
    (RAIZ3 * SIGMA_X - SIGMA_Z) / 2,
)
OBSERVABLES_BOB = (
    (SIGMA_X + RAIZ3 * SIGMA_Z) / 2,
    SIGMA_X,
    (SIGMA_X - RAIZ3 * SIGMA_Z) / 2,
)


@dataclass(frozen=True)
class BlochVector:
    """Efecto γ0·I + z·σz + y·σy + x·σx"""
    x: float
    y: float
    z: float
    weight: float

    @property
    def norma(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)

    @property
    def es_valido(self) -> bool:
        """True si describe un efecto de qubit (0 ≤ E ≤ I)"""
        if not -TOL_RANGO <= self.weight <= 1 + TOL_RANGO:
            return False
        return self.norma <= min(self.weight, 1 - self.weight) + TOL_RANGO

    def a_operador(self) -> HermitianOperator:
        return pauli_reconstruct(self.weight, self.z, self.y, self.x)


@dataclass(frozen=True)
class PovmCertificate:
    povm: Measurement
    antialignment_residual: Optional[float]
    extremal: bool
    rank_profile: List[int]
    min_singular_value: float = 0.0


def vector_bloch(op: HermitianOperator) -> np.ndarray:
    """(x, y, z) de un operador de qubit"""
    _, g1, g2, g3 = pauli_decompose(op)
    return np.array([g3, g2, g1])


def _direccion_proyector(observable: np.ndarray, etiqueta: int) -> np.ndarray:
    """Dirección de Bloch del proyector (I + etiqueta·O)/2"""
    return etiqueta * vector_bloch(HermitianOperator(observable))


# ---------------------------------------------------------------------------
# Construcciones
# ---------------------------------------------------------------------------

def reference_realization_c3() -> Realization:
    """|φ₊⟩ con los observables que alcanzan 3√3 en C3"""
    return Realization(
        phi_plus(),
        tuple(projective_measurement(o) for o in OBSERVABLES_ALICE),
        tuple(projective_measurement(o) for o in OBSERVABLES_BOB),
    )


def antialigned_povm(directions: Sequence[Sequence[float]]) -> Measurement:
    """
    POVM de tres resultados E_k = (I − n_k·σ)/3.

    Las direcciones deben ser unitarias y sumar cero; en otro caso los
    efectos no pueden completar la identidad con peso 1/3.
    """
    vectores = np.array(directions, dtype=float)
    if vectores.shape != (3, 3):
        raise ErrorConstruccion(f"Se esperan tres direcciones en R³, se recibió forma {vectores.shape}")
    for k, n in enumerate(vectores, start=1):
        if abs(np.linalg.norm(n) - 1) > TOL_DIRECCION:
            raise ErrorConstruccion(f"La dirección {k} no es unitaria (norma {np.linalg.norm(n):.12f})")
    suma = vectores.sum(axis=0)
    if np.max(np.abs(suma)) > TOL_DIRECCION:
        raise ErrorConstruccion(f"Las direcciones no suman cero: {suma}")

    efectos = tuple(
        HermitianOperator((IDENTIDAD_2 - (n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)) / 3)
        for n in vectores
    )
    return Measurement(efectos, kind=TipoMedicion.GENERAL, labels=(1, 2, 3))


def reference_povm_a4() -> Measurement:
    """A4: antialineado con B_{+1|1}, B_{−1|2} y B_{+1|3}"""
    return antialigned_povm([
        _direccion_proyector(OBSERVABLES_BOB[0], 1),
        _direccion_proyector(OBSERVABLES_BOB[1], -1),
        _direccion_proyector(OBSERVABLES_BOB[2], 1),
    ])


def reference_povm_b4() -> Measurement:
    """B4: antialineado con A_{−1|1}, A_{+1|2} y A_{−1|3}"""
    return antialigned_povm([
        _direccion_proyector(OBSERVABLES_ALICE[0], -1),
        _direccion_proyector(OBSERVABLES_ALICE[1], 1),
        _direccion_proyector(OBSERVABLES_ALICE[2], -1),
    ])


def reference_realization_c3_prime(povm: Optional[Measurement] = None) -> Realization:
    """Referencia de C3 con A4 (u otro POVM) como cuarta entrada de Alice"""
    base = reference_realization_c3()
    return Realization(base.state, base.alice + (povm or reference_povm_a4(),), base.bob)


def reference_realization_c3_double_prime(povm: Optional[Measurement] = None) -> Realization:
    base = reference_realization_c3_prime(povm)
    return Realization(base.state, base.alice, base.bob + (reference_povm_b4(),))


# ---------------------------------------------------------------------------
# Verificaciones
# ---------------------------------------------------------------------------

def verify_antialignment(r: Realization, targets: Optional[Sequence[Tuple[int, int, int]]] = None,
                         side: str = "alice", povm_input: int = 4) -> float:
    """
    Máximo de las probabilidades que el antialineamiento exige nulas.

    side="alice": cada objetivo (k, b, j) es p(k, b | A_povm, B_j).
    side="bob":   cada objetivo (a, l, i) es p(a, l | A_i, B_povm).
    """
    if side not in ("alice", "bob"):
        raise ErrorValidacion(f"Parte desconocida: {side}")
    if targets is None:
        targets = OBJETIVOS_A4 if side == "alice" else OBJETIVOS_B4

    residuo = 0.0
    for primero, segundo, entrada in targets:
        if side == "alice":
            ea = r.medicion("A", povm_input).effect(primero)
            eb = r.medicion("B", entrada).effect(segundo)
        else:
            ea = r.medicion("A", entrada).effect(primero)
            eb = r.medicion("B", povm_input).effect(segundo)
        residuo = max(residuo, born_joint(r.state, ea, eb))
    return residuo


def is_extremal_qubit_povm(m: Measurement) -> PovmCertificate:
    """Extremal si todos los efectos son de rango uno y linealmente independientes"""
    rangos = [int(np.sum(e.eigenvalues() > TOL_RANGO)) for e in m.effects]
    coeficientes = np.array([pauli_decompose(e) for e in m.effects])
    if len(m.effects) > 4:
        minimo = 0.0
    else:
        minimo = float(np.linalg.svd(coeficientes, compute_uv=False).min())
    extremal = all(r == 1 for r in rangos) and minimo > TOL_INDEPENDENCIA
    return PovmCertificate(m, None, extremal, rangos, minimo)


def certificar_povm(r: Realization, side: str = "alice", povm_input: int = 4) -> PovmCertificate:
    """Extremalidad y residuo de antialineamiento del POVM de una realización"""
    parte = "A" if side == "alice" else "B"
    certificado = is_extremal_qubit_povm(r.medicion(parte, povm_input))
    residuo = verify_antialignment(r, side=side, povm_input=povm_input)
    logger.info(
        f"POVM {parte}{povm_input}: extremal={certificado.extremal}, rangos={certificado.rank_profile}, "
        f"residuo={residuo:.3e}"
    )
    return PovmCertificate(certificado.povm, residuo, certificado.extremal,
                           certificado.rank_profile, certificado.min_singular_value)


def bloch_from_behavior(b: Behavior, povm_input: int = 4,
                        bob_inputs: Tuple[int, int, int] = (1, 2, 3)) -> List[BlochVector]:
    """
    Coeficientes de Bloch de cada efecto del POVM de Alice.

    Con E_j = Σ_b b·p(k, b | A_povm, B_j):
        γ0 = p(k|A_povm), γ1 = (E_1 − E_3)/√3, γ2 = −E_1 + E_2 − E_3, γ3 = E_2
    """
    sc = b.scenario
    sc.resultados("A", povm_input)
    for j in bob_inputs:
        if sc.resultados("B", j) != 2:
            raise ErrorValidacion(f"La entrada B{j} debe tener dos resultados")

    pesos = marginal(b, "A", povm_input)
    signos = np.array([1.0, -1.0])
    vectores = []
    for k in range(sc.resultados("A", povm_input)):
        e1, e2, e3 = (float(b.bloque(povm_input, j)[k, :] @ signos) for j in bob_inputs)
        vectores.append(BlochVector(
            x=e2,
            y=-e1 + e2 - e3,
            z=(e1 - e3) / RAIZ3,
            weight=float(pesos[k]),
        ))
    return vectores


# ---------------------------------------------------------------------------
# Documentos de POVM
# ---------------------------------------------------------------------------

def povm_to_document(m: Measurement, nombre: str = "povm") -> dict:
    """{"name", "effects": [[γ0, γ1, γ2, γ3], ...]} en la base (I, σz, σy, σx)"""
    return {"name": nombre, "effects": [list(pauli_decompose(e)) for e in m.effects]}


def povm_from_document(documento) -> Measurement:
    efectos = _campo(documento, "effects", "")
    if not isinstance(efectos, list) or len(efectos) < 2:
        raise ErrorParseo("se espera una lista de al menos dos efectos", "effects")
    operadores = []
    for k, coeficientes in enumerate(efectos):
        ruta = f"effects[{k}]"
        if not isinstance(coeficientes, list) or len(coeficientes) != 4:
            raise ErrorParseo("se esperan cuatro coeficientes (I, σz, σy, σx)", ruta)
        gammas = [_real(g, f"{ruta}[{t}]") for t, g in enumerate(coeficientes)]
        operadores.append(pauli_reconstruct(*gammas))
    return Measurement(tuple(operadores), kind=TipoMedicion.GENERAL)
