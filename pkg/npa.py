"""
Relajación NPA (nivel Q2 por defecto) para acotar la probabilidad de
adivinar bajo una restricción de violación.

Cada entrada de dos resultados conserva un único proyector (resultado +1);
el efecto −1 se elimina por completitud (I − P). La matriz de momentos es
real simétrica: las celdas iguales bajo reducción o bajo adjunción comparten
variable, de modo que las identificaciones de celdas quedan implícitas en
`matrix_map`.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from bellcat import BellFunctional
from errores import ErrorCapacidad, ErrorSolver, ErrorValidacion
from qcore import Realization, Scenario
from randomness import min_entropy

logger = logging.getLogger(__name__)

Simbolo = Tuple[str, int, int]  # (parte, entrada, etiqueta)

COLUMNAS_CURVA = ["p", "violation", "guessing_probability", "min_entropy_bits", "solver_status"]


# ---------------------------------------------------------------------------
# Monomios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monomial:
    word: Tuple[Simbolo, ...]
    canonical: bool = True
    zero: bool = False

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        if self.zero:
            return "0"
        if not self.word:
            return "1"
        return " ".join(f"{p}{i}[{a:+d}]" for p, i, a in self.word)


CERO = Monomial((), True, True)
IDENTIDAD = Monomial(())


def reduce(word: Sequence[Simbolo]) -> Monomial:
    """Forma canónica: A antes que B, PP → P y P_{a|i}P_{a'|i} → 0"""
    ordenada = sorted(word, key=lambda s: 0 if s[0] == "A" else 1)
    pila: List[Simbolo] = []
    for simbolo in ordenada:
        if simbolo[0] not in ("A", "B"):
            raise ErrorValidacion(f"Parte desconocida en el símbolo {simbolo}")
        if pila and pila[-1][:2] == simbolo[:2]:
            if pila[-1][2] == simbolo[2]:
                continue
            return CERO
        pila.append(tuple(simbolo))
    return Monomial(tuple(pila))


def adjunto(m: Monomial) -> Monomial:
    """Adjunto de un monomio canónico: invierte el orden dentro de cada parte"""
    if m.zero:
        return m
    a = [s for s in m.word if s[0] == "A"]
    b = [s for s in m.word if s[0] == "B"]
    return Monomial(tuple(reversed(a)) + tuple(reversed(b)))


def clave_adjunta(m: Monomial) -> Tuple[Simbolo, ...]:
    """Representante común de un monomio y su adjunto"""
    return min(m.word, adjunto(m).word)


def proyectores(scenario: Scenario) -> List[Simbolo]:
    """Un proyector por entrada (resultado +1); solo escenarios de dos resultados"""
    if not scenario.es_dos_resultados():
        raise ErrorCapacidad("El modo NPA solo admite entradas de dos resultados (mediciones proyectivas)")
    return ([("A", i, 1) for i in range(1, scenario.alice_inputs + 1)]
            + [("B", j, 1) for j in range(1, scenario.bob_inputs + 1)])


def generate_monomials(scenario: Scenario, level: int = 2) -> List[Monomial]:
    """Monomios canónicos distintos de longitud ≤ level, identidad primero"""
    if level < 1:
        raise ErrorValidacion(f"Nivel NPA inválido: {level}")
    simbolos = proyectores(scenario)
    monomios = [IDENTIDAD]
    vistos = {clave_adjunta(IDENTIDAD)}
    for longitud in range(1, level + 1):
        for palabra in itertools.product(simbolos, repeat=longitud):
            m = reduce(palabra)
            if m.zero:
                continue
            clave = clave_adjunta(m)
            if clave not in vistos:
                vistos.add(clave)
                monomios.append(m)
    return monomios


@dataclass
class EstructuraMomentos:
    """Monomios, mapa de celdas a variables y variables de momento"""
    scenario: Scenario
    level: int
    monomials: List[Monomial]
    matrix_map: np.ndarray
    variables: List[Monomial]
    _indices: Dict[Tuple[Simbolo, ...], int] = field(repr=False, default_factory=dict)

    @property
    def psd_dim(self) -> int:
        return len(self.monomials)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def indice_variable(self, word: Sequence[Simbolo]) -> Optional[int]:
        """Variable de momento de una palabra; None si se reduce a cero"""
        m = reduce(word)
        if m.zero:
            return None
        try:
            return self._indices[clave_adjunta(m)]
        except KeyError:
            raise ErrorValidacion(f"El momento ⟨{m}⟩ no aparece en la matriz de nivel {self.level}")


def construir_estructura(scenario: Scenario, level: int = 2) -> EstructuraMomentos:
    monomios = generate_monomials(scenario, level)
    n = len(monomios)
    mapa = np.full((n, n), -1, dtype=int)
    variables: List[Monomial] = []
    indices: Dict[Tuple[Simbolo, ...], int] = {}
    for r, fila in enumerate(monomios):
        izquierda = adjunto(fila).word
        for c, columna in enumerate(monomios):
            m = reduce(izquierda + columna.word)
            if m.zero:
                continue
            clave = clave_adjunta(m)
            if clave not in indices:
                indices[clave] = len(variables)
                variables.append(Monomial(clave))
            mapa[r, c] = indices[clave]
    mapa.setflags(write=False)
    logger.debug(f"Estructura NPA nivel {level}: {n} monomios, {len(variables)} variables")
    return EstructuraMomentos(scenario, level, monomios, mapa, variables, indices)


def forma_probabilidad(estructura: EstructuraMomentos, a: int, b: int, i: int, j: int) -> np.ndarray:
    """p(ab|ij) como forma lineal sobre las variables de momento"""
    sc = estructura.scenario
    sc.indice("A", i, a)
    sc.indice("B", j, b)
    uno = estructura.indice_variable(())
    p = estructura.indice_variable([("A", i, 1)])
    q = estructura.indice_variable([("B", j, 1)])
    pq = estructura.indice_variable([("A", i, 1), ("B", j, 1)])

    forma = np.zeros(estructura.n_variables)
    if a == 1 and b == 1:
        forma[pq] += 1
    elif a == 1:
        forma[p] += 1
        forma[pq] -= 1
    elif b == 1:
        forma[q] += 1
        forma[pq] -= 1
    else:
        forma[uno] += 1
        forma[p] -= 1
        forma[q] -= 1
        forma[pq] += 1
    return forma


def forma_funcional(estructura: EstructuraMomentos, f: BellFunctional) -> np.ndarray:
    if f.scenario != estructura.scenario:
        raise ErrorValidacion(f"El funcional {f.name} no pertenece al escenario de la estructura")
    forma = np.zeros(estructura.n_variables)
    for (a, b, i, j), c in f.coeffs.items():
        forma += c * forma_probabilidad(estructura, a, b, i, j)
    return forma


# ---------------------------------------------------------------------------
# Problema de momentos
# ---------------------------------------------------------------------------

class ModoViolacion(Enum):
    IGUALDAD = "equality"
    DESIGUALDAD = "at_least"


@dataclass
class MomentProblem:
    """
    max objective·x  s.a.  igualdades·x = rhs_igualdades,
                           desigualdades·x ≥ rhs_desigualdades,
                           Γ(x) ⪰ 0
    """
    estructura: EstructuraMomentos
    objective: np.ndarray
    igualdades: np.ndarray
    rhs_igualdades: np.ndarray
    desigualdades: np.ndarray
    rhs_desigualdades: np.ndarray
    nombres_restricciones: List[str]
    advertencias: List[str] = field(default_factory=list)
    target: Optional[Tuple[int, int, int, int]] = None
    violation: Optional[float] = None
    penalizacion: Optional[float] = None

    @property
    def monomials(self) -> List[Monomial]:
        return self.estructura.monomials

    @property
    def matrix_map(self) -> np.ndarray:
        return self.estructura.matrix_map

    @property
    def psd_dim(self) -> int:
        return self.estructura.psd_dim

    @property
    def n_variables(self) -> int:
        return self.estructura.n_variables


def _normalizacion(estructura: EstructuraMomentos) -> np.ndarray:
    fila = np.zeros(estructura.n_variables)
    fila[estructura.indice_variable(())] = 1.0
    return fila


def build_moment_problem(f: BellFunctional, violation: float, target: Tuple[int, int, int, int],
                         level: int = 2, modo: ModoViolacion = ModoViolacion.IGUALDAD,
                         estructura: Optional[EstructuraMomentos] = None) -> MomentProblem:
    """Maximiza p(ab|ij) con la violación del funcional fijada en `violation`"""
    if estructura is None:
        estructura = construir_estructura(f.scenario, level)
    a, b, i, j = target
    objetivo = forma_probabilidad(estructura, a, b, i, j)
    v = forma_funcional(estructura, f)
    normalizacion = _normalizacion(estructura)

    if modo is ModoViolacion.IGUALDAD:
        igualdades = np.vstack([normalizacion, v])
        rhs = np.array([1.0, violation])
        desigualdades = np.zeros((0, estructura.n_variables))
        rhs_des = np.zeros(0)
        nombres = ["normalizacion", "violacion = V"]
    else:
        igualdades = normalizacion[None, :]
        rhs = np.array([1.0])
        desigualdades = v[None, :]
        rhs_des = np.array([violation])
        nombres = ["normalizacion", "violacion >= V"]

    advertencias = []
    if f.quantum_bound is not None and abs(violation) > f.quantum_bound + 1e-9:
        mensaje = f"Violación {violation:.9f} fuera de [-{f.quantum_bound:.9f}, {f.quantum_bound:.9f}]; problema infactible"
        advertencias.append(mensaje)
        logger.warning(mensaje)

    return MomentProblem(estructura, objetivo, igualdades, rhs, desigualdades, rhs_des,
                         nombres, advertencias, tuple(target), violation)


def build_penalized_problem(f: BellFunctional, violation: float, target: Tuple[int, int, int, int],
                            penalizacion: float, level: int = 2, modo: ModoViolacion = ModoViolacion.IGUALDAD,
                            estructura: Optional[EstructuraMomentos] = None) -> MomentProblem:
    """
    Forma lagrangiana de `build_moment_problem`:

        max p(ab|ij) + λ·s·(v·x − V·⟨1⟩)  s.a.  ⟨1⟩ = 1, Γ(x) ⪰ 0

    Todo x con v·x = V (o v·x ≥ V en modo desigualdad) vale lo mismo en
    ambos problemas, así que el óptimo es una cota superior del original
    para cualquier λ ≥ 0. El conjunto factible conserva interior aun con V
    en la cota cuántica. s = signo(V) en modo igualdad, +1 en desigualdad.
    """
    if penalizacion < 0:
        raise ErrorValidacion(f"La penalización debe ser no negativa: {penalizacion}")
    if estructura is None:
        estructura = construir_estructura(f.scenario, level)
    a, b, i, j = target
    normalizacion = _normalizacion(estructura)
    signo = -1.0 if modo is ModoViolacion.IGUALDAD and violation < 0 else 1.0
    v = forma_funcional(estructura, f)
    objetivo = forma_probabilidad(estructura, a, b, i, j) + penalizacion * signo * (v - violation * normalizacion)

    return MomentProblem(
        estructura, objetivo, normalizacion[None, :], np.array([1.0]),
        np.zeros((0, estructura.n_variables)), np.zeros(0),
        ["normalizacion"], [], tuple(target), violation, penalizacion,
    )


def moment_matrix_from_realization(estructura: EstructuraMomentos, r: Realization,
                                   parte_real: bool = True) -> np.ndarray:
    """Γ[r, c] = tr(ρ · O_r† O_c) con los proyectores de una realización proyectiva"""
    if r.scenario != estructura.scenario:
        raise ErrorValidacion("La realización no corresponde al escenario de la estructura")

    def operador(m: Monomial) -> np.ndarray:
        lado_a = np.eye(2, dtype=complex)
        lado_b = np.eye(2, dtype=complex)
        for parte, entrada, etiqueta in m.word:
            efecto = r.medicion(parte, entrada).effect(etiqueta).entries
            if parte == "A":
                lado_a = lado_a @ efecto
            else:
                lado_b = lado_b @ efecto
        return np.kron(lado_a, lado_b)

    operadores = [operador(m) for m in estructura.monomials]
    rho = r.state.op.entries
    n = len(operadores)
    gamma = np.empty((n, n), dtype=complex)
    for fila in range(n):
        for col in range(n):
            gamma[fila, col] = np.trace(rho @ operadores[fila].conj().T @ operadores[col])
    return gamma.real.copy() if parte_real else gamma


# ---------------------------------------------------------------------------
# Adaptador de solver
# ---------------------------------------------------------------------------

class EstadoSolver(Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    FAILURE = "failure"


@dataclass(frozen=True)
class ResultadoSolver:
    status: EstadoSolver
    primal: float
    dual: float
    residual: float
    valor: float = float("nan")

    @property
    def utilizable(self) -> bool:
        return self.status in (EstadoSolver.OPTIMAL, EstadoSolver.NEAR_OPTIMAL) and math.isfinite(self.valor)


class SolverAdapterContract(Protocol):
    def submit(self, problem: MomentProblem) -> ResultadoSolver:
        ...


def _gamma_numerica(mapa: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.where(mapa >= 0, x[np.maximum(mapa, 0)], 0.0)


class AdaptadorCvxpy:
    """Resuelve MomentProblem con cvxpy; una plantilla parametrizada por estructura de restricciones"""

    def __init__(self, solver: str = "clarabel", tol_residuo: float = 1e-7, tol_brecha: float = 1e-6):
        try:
            import cvxpy as cp
        except ImportError:
            raise ErrorSolver("cvxpy no está instalado", EstadoSolver.FAILURE.value)
        self.cp = cp
        self.solver = solver.lower()
        self.tol_residuo = tol_residuo
        self.tol_brecha = tol_brecha
        self._plantillas: Dict[tuple, dict] = {}

    def _plantilla(self, problema: MomentProblem) -> dict:
        clave = (
            problema.matrix_map.tobytes(), problema.matrix_map.shape,
            problema.igualdades.tobytes(), problema.igualdades.shape,
            problema.desigualdades.tobytes(), problema.desigualdades.shape,
        )
        if clave in self._plantillas:
            return self._plantillas[clave]

        cp = self.cp
        n, m = problema.psd_dim, problema.n_variables
        mapa = problema.matrix_map
        seleccion = np.zeros((n * n, m))
        for (fila, col), k in np.ndenumerate(mapa):
            if k >= 0:
                seleccion[fila + col * n, k] = 1.0

        x = cp.Variable(m)
        c = cp.Parameter(m)
        gamma = cp.reshape(seleccion @ x, (n, n), order="F")
        psd = gamma >> 0
        restricciones = [psd]
        rhs_eq = cp.Parameter(len(problema.rhs_igualdades))
        restricciones.append(problema.igualdades @ x == rhs_eq)
        desigualdad = None
        rhs_in = None
        if len(problema.rhs_desigualdades):
            rhs_in = cp.Parameter(len(problema.rhs_desigualdades))
            desigualdad = problema.desigualdades @ x >= rhs_in
            restricciones.append(desigualdad)

        plantilla = {
            "problema": cp.Problem(cp.Maximize(c @ x), restricciones),
            "x": x, "c": c, "rhs_eq": rhs_eq, "rhs_in": rhs_in,
            "psd": psd, "desigualdad": desigualdad,
        }
        self._plantillas[clave] = plantilla
        return plantilla

    def _opciones_solver(self) -> dict:
        cp = self.cp
        if self.solver == "scs":
            return {"solver": cp.SCS, "eps_abs": 1e-9, "eps_rel": 1e-9, "max_iters": 200000}
        if self.solver == "clarabel":
            return {"solver": cp.CLARABEL}
        raise ErrorSolver(f"Solver desconocido: {self.solver}", EstadoSolver.FAILURE.value)

    def submit(self, problem: MomentProblem) -> ResultadoSolver:
        cp = self.cp
        plantilla = self._plantilla(problem)
        plantilla["c"].value = problem.objective
        plantilla["rhs_eq"].value = problem.rhs_igualdades
        if plantilla["rhs_in"] is not None:
            plantilla["rhs_in"].value = problem.rhs_desigualdades

        try:
            plantilla["problema"].solve(**self._opciones_solver())
        except cp.error.SolverError as e:
            logger.warning(f"Fallo del solver {self.solver}: {e}")
            return ResultadoSolver(EstadoSolver.FAILURE, math.nan, math.nan, math.inf)

        estado_cvxpy = plantilla["problema"].status
        if estado_cvxpy in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return ResultadoSolver(EstadoSolver.INFEASIBLE, math.nan, math.nan, math.inf)
        if estado_cvxpy in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            return ResultadoSolver(EstadoSolver.UNBOUNDED, math.inf, math.inf, math.inf)
        if estado_cvxpy not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or plantilla["x"].value is None:
            return ResultadoSolver(EstadoSolver.FAILURE, math.nan, math.nan, math.inf)

        x = np.asarray(plantilla["x"].value, dtype=float)
        primal = float(problem.objective @ x)
        residuo = self._residuo_primal(problem, x)
        dual, dual_valido = self._valor_dual(problem, plantilla)

        brecha = abs(primal - dual) if dual_valido else math.inf
        optimo = (estado_cvxpy == cp.OPTIMAL and residuo <= self.tol_residuo and brecha <= self.tol_brecha)
        estado = EstadoSolver.OPTIMAL if optimo else EstadoSolver.NEAR_OPTIMAL
        if not optimo:
            logger.warning(
                f"Resultado casi óptimo ({estado_cvxpy}): residuo {residuo:.2e}, brecha {brecha:.2e}"
            )
        return ResultadoSolver(estado, primal, dual, residuo, dual if dual_valido else primal)

    def _residuo_primal(self, problema: MomentProblem, x: np.ndarray) -> float:
        residuos = [float(np.max(np.abs(problema.igualdades @ x - problema.rhs_igualdades)))]
        if len(problema.rhs_desigualdades):
            residuos.append(float(np.max(np.maximum(problema.rhs_desigualdades - problema.desigualdades @ x, 0.0))))
        gamma = _gamma_numerica(problema.matrix_map, x)
        residuos.append(max(0.0, -float(np.linalg.eigvalsh((gamma + gamma.T) / 2).min())))
        return max(residuos)

    def _valor_dual(self, problema: MomentProblem, plantilla: dict) -> Tuple[float, bool]:
        """
        Cota dual bᵀy − dᵀw reconstruida desde Z (cono PSD) y w (desigualdades).

        y se obtiene por mínimos cuadrados de Eᵀy = c + Dᵀw + Mᵀvec(Z); la cota
        solo vale si esa ecuación se cumple con Z ⪰ 0 y w ≥ 0.
        """
        z = plantilla["psd"].dual_value
        if z is None:
            return math.nan, False
        z = np.asarray(z, dtype=float)
        # algunas versiones de cvxpy entregan el dual del problema de minimización con signo opuesto
        if np.trace(z) < 0:
            z = -z
        w = np.zeros(0)
        if plantilla["desigualdad"] is not None:
            w = np.atleast_1d(np.asarray(plantilla["desigualdad"].dual_value, dtype=float))
            w = np.abs(w)

        mapa = problema.matrix_map
        validas = mapa >= 0
        mz = np.bincount(mapa[validas], weights=z[validas], minlength=problema.n_variables)
        lado_derecho = problema.objective + problema.desigualdades.T @ w + mz
        y, *_ = np.linalg.lstsq(problema.igualdades.T, lado_derecho, rcond=None)
        estacionaridad = float(np.max(np.abs(problema.igualdades.T @ y - lado_derecho)))
        escala = max(1.0, float(np.max(np.abs(lado_derecho))))
        minimo_z = float(np.linalg.eigvalsh((z + z.T) / 2).min())

        valido = estacionaridad <= self.tol_residuo * escala * 10 and minimo_z >= -self.tol_residuo
        dual = float(problema.rhs_igualdades @ y - problema.rhs_desigualdades @ w)
        return dual, valido


def crear_adaptador(solver: str = "clarabel", tol_residuo: float = 1e-7,
                    tol_brecha: float = 1e-6) -> AdaptadorCvxpy:
    return AdaptadorCvxpy(solver, tol_residuo, tol_brecha)


# ---------------------------------------------------------------------------
# Exportación SDPA
# ---------------------------------------------------------------------------

def export_sdpa(problem: MomentProblem, ruta: str) -> str:
    """
    Escribe el problema en formato SDPA disperso.

    SDPA minimiza cᵀx con Σ x_k F_k − F_0 ⪰ 0, por lo que el objetivo se
    niega. Bloque 1: matriz de momentos. Bloque 2: bloque diagonal con cada
    igualdad como par de desigualdades y luego las desigualdades propias.
    """
    m = problem.n_variables
    n = problem.psd_dim
    filas_lp = []
    for fila, b in zip(problem.igualdades, problem.rhs_igualdades):
        filas_lp.append((fila, b))
        filas_lp.append((-fila, -b))
    for fila, d in zip(problem.desigualdades, problem.rhs_desigualdades):
        filas_lp.append((fila, d))

    def numero(v: float) -> str:
        return f"{v:.17g}"

    lineas = [
        f'"Relajacion NPA nivel {problem.estructura.level}: maximizar p{problem.target} con V = {problem.violation}"',
        str(m),
        "2",
        f"{n} -{len(filas_lp)}",
        " ".join(numero(-c) for c in problem.objective),
    ]
    for q, (_, constante) in enumerate(filas_lp, start=1):
        if constante != 0:
            lineas.append(f"0 2 {q} {q} {numero(constante)}")
    for k in range(m):
        for fila in range(n):
            for col in range(fila, n):
                if problem.matrix_map[fila, col] == k:
                    lineas.append(f"{k + 1} 1 {fila + 1} {col + 1} 1")
        for q, (coeficientes, _) in enumerate(filas_lp, start=1):
            if coeficientes[k] != 0:
                lineas.append(f"{k + 1} 2 {q} {q} {numero(coeficientes[k])}")

    with open(ruta, "w", encoding="utf-8") as archivo:
        archivo.write("\n".join(lineas) + "\n")
    logger.info(f"Problema SDPA exportado a {ruta} ({m} variables, bloques {n} y -{len(filas_lp)})")
    return ruta


# ---------------------------------------------------------------------------
# Cotas y curvas
# ---------------------------------------------------------------------------

@dataclass
class OpcionesNPA:
    level: int = 2
    modo: ModoViolacion = ModoViolacion.IGUALDAD
    solver: str = "clarabel"
    tol_residuo: float = 1e-7
    tol_brecha: float = 1e-6
    margen: float = 1e-7
    penalizaciones: Tuple[float, ...] = (1e2, 1e3, 1e4)
    paralelo: bool = False
    trabajadores: int = 4

    @classmethod
    def desde_config(cls, config, relajado: bool = False, level: Optional[int] = None) -> "OpcionesNPA":
        return cls(
            level=level or config.NIVEL_NPA,
            modo=ModoViolacion.DESIGUALDAD if relajado else ModoViolacion.IGUALDAD,
            solver=config.SOLVER,
            tol_residuo=config.TOL_RESIDUO_SOLVER,
            tol_brecha=config.TOL_BRECHA_SOLVER,
            margen=config.MARGEN_VIOLACION,
            paralelo=config.ENABLE_PARALLEL_PROCESSING,
            trabajadores=config.PARALLEL_WORKERS,
        )

    def adaptador(self) -> AdaptadorCvxpy:
        return crear_adaptador(self.solver, self.tol_residuo, self.tol_brecha)


def quantum_bound(f: BellFunctional, level: int = 2, adaptador: Optional[SolverAdapterContract] = None,
                  opciones: Optional[OpcionesNPA] = None) -> float:
    """Máximo del funcional sobre el conjunto de momentos de nivel `level`"""
    opciones = opciones or OpcionesNPA(level=level)
    adaptador = adaptador or opciones.adaptador()
    estructura = construir_estructura(f.scenario, level)
    normalizacion = _normalizacion(estructura)
    problema = MomentProblem(
        estructura,
        forma_funcional(estructura, f),
        normalizacion[None, :],
        np.array([1.0]),
        np.zeros((0, estructura.n_variables)),
        np.zeros(0),
        ["normalizacion"],
    )
    resultado = adaptador.submit(problema)
    if not resultado.utilizable:
        raise ErrorSolver(f"No se pudo acotar {f.name}", resultado.status.value)
    logger.info(f"Cota cuántica Q{level} de {f.name}: {resultado.valor:.9f} ({resultado.status.value})")
    return resultado.valor


_PRIORIDAD_ESTADO = {
    EstadoSolver.OPTIMAL: 0,
    EstadoSolver.NEAR_OPTIMAL: 1,
    EstadoSolver.INFEASIBLE: 2,
    EstadoSolver.UNBOUNDED: 2,
    EstadoSolver.FAILURE: 3,
}


def _resolver_objetivo(f: BellFunctional, estructura: EstructuraMomentos, violacion: float,
                       objetivo: Tuple[int, int, int, int], cota: float, opciones: OpcionesNPA,
                       adaptador: SolverAdapterContract) -> ResultadoSolver:
    # en la cota la restricción de violación deja el conjunto sin interior
    en_la_cota = abs(violacion) >= cota * (1 - opciones.margen)
    if not en_la_cota:
        resultado = adaptador.submit(
            build_moment_problem(f, violacion, objetivo, opciones.level, opciones.modo, estructura)
        )
        if resultado.utilizable or not opciones.penalizaciones:
            return resultado
        logger.warning(f"Punto V = {violacion:.9f} inutilizable ({resultado.status.value}); se usa la forma penalizada")
    else:
        resultado = ResultadoSolver(EstadoSolver.FAILURE, math.nan, math.nan, math.inf)

    mejor: Optional[ResultadoSolver] = None
    for penalizacion in opciones.penalizaciones:
        problema = build_penalized_problem(f, violacion, objetivo, penalizacion, opciones.level, opciones.modo, estructura)
        candidato = adaptador.submit(problema)
        if not candidato.utilizable:
            logger.debug(f"Penalización {penalizacion:g} inutilizable ({candidato.status.value})")
            continue
        if mejor is None or candidato.valor < mejor.valor:
            mejor = candidato
    return mejor if mejor is not None else resultado


def max_target_probability(f: BellFunctional, violation: float, target: Tuple[int, int, int, int],
                           opciones: Optional[OpcionesNPA] = None,
                           adaptador: Optional[SolverAdapterContract] = None) -> ResultadoSolver:
    """Cota superior de p(ab|ij) con violación V; usa la forma penalizada si la directa no es utilizable"""
    opciones = opciones or OpcionesNPA()
    adaptador = adaptador or opciones.adaptador()
    estructura = construir_estructura(f.scenario, opciones.level)
    _, _, i, j = target
    f.scenario.resultados("A", i)
    f.scenario.resultados("B", j)
    cota = f.quantum_bound
    if cota is None:
        cota = quantum_bound(f, opciones.level, adaptador, opciones)
    return _resolver_objetivo(f, estructura, violation, target, cota, opciones, adaptador)


def _punto_curva(f: BellFunctional, estructura: EstructuraMomentos, p: float, cota: float,
                 pares: List[Tuple[int, int]], opciones: OpcionesNPA,
                 adaptador: Optional[SolverAdapterContract]) -> dict:
    adaptador = adaptador or opciones.adaptador()
    violacion = p * cota
    mejor: Optional[Tuple[float, int, int]] = None
    peor_estado = EstadoSolver.OPTIMAL

    for i, j in pares:
        g_par = 0.0
        for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            resultado = _resolver_objetivo(f, estructura, violacion, (a, b, i, j), cota, opciones, adaptador)
            if _PRIORIDAD_ESTADO[resultado.status] > _PRIORIDAD_ESTADO[peor_estado]:
                peor_estado = resultado.status
            if not resultado.utilizable:
                g_par = math.nan
                break
            g_par = max(g_par, resultado.valor)
        if math.isnan(g_par):
            break
        g_par = min(g_par, 1.0)
        if mejor is None or g_par < mejor[0]:
            mejor = (g_par, i, j)

    if peor_estado not in (EstadoSolver.OPTIMAL, EstadoSolver.NEAR_OPTIMAL) or mejor is None:
        logger.error(f"p = {p:.6f}: punto marcado como fallido ({peor_estado.value})")
        return {"p": p, "violation": violacion, "guessing_probability": math.nan,
                "min_entropy_bits": math.nan, "solver_status": peor_estado.value, "i": None, "j": None}

    g, i, j = mejor
    entropia = min_entropy(max(g, np.finfo(float).tiny))
    logger.info(f"p = {p:.6f}: V = {violacion:.6f}, G = {g:.9f}, H = {entropia:.6f} bits, par ({i}, {j})")
    return {"p": p, "violation": violacion, "guessing_probability": g,
            "min_entropy_bits": entropia, "solver_status": peor_estado.value, "i": i, "j": j}


def randomness_curve(f: BellFunctional, p_grid: Sequence[float],
                     pair_policy: Union[str, Tuple[int, int]] = "best",
                     opciones: Optional[OpcionesNPA] = None,
                     adaptador: Optional[SolverAdapterContract] = None) -> pd.DataFrame:
    """
    Cota de min-entropía frente a la visibilidad p de las correlaciones
    pR + (1 − p)S, con V = p·(máximo cuántico del funcional).

    Un fallo del solver en un punto marca la fila (valores NaN) y el barrido
    continúa. Las filas conservan el orden de la grilla.
    """
    opciones = opciones or OpcionesNPA()
    estructura = construir_estructura(f.scenario, opciones.level)
    for p in p_grid:
        if not 0.0 <= p <= 1.0:
            raise ErrorValidacion(f"Valor de p fuera de [0, 1]: {p}")

    if pair_policy == "best":
        pares = f.scenario.pares()
    else:
        i, j = pair_policy
        f.scenario.resultados("A", i)
        f.scenario.resultados("B", j)
        pares = [(i, j)]

    cota = f.quantum_bound
    if cota is None:
        cota = quantum_bound(f, opciones.level, adaptador, opciones)

    logger.info(f"Barrido de {f.name}: {len(p_grid)} puntos, {len(pares)} pares, cota {cota:.9f}")
    if opciones.paralelo and adaptador is None and len(p_grid) > 1:
        with ThreadPoolExecutor(max_workers=opciones.trabajadores) as executor:
            filas = list(executor.map(
                lambda p: _punto_curva(f, estructura, p, cota, pares, opciones, None), p_grid
            ))
    else:
        adaptador = adaptador or opciones.adaptador()
        filas = [_punto_curva(f, estructura, p, cota, pares, opciones, adaptador) for p in p_grid]

    tabla = pd.DataFrame(filas, columns=COLUMNAS_CURVA + ["i", "j"])
    return tabla.astype({"i": "Int64", "j": "Int64"})
