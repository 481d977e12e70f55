#!/usr/bin/env python3
"""
Interfaz de línea de comandos para la certificación de aleatoriedad.

Subcomandos: verify, certify, sweep, classical-bound, export-behavior y
export-inequality. Códigos de salida: 0 éxito, 2 sin certificar (o
verificación fallida), 3 fallo del solver, 4 error de entrada.
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from bellcat import (
    COTA_CUANTICA_C3,
    build_c3,
    build_c3_double_prime,
    build_c3_prime,
    catalog,
    classical_bound_witness,
    correlator_terms,
    evaluate,
    guardar_funcional_archivo,
)
from config_env import (
    FORMATOS_VALIDOS,
    SOLVERS_VALIDOS,
    CargadorConfiguracion,
    ConfiguracionCertificacion,
    parsear_grilla,
    parsear_par,
)
from errores import ErrorCapacidad, ErrorParseo, ErrorSenalizacion, ErrorSolver, ErrorValidacion
from npa import (
    COLUMNAS_CURVA,
    OpcionesNPA,
    build_moment_problem,
    export_sdpa,
    quantum_bound,
    randomness_curve,
)
from qcore import (
    Behavior,
    behavior_from_document,
    behavior_from_realization,
    behavior_to_document,
    correlator,
    marginal,
    mix_behaviors,
    uniform_behavior,
)
from randomness import (
    CertifiedRandomness,
    certify_global,
    certify_local,
    projective_guessing_table,
)
from selftest import (
    certificar_povm,
    povm_from_document,
    reference_realization_c3,
    reference_realization_c3_double_prime,
    reference_realization_c3_prime,
    TOL_ANTIALINEACION,
)

logger = logging.getLogger("certificacion")

EXIT_OK = 0
EXIT_NO_CERTIFICADO = 2
EXIT_SOLVER = 3
EXIT_ENTRADA = 4

COMANDOS = ["verify", "certify", "sweep", "classical-bound", "export-behavior", "export-inequality"]
REFERENCIAS = ["c3", "c3p", "c3pp"]


@dataclass
class RunConfig:
    """Parámetros resueltos de una ejecución (argumentos sobre configuración)"""
    command: str
    inequality: str
    alpha: float
    beta: float
    grid: Tuple[float, float, int]
    pair_policy: Union[str, Tuple[int, int]]
    tol: float
    out: Optional[str]
    formato: str
    solver: str
    level: int
    relax: bool = False
    export_sdpa: Optional[str] = None
    behavior: Optional[str] = None
    visibility: Optional[float] = None
    povm: Optional[str] = None
    modo: str = "local"
    referencia: str = "c3pp"

    def __post_init__(self):
        errores = []
        if self.alpha <= 0 or self.beta <= 0:
            errores.append("alpha y beta deben ser positivos")
        if self.tol <= 0:
            errores.append("la tolerancia debe ser positiva")
        if self.command == "sweep" and self.grid[2] < 2:
            errores.append("la grilla necesita al menos 2 pasos")
        if self.formato not in FORMATOS_VALIDOS:
            errores.append(f"formato debe ser uno de {FORMATOS_VALIDOS}")
        if self.level < 1:
            errores.append("el nivel NPA debe ser al menos 1")
        if self.visibility is not None and not 0.0 <= self.visibility <= 1.0:
            errores.append("la visibilidad debe estar en [0, 1]")
        if errores:
            raise ErrorValidacion("; ".join(errores))

    def p_grid(self) -> List[float]:
        inicio, fin, pasos = self.grid
        return [float(p) for p in np.linspace(inicio, fin, pasos)]


def construir_run_config(args: argparse.Namespace, config: ConfiguracionCertificacion) -> RunConfig:
    def valor(nombre: str, defecto: Any) -> Any:
        v = getattr(args, nombre, None)
        return defecto if v is None else v

    try:
        grilla = parsear_grilla(args.grid) if getattr(args, "grid", None) else config.obtener_grilla()
        par = parsear_par(args.pair) if getattr(args, "pair", None) else config.obtener_politica_pares()
    except ValueError as e:
        raise ErrorValidacion(str(e))

    return RunConfig(
        command=args.comando,
        inequality=valor("inequality", "c3"),
        alpha=valor("alpha", config.ALPHA),
        beta=valor("beta", config.BETA),
        grid=grilla,
        pair_policy=par,
        tol=valor("tol", config.TOLERANCIA),
        out=getattr(args, "out", None),
        formato=valor("format", config.FORMATO).lower(),
        solver=valor("solver", config.SOLVER).lower(),
        level=valor("level", config.NIVEL_NPA),
        relax=bool(getattr(args, "relax", False)),
        export_sdpa=getattr(args, "export_sdpa", None),
        behavior=getattr(args, "behavior", None),
        visibility=getattr(args, "visibility", None),
        povm=getattr(args, "povm", None),
        modo=valor("modo", "local"),
        referencia=valor("referencia", "c3pp"),
    )


# ---------------------------------------------------------------------------
# Utilidades de salida
# ---------------------------------------------------------------------------

def redondear(valor: Any) -> Any:
    """12 cifras significativas; NaN y no numéricos se devuelven igual"""
    if isinstance(valor, (bool, np.bool_)) or not isinstance(valor, (int, float, np.floating)):
        return valor
    if isinstance(valor, (int, np.integer)):
        return int(valor)
    if not math.isfinite(valor):
        return float(valor)
    return float(f"{float(valor):.12g}")


def _jsonable(valor: Any) -> Any:
    if valor is None or valor is pd.NA:
        return None
    if isinstance(valor, (np.integer,)):
        return int(valor)
    if isinstance(valor, (float, np.floating)):
        return None if not math.isfinite(valor) else redondear(valor)
    return valor


def _escribir(texto: str, ruta: Optional[str]) -> None:
    if ruta:
        directorio = os.path.dirname(ruta)
        if directorio:
            os.makedirs(directorio, exist_ok=True)
        with open(ruta, "w", encoding="utf-8") as archivo:
            archivo.write(texto)
        print(f"💾 Archivo guardado: {ruta}")
    else:
        sys.stdout.write(texto)


def tabla_a_csv(tabla: pd.DataFrame) -> str:
    redondeada = tabla[COLUMNAS_CURVA].copy()
    for columna in ["p", "violation", "guessing_probability", "min_entropy_bits"]:
        redondeada[columna] = redondeada[columna].map(redondear)
    return redondeada.to_csv(index=False, lineterminator="\n")


def tabla_a_json(tabla: pd.DataFrame) -> str:
    filas = [{k: _jsonable(v) for k, v in fila.items()} for fila in tabla.to_dict(orient="records")]
    return json.dumps(filas, indent=2, ensure_ascii=False) + "\n"


def _cargar_json(ruta: str) -> Any:
    with open(ruta, "r", encoding="utf-8") as archivo:
        try:
            return json.load(archivo)
        except json.JSONDecodeError as e:
            raise ErrorParseo(f"JSON inválido en línea {e.lineno}: {e.msg}", ruta)


def comportamiento_referencia(nombre: str) -> Behavior:
    """Comportamiento de la realización de referencia de C3, C3' o C3''"""
    realizaciones = {
        "c3": reference_realization_c3,
        "c3p": reference_realization_c3_prime,
        "c3pp": reference_realization_c3_double_prime,
    }
    if nombre not in realizaciones:
        raise ErrorValidacion(f"Referencia desconocida '{nombre}'. Opciones: {REFERENCIAS}")
    return behavior_from_realization(realizaciones[nombre]())


# ---------------------------------------------------------------------------
# Comandos
# ---------------------------------------------------------------------------

def cmd_verify(run: RunConfig) -> int:
    """Comprueba la violación máxima, el antialineamiento y la extremalidad de A4 y B4"""
    povm_usuario = None
    if run.povm:
        povm_usuario = povm_from_document(_cargar_json(run.povm))
        logger.info(f"POVM de usuario cargado desde {run.povm}")

    ref_c3 = reference_realization_c3()
    ref_c3p = reference_realization_c3_prime(povm_usuario)
    ref_c3pp = reference_realization_c3_double_prime(povm_usuario)
    comp_c3 = behavior_from_realization(ref_c3)

    chequeos: List[Tuple[str, bool, str]] = []

    def chequear(nombre: str, ok: bool, detalle: str) -> None:
        chequeos.append((nombre, bool(ok), detalle))

    valores = {
        "C3": evaluate(build_c3(), comp_c3),
        f"C3'(α={run.alpha:g})": evaluate(build_c3_prime(run.alpha), behavior_from_realization(ref_c3p)),
        f"C3''(α={run.alpha:g}, β={run.beta:g})": evaluate(
            build_c3_double_prime(run.alpha, run.beta), behavior_from_realization(ref_c3pp)
        ),
    }
    for nombre, valor in valores.items():
        chequear(f"{nombre} = 3√3", abs(valor - COTA_CUANTICA_C3) <= run.tol, f"{valor:.12f}")

    desvio = max(abs(abs(correlator(comp_c3, i, j)) - math.sqrt(3) / 2) for i, j, _ in correlator_terms())
    chequear("|⟨AiBj⟩| = √3/2 en los seis términos", desvio <= run.tol, f"desvío {desvio:.3e}")

    cert_a4 = certificar_povm(ref_c3p, side="alice")
    cert_b4 = certificar_povm(ref_c3pp, side="bob")
    for nombre, cert in (("A4", cert_a4), ("B4", cert_b4)):
        chequear(f"Antialineamiento {nombre}", cert.antialignment_residual <= TOL_ANTIALINEACION,
                 f"residuo {cert.antialignment_residual:.3e}")
        chequear(f"{nombre} extremal", cert.extremal,
                 f"rangos {cert.rank_profile}, σ_min {cert.min_singular_value:.3e}")

    marginal_a4 = marginal(behavior_from_realization(ref_c3p), "A", 4)
    desvio_marginal = float(np.max(np.abs(marginal_a4 - 1 / 3)))
    chequear("p(k|A4) = 1/3", desvio_marginal <= run.tol,
             "[" + ", ".join(f"{v:.12f}" for v in marginal_a4) + "]")

    print("=" * 60)
    print("🔬 VERIFICACIÓN DE AUTOTESTEO")
    print("=" * 60)
    for nombre, ok, detalle in chequeos:
        print(f"{'✅' if ok else '❌'} {nombre}: {detalle}")

    fallidos = [nombre for nombre, ok, _ in chequeos if not ok]
    if run.out:
        reporte = {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in chequeos]}
        _escribir(json.dumps(reporte, indent=2, ensure_ascii=False) + "\n", run.out)
    if fallidos:
        logger.error(f"Verificación fallida: {', '.join(fallidos)}")
        print(f"\n❌ Chequeos fallidos: {', '.join(fallidos)}")
        return EXIT_NO_CERTIFICADO
    print("\n✅ Todos los chequeos pasaron")
    return EXIT_OK


def cmd_certify(run: RunConfig) -> int:
    """Certifica aleatoriedad local (C3') o global (C3'') de un comportamiento"""
    if run.modo == "local":
        funcional = build_c3_prime(run.alpha)
        referencia = "c3p"
    else:
        funcional = build_c3_double_prime(run.alpha, run.beta)
        referencia = "c3pp"

    if run.behavior:
        comportamiento = behavior_from_document(_cargar_json(run.behavior))
        origen = run.behavior
    else:
        comportamiento = comportamiento_referencia(referencia)
        origen = f"referencia {referencia}"
    if run.visibility is not None:
        comportamiento = mix_behaviors(run.visibility, comportamiento, uniform_behavior(comportamiento.scenario))
        origen += f" con visibilidad {run.visibility:g}"

    certificar = certify_local if run.modo == "local" else certify_global
    resultado: CertifiedRandomness = certificar(comportamiento, funcional, run.tol)

    try:
        predictibilidad = projective_guessing_table(comportamiento)
        proyectiva = predictibilidad[predictibilidad["alcance"] == run.modo]["min_entropy_bits"]
    except ErrorSenalizacion as e:
        logger.warning(f"Tabla proyectiva omitida: {e}")
        proyectiva = pd.Series(dtype=float)

    print("=" * 60)
    print(f"🎲 CERTIFICACIÓN {run.modo.upper()} ({funcional.name})")
    print("=" * 60)
    print(f"📄 Comportamiento: {origen}")
    print(f"📈 Valor observado: {resultado.value:.12f} (brecha {resultado.violation_gap:.3e})")
    print(f"🎯 Probabilidad de adivinar: {resultado.guessing_probability:.12f}")
    print(f"🔐 Min-entropía: {resultado.min_entropy_bits:.6f} bits")
    if len(proyectiva):
        print(f"📊 Máximo proyectivo observado: {proyectiva.max():.6f} bits")
    print(f"{'✅' if resultado.certified else '❌'} Certificado: {resultado.certified}")

    if run.out:
        documento = {
            "mode": resultado.mode.value,
            "certified": resultado.certified,
            "value": redondear(resultado.value),
            "violation_gap": redondear(resultado.violation_gap),
            "guessing_probability": redondear(resultado.guessing_probability),
            "min_entropy_bits": redondear(resultado.min_entropy_bits),
        }
        _escribir(json.dumps(documento, indent=2) + "\n", run.out)

    if not resultado.certified:
        logger.error(f"Comportamiento sin certificar: brecha {resultado.violation_gap:.3e} > {run.tol:g}")
        return EXIT_NO_CERTIFICADO
    return EXIT_OK


def cmd_sweep(run: RunConfig, config: ConfiguracionCertificacion) -> int:
    """Curva de min-entropía frente a p con la relajación NPA"""
    funcional = catalog(run.inequality, run.alpha, run.beta)
    opciones = OpcionesNPA.desde_config(config, relajado=run.relax, level=run.level)
    opciones.solver = run.solver
    adaptador = None if opciones.paralelo else opciones.adaptador()

    if run.export_sdpa:
        cota = funcional.quantum_bound
        if cota is None:
            cota = quantum_bound(funcional, opciones.level, adaptador, opciones)
        i, j = run.pair_policy if run.pair_policy != "best" else (1, 1)
        problema = build_moment_problem(funcional, run.grid[1] * cota, (1, 1, i, j), opciones.level, opciones.modo)
        export_sdpa(problema, run.export_sdpa)
        print(f"📦 Problema SDPA exportado: {run.export_sdpa}")

    tabla = randomness_curve(funcional, run.p_grid(), run.pair_policy, opciones, adaptador)
    texto = tabla_a_csv(tabla) if run.formato == "csv" else tabla_a_json(tabla)
    _escribir(texto, run.out)

    fallidas = tabla[~tabla["solver_status"].isin(["optimal", "near_optimal"])]
    if len(fallidas):
        logger.error(f"{len(fallidas)} punto(s) del barrido fallaron: p = {list(fallidas['p'])}")
        return EXIT_SOLVER
    return EXIT_OK


def cmd_classical_bound(run: RunConfig) -> int:
    funcional = catalog(run.inequality, run.alpha, run.beta)
    valor, alice, bob = classical_bound_witness(funcional)
    if run.formato == "json":
        documento = {"name": funcional.name, "classical_bound": redondear(valor),
                     "alice": list(alice), "bob": list(bob)}
        _escribir(json.dumps(documento, indent=2, ensure_ascii=False) + "\n", run.out)
    else:
        print(f"📏 Cota clásica de {funcional.name}: {redondear(valor)}")
        print(f"   Estrategia: A = {list(alice)}, B = {list(bob)}")
    return EXIT_OK


def cmd_export_behavior(run: RunConfig, config: ConfiguracionCertificacion) -> int:
    comportamiento = comportamiento_referencia(run.referencia)
    if run.visibility is not None:
        comportamiento = mix_behaviors(run.visibility, comportamiento, uniform_behavior(comportamiento.scenario))
    ruta = run.out or os.path.join(config.crear_directorio_datos(), f"behavior_{run.referencia}.json")
    _escribir(json.dumps(behavior_to_document(comportamiento), indent=2) + "\n", ruta)
    return EXIT_OK


def cmd_export_inequality(run: RunConfig, config: ConfiguracionCertificacion) -> int:
    funcional = catalog(run.inequality, run.alpha, run.beta)
    ruta = run.out or os.path.join(config.crear_directorio_datos(), f"inequality_{run.inequality}.json")
    guardar_funcional_archivo(funcional, ruta)
    print(f"💾 Archivo guardado: {ruta}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Punto de entrada
# ---------------------------------------------------------------------------

def crear_parser() -> argparse.ArgumentParser:
    comunes = argparse.ArgumentParser(add_help=False)
    comunes.add_argument("--inequality", help="c3, c3p, c3pp, chsh o ruta a un archivo JSON")
    comunes.add_argument("--alpha", type=float, help="Peso α de C3' y C3''")
    comunes.add_argument("--beta", type=float, help="Peso β de C3''")
    comunes.add_argument("--tol", type=float, help="Tolerancia de certificación")
    comunes.add_argument("--format", choices=FORMATOS_VALIDOS, help="Formato de salida")
    comunes.add_argument("--out", help="Archivo de salida (default: stdout)")
    comunes.add_argument("--solver", choices=SOLVERS_VALIDOS, help="Solver semidefinido")
    comunes.add_argument("--level", type=int, help="Nivel de la jerarquía NPA")
    comunes.add_argument("--verbose", "-v", action="store_true", help="Logging detallado")
    comunes.add_argument("--config-file", help="Archivo .env personalizado")
    comunes.add_argument("--show-config", action="store_true", help="Mostrar configuración cargada")

    parser = argparse.ArgumentParser(
        description="Certificación de aleatoriedad independiente del dispositivo con la desigualdad encadenada C3"
    )
    sub = parser.add_subparsers(dest="comando", required=True)

    verify = sub.add_parser("verify", parents=[comunes], help="Verificar autotesteo y POVM extremales")
    verify.add_argument("--povm", help="POVM de usuario para A4 (JSON con coeficientes de Pauli)")

    certify = sub.add_parser("certify", parents=[comunes], help="Certificar aleatoriedad local o global")
    certify.add_argument("modo", choices=["local", "global"])
    certify.add_argument("--behavior", help="Archivo JSON de comportamiento")
    certify.add_argument("--visibility", type=float, help="Mezcla con ruido uniforme (0..1)")

    sweep = sub.add_parser("sweep", parents=[comunes], help="Barrido NPA de min-entropía frente a p")
    sweep.add_argument("--grid", help="inicio:fin:pasos")
    sweep.add_argument("--pair", help="'best' o 'i,j'")
    sweep.add_argument("--relax", action="store_true", help="Restricción de violación ≥ V en lugar de = V")
    sweep.add_argument("--export-sdpa", help="Exportar el problema en el extremo de la grilla (SDPA)")

    sub.add_parser("classical-bound", parents=[comunes], help="Cota clásica por enumeración determinista")

    exp_b = sub.add_parser("export-behavior", parents=[comunes], help="Exportar un comportamiento de referencia")
    exp_b.add_argument("referencia", nargs="?", choices=REFERENCIAS, default="c3pp")
    exp_b.add_argument("--visibility", type=float, help="Mezcla con ruido uniforme (0..1)")

    sub.add_parser("export-inequality", parents=[comunes], help="Exportar un funcional del catálogo")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal del script"""
    parser = crear_parser()
    args = parser.parse_args(argv)

    try:
        config = CargadorConfiguracion.cargar_configuracion(args.config_file)
    except ValueError as e:
        print(f"❌ Error de configuración: {e}", file=sys.stderr)
        return EXIT_ENTRADA

    config.configurar_logging()
    if args.verbose:
        for handler in logging.getLogger().handlers:
            handler.setLevel(logging.DEBUG)
        logging.getLogger().setLevel(logging.DEBUG)
    if args.show_config:
        print(CargadorConfiguracion.describir_configuracion(config))

    try:
        run = construir_run_config(args, config)
        logger.info(f"Comando {run.command} iniciado")
        if run.command == "verify":
            return cmd_verify(run)
        if run.command == "certify":
            return cmd_certify(run)
        if run.command == "sweep":
            return cmd_sweep(run, config)
        if run.command == "classical-bound":
            return cmd_classical_bound(run)
        if run.command == "export-behavior":
            return cmd_export_behavior(run, config)
        return cmd_export_inequality(run, config)
    except ErrorSolver as e:
        logger.error(f"Fallo del solver: {e}")
        print(f"❌ Error del solver: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (ErrorValidacion, ErrorCapacidad, OSError) as e:
        logger.error(f"Error de entrada: {e}")
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_ENTRADA


if __name__ == "__main__":
    sys.exit(main())
