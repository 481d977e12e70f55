#!/usr/bin/env python3
"""
Pruebas del catálogo de funcionales de Bell: evaluación, cotas clásicas y
documentos JSON.
"""

import itertools
import json
import math
import sys

import numpy as np
import pytest

from bellcat import (
    BellFunctional,
    build_c3,
    build_c3_double_prime,
    build_c3_prime,
    build_chsh,
    catalog,
    classical_bound,
    classical_bound_witness,
    evaluate,
    guardar_funcional_archivo,
    load_functional,
    save_functional,
)
from errores import ErrorCapacidad, ErrorParseo, ErrorValidacion
from qcore import (
    Behavior,
    DensityMatrix,
    HermitianOperator,
    Realization,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Scenario,
    behavior_from_realization,
    deterministic_behavior,
    mix_behaviors,
    projective_measurement,
    uniform_behavior,
)
from selftest import (
    antialigned_povm,
    reference_realization_c3,
    reference_realization_c3_double_prime,
    reference_realization_c3_prime,
)

TRES_RAIZ3 = 3 * math.sqrt(3)


def _documento_chsh():
    terminos = []
    for i, j, signo in ((1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 2, -1)):
        for a, b in itertools.product((1, -1), repeat=2):
            terminos.append({"a": a, "b": b, "i": i, "j": j, "c": signo * a * b})
    return {
        "name": "CHSH",
        "scenario": {"alice_inputs": 2, "bob_inputs": 2, "alice_outcomes": [2, 2], "bob_outcomes": [2, 2]},
        "terms": terminos,
    }


def _observable_aleatorio(rng):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def _estado_aleatorio(rng):
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    return DensityMatrix(HermitianOperator(np.outer(psi, psi.conj())))


def _povm_aleatorio(rng):
    theta = rng.uniform(0, 2 * np.pi)
    direcciones = [(math.sin(theta + k * 2 * np.pi / 3), 0.0, math.cos(theta + k * 2 * np.pi / 3)) for k in range(3)]
    return antialigned_povm(direcciones)


def test_c3_en_referencia():
    b = behavior_from_realization(reference_realization_c3())
    assert evaluate(build_c3(), b) == pytest.approx(TRES_RAIZ3, abs=1e-9)


def test_c3_uniforme_y_determinista():
    f = build_c3()
    assert evaluate(f, uniform_behavior(f.scenario)) == pytest.approx(0.0, abs=1e-12)
    d = deterministic_behavior(f.scenario, (1, 1, 1), (1, 1, 1))
    assert evaluate(f, d) == pytest.approx(4.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_c3_prime_en_referencia(alpha):
    b = behavior_from_realization(reference_realization_c3_prime())
    assert evaluate(build_c3_prime(alpha), b) == pytest.approx(TRES_RAIZ3, abs=1e-9)


def test_c3_prime_lineal_en_la_entrada_penalizada():
    f = build_c3_prime(2.0)
    ref = behavior_from_realization(reference_realization_c3_prime())
    tabla = {par: np.array(bloque) for par, bloque in ref.table.items()}
    # se mueve 0.1 de probabilidad hacia (k=1, b=+1) dentro del bloque (4, 1)
    tabla[(4, 1)][0, 1] -= 0.1
    tabla[(4, 1)][0, 0] += 0.1
    modificado = Behavior(ref.scenario, tabla)
    assert evaluate(f, modificado) == pytest.approx(TRES_RAIZ3 - 0.1 * 2.0, abs=1e-9)


def test_c3_double_prime_en_referencia():
    b = behavior_from_realization(reference_realization_c3_double_prime())
    assert evaluate(build_c3_double_prime(1.0, 1.0), b) == pytest.approx(TRES_RAIZ3, abs=1e-9)


def test_parametros_no_positivos():
    with pytest.raises(ErrorValidacion):
        build_c3_prime(0.0)
    with pytest.raises(ErrorValidacion):
        build_c3_double_prime(1.0, -1.0)


def test_escenarios_distintos():
    with pytest.raises(ErrorValidacion):
        evaluate(build_c3_prime(), behavior_from_realization(reference_realization_c3()))


@pytest.mark.parametrize("funcional, esperado", [
    (build_c3(), 4.0),
    (build_c3_prime(0.5), 4.0),
    (build_c3_prime(1.0), 4.0),
    (build_c3_prime(2.0), 4.0),
    (build_c3_double_prime(1.0, 1.0), 4.0),
    (build_chsh(), 2.0),
])
def test_cotas_clasicas(funcional, esperado):
    assert classical_bound(funcional) == pytest.approx(esperado, abs=1e-12)


def test_testigo_alcanza_la_cota():
    f = build_c3()
    valor, alice, bob = classical_bound_witness(f)
    d = deterministic_behavior(f.scenario, alice, bob)
    assert evaluate(f, d) == pytest.approx(valor)


def test_cota_clasica_domina_estrategias_deterministas():
    rng = np.random.default_rng(2024)
    f = build_c3_double_prime(1.3, 0.7)
    cota = classical_bound(f)
    sc = f.scenario
    for _ in range(1000):
        alice = [rng.choice(sc.etiquetas("A", i)) for i in range(1, sc.alice_inputs + 1)]
        bob = [rng.choice(sc.etiquetas("B", j)) for j in range(1, sc.bob_inputs + 1)]
        d = deterministic_behavior(sc, [int(a) for a in alice], [int(b) for b in bob])
        assert evaluate(f, d) <= cota + 1e-12


def test_evaluacion_lineal():
    rng = np.random.default_rng(9)
    f = build_c3()
    ref = behavior_from_realization(reference_realization_c3())
    for _ in range(20):
        lam = rng.uniform()
        alice = [int(rng.choice((1, -1))) for _ in range(3)]
        bob = [int(rng.choice((1, -1))) for _ in range(3)]
        d = deterministic_behavior(f.scenario, alice, bob)
        mezcla = mix_behaviors(lam, ref, d)
        assert evaluate(f, mezcla) == pytest.approx(lam * evaluate(f, ref) + (1 - lam) * evaluate(f, d), abs=1e-12)


def test_orden_de_funcionales_penalizados():
    ref = behavior_from_realization(reference_realization_c3_double_prime())
    sc = ref.scenario
    c3 = BellFunctional(sc, build_c3().coeffs)
    c3p = BellFunctional(sc, build_c3_prime(1.5).coeffs)
    c3pp = build_c3_double_prime(1.5, 0.5)
    u = uniform_behavior(sc)
    for lam in np.linspace(0, 1, 5):
        b = mix_behaviors(float(lam), ref, u)
        assert evaluate(c3pp, b) <= evaluate(c3p, b) + 1e-12 <= evaluate(c3, b) + 2e-12


def test_c3_double_prime_no_supera_tres_raiz3():
    rng = np.random.default_rng(17)
    f = build_c3_double_prime(1.0, 1.0)
    for _ in range(200):
        alice = tuple(projective_measurement(_observable_aleatorio(rng)) for _ in range(3)) + (_povm_aleatorio(rng),)
        bob = tuple(projective_measurement(_observable_aleatorio(rng)) for _ in range(3)) + (_povm_aleatorio(rng),)
        b = behavior_from_realization(Realization(_estado_aleatorio(rng), alice, bob))
        assert evaluate(f, b) <= TRES_RAIZ3 + 1e-9


def test_documento_chsh():
    f = load_functional(_documento_chsh())
    assert classical_bound(f) == pytest.approx(2.0)
    assert f == BellFunctional(build_chsh().scenario, build_chsh().coeffs, "CHSH")


def test_documento_ida_y_vuelta():
    for f in (build_c3(), build_c3_prime(2.0), build_c3_double_prime(0.5, 3.0), build_chsh()):
        assert load_functional(save_functional(f)) == f
        assert load_functional(json.loads(json.dumps(save_functional(f)))) == f


def test_documento_c3_cota_clasica():
    assert classical_bound(load_functional(save_functional(build_c3()))) == pytest.approx(4.0)


def test_documento_indice_fuera_de_rango():
    documento = save_functional(build_c3())
    documento["terms"][0]["i"] = 5
    with pytest.raises(ErrorValidacion):
        load_functional(documento)


def test_documento_mal_formado():
    documento = save_functional(build_c3())
    documento["terms"][3]["c"] = "uno"
    with pytest.raises(ErrorParseo) as info:
        load_functional(documento)
    assert info.value.ruta == "terms[3].c"


def test_funcional_nulo():
    f = BellFunctional(Scenario((2, 2), (2, 2)), {})
    assert classical_bound(f) == 0.0


def test_capacidad_excedida():
    f = BellFunctional(Scenario((2,) * 12, (2,) * 12), {})
    with pytest.raises(ErrorCapacidad):
        classical_bound(f)


def test_catalogo(tmp_path):
    assert catalog("C3").name == "C3"
    assert catalog("c3pp", 2.0, 0.5) == build_c3_double_prime(2.0, 0.5)
    ruta = guardar_funcional_archivo(build_chsh(), str(tmp_path / "chsh.json"))
    assert catalog(ruta) == build_chsh()
    with pytest.raises(ErrorValidacion):
        catalog("b3")


if __name__ == "__main__":
    print("🧪 Ejecutando pruebas del catálogo de desigualdades...")
    sys.exit(pytest.main([__file__, "-v"]))
