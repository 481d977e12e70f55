#!/usr/bin/env python3
"""
Pruebas del núcleo de álgebra lineal: operadores, mediciones, regla de Born
y comportamientos.
"""

import math
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errores import ErrorParseo, ErrorSenalizacion, ErrorValidacion
from qcore import (
    IDENTIDAD_2,
    SIGMA_X,
    SIGMA_Z,
    Behavior,
    DensityMatrix,
    HermitianOperator,
    Measurement,
    Realization,
    Scenario,
    behavior_from_document,
    behavior_from_realization,
    behavior_to_document,
    born_joint,
    correlator,
    deterministic_behavior,
    marginal,
    mix_behaviors,
    pauli_decompose,
    pauli_reconstruct,
    phi_plus,
    projective_measurement,
    tensor,
    uniform_behavior,
    werner_state,
)
from selftest import OBSERVABLES_BOB, reference_realization_c3, reference_realization_c3_prime

RAIZ3 = math.sqrt(3)


def _hermitico_aleatorio(rng, dim=2):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def test_operador_no_hermitico_rechazado():
    with pytest.raises(ErrorValidacion):
        HermitianOperator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ErrorValidacion):
        HermitianOperator(np.eye(3))


def test_autovalores_analiticos_coinciden_con_eigvalsh():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = _hermitico_aleatorio(rng)
        assert_allclose(HermitianOperator(m).eigenvalues(), np.linalg.eigvalsh(m), atol=1e-12)


@pytest.mark.parametrize("op, esperado", [
    (IDENTIDAD_2, (1, 0, 0, 0)),
    ((2 * IDENTIDAD_2 - SIGMA_X - RAIZ3 * SIGMA_Z) / 6, (1 / 3, -RAIZ3 / 6, 0, -1 / 6)),
    ((IDENTIDAD_2 + SIGMA_X) / 3, (1 / 3, 0, 0, 1 / 3)),
])
def test_pauli_decompose(op, esperado):
    assert_allclose(pauli_decompose(HermitianOperator(op)), esperado, atol=1e-12)


def test_pauli_decompose_reconstruye():
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = _hermitico_aleatorio(rng)
        gammas = pauli_decompose(HermitianOperator(m))
        assert all(isinstance(g, float) for g in gammas)
        assert_allclose(pauli_reconstruct(*gammas).entries, m, atol=1e-12)


def test_tensor():
    assert_allclose(tensor(HermitianOperator(IDENTIDAD_2), HermitianOperator(IDENTIDAD_2)).entries, np.eye(4))
    zz = tensor(HermitianOperator(SIGMA_Z), HermitianOperator(SIGMA_Z)).entries
    assert_allclose(zz, np.diag([1, -1, -1, 1]))
    with pytest.raises(ErrorValidacion):
        tensor(HermitianOperator(np.eye(4)), HermitianOperator(SIGMA_Z))


def test_expectativa_xx_en_phi_plus():
    rho = phi_plus().op.entries
    xx = tensor(HermitianOperator(SIGMA_X), HermitianOperator(SIGMA_X)).entries
    assert np.trace(rho @ xx).real == pytest.approx(1.0, abs=1e-12)


def test_born_joint_ejemplos():
    rho = phi_plus()
    proyector = HermitianOperator((IDENTIDAD_2 + SIGMA_Z) / 2)
    identidad = HermitianOperator(IDENTIDAD_2)
    assert born_joint(rho, proyector, proyector) == pytest.approx(0.5, abs=1e-12)
    assert born_joint(rho, identidad, identidad) == pytest.approx(1.0, abs=1e-12)

    a14 = HermitianOperator((2 * IDENTIDAD_2 - SIGMA_X - RAIZ3 * SIGMA_Z) / 6)
    b_mas_1 = HermitianOperator((IDENTIDAD_2 + OBSERVABLES_BOB[0]) / 2)
    assert born_joint(rho, a14, b_mas_1) == pytest.approx(0.0, abs=1e-12)


def test_born_en_phi_plus_es_media_traza_con_transpuesta():
    """⟨φ₊|A⊗B|φ₊⟩ = ½ tr(A Bᵀ) para efectos hermíticos arbitrarios"""
    rng = np.random.default_rng(3)
    rho = phi_plus()
    for _ in range(50):
        # efectos válidos: I/2 + perturbación pequeña
        a = IDENTIDAD_2 / 2 + 0.2 * _hermitico_aleatorio(rng) / 3
        b = IDENTIDAD_2 / 2 + 0.2 * _hermitico_aleatorio(rng) / 3
        esperado = 0.5 * np.trace(a @ b.T).real
        assert born_joint(rho, HermitianOperator(a), HermitianOperator(b)) == pytest.approx(esperado, abs=1e-12)


def test_estado_invalido():
    with pytest.raises(ErrorValidacion):
        DensityMatrix(HermitianOperator(np.eye(4)))
    with pytest.raises(ErrorValidacion):
        DensityMatrix(HermitianOperator(np.diag([1.5, -0.5, 0, 0])))


def test_medicion_invalida():
    with pytest.raises(ErrorValidacion):
        Measurement((HermitianOperator(IDENTIDAD_2 / 2), HermitianOperator(IDENTIDAD_2 / 4)))
    with pytest.raises(ErrorValidacion):
        projective_measurement(2 * SIGMA_Z)


def test_comportamiento_referencia():
    b = behavior_from_realization(reference_realization_c3())
    assert correlator(b, 1, 1) == pytest.approx(RAIZ3 / 2, abs=1e-12)
    assert correlator(b, 1, 3) == pytest.approx(-RAIZ3 / 2, abs=1e-12)
    assert correlator(b, 1, 2) == pytest.approx(0.0, abs=1e-12)
    for bloque in b.table.values():
        assert bloque.sum() == pytest.approx(1.0, abs=1e-10)
        assert bloque.min() >= 0.0


def test_marginal_a4_uniforme():
    b = behavior_from_realization(reference_realization_c3_prime())
    assert_allclose(marginal(b, "A", 4), [1 / 3] * 3, atol=1e-12)


def test_estado_producto_da_tabla_uniforme():
    rho = DensityMatrix(HermitianOperator(np.eye(4) / 4))
    mediciones = tuple(projective_measurement(o) for o in (SIGMA_Z, SIGMA_X))
    b = behavior_from_realization(Realization(rho, mediciones, mediciones))
    for bloque in b.table.values():
        assert_allclose(bloque, np.full((2, 2), 0.25), atol=1e-12)


def test_correlador_uniforme_y_tres_resultados():
    sc = Scenario((2, 2, 2, 3), (2, 2, 2))
    u = uniform_behavior(sc)
    assert correlator(u, 1, 1) == pytest.approx(0.0)
    with pytest.raises(ErrorValidacion):
        correlator(u, 4, 1)


def test_correlador_acotado():
    rng = np.random.default_rng(5)
    sc = Scenario((2, 2), (2, 2))
    for _ in range(100):
        tabla = {par: rng.dirichlet(np.ones(4)).reshape(2, 2) for par in sc.pares()}
        b = Behavior(sc, tabla)
        for i, j in sc.pares():
            assert -1.0 <= correlator(b, i, j) <= 1.0


def test_werner_y_mezcla():
    assert_allclose(werner_state(1.0).op.entries, phi_plus().op.entries, atol=1e-15)
    assert_allclose(werner_state(0.0).op.entries, np.eye(4) / 4, atol=1e-15)
    with pytest.raises(ErrorValidacion):
        werner_state(1.2)

    ref = behavior_from_realization(reference_realization_c3())
    mezcla = mix_behaviors(0.5, ref, uniform_behavior(ref.scenario))
    assert correlator(mezcla, 1, 1) == pytest.approx(RAIZ3 / 4, abs=1e-12)


def test_comportamiento_determinista():
    sc = Scenario((2, 2), (2, 2))
    d = deterministic_behavior(sc, (1, -1), (1, 1))
    assert d.p(1, 1, 1, 1) == 1.0
    assert correlator(d, 2, 1) == -1.0
    with pytest.raises(ErrorValidacion):
        deterministic_behavior(sc, (1, 3), (1, 1))


def test_senalizacion_detectada():
    sc = Scenario((2,), (2, 2))
    tabla = {
        (1, 1): np.array([[0.5, 0.0], [0.0, 0.5]]),
        (1, 2): np.array([[0.9, 0.0], [0.0, 0.1]]),
    }
    with pytest.raises(ErrorSenalizacion):
        marginal(Behavior(sc, tabla), "A", 1)


def test_documento_comportamiento():
    b = behavior_from_realization(reference_realization_c3_prime())
    recuperado = behavior_from_document(behavior_to_document(b))
    assert recuperado.scenario == b.scenario
    for par in b.scenario.pares():
        assert_allclose(recuperado.bloque(*par), b.bloque(*par), atol=1e-15)


def test_documento_comportamiento_con_errores():
    documento = behavior_to_document(uniform_behavior(Scenario((2,), (2,))))
    documento["table"][2]["p"] = "x"
    with pytest.raises(ErrorParseo) as info:
        behavior_from_document(documento)
    assert info.value.ruta == "table[2].p"

    del documento["scenario"]["bob_outcomes"]
    with pytest.raises(ErrorParseo):
        behavior_from_document(documento)


def test_documento_con_celda_duplicada():
    documento = behavior_to_document(uniform_behavior(Scenario((2,), (2,))))
    documento["table"].append(dict(documento["table"][0]))
    with pytest.raises(ErrorParseo) as info:
        behavior_from_document(documento)
    assert info.value.ruta == "table[4]"


if __name__ == "__main__":
    print("🧪 Ejecutando pruebas del núcleo cuántico...")
    sys.exit(pytest.main([__file__, "-v"]))
