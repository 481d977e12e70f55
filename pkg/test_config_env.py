#!/usr/bin/env python3
"""
Pruebas del sistema de variables de entorno.
Valida la carga desde .env, los valores por defecto y la validación.
"""

import logging
import sys

import pytest

from config_env import (
    CargadorConfiguracion,
    ConfiguracionCertificacion,
    cargar_config,
    parsear_grilla,
    parsear_par,
)

VARIABLES = [
    "CERT_ALPHA", "CERT_BETA", "CERT_TOL", "CERT_GRID", "CERT_PAIR", "NPA_LEVEL",
    "CERT_SOLVER", "SOLVER_RESIDUAL_TOL", "SOLVER_GAP_TOL", "VIOLATION_MARGIN",
    "ENABLE_PARALLEL_PROCESSING", "PARALLEL_WORKERS", "CERT_FORMAT", "DATA_BASE_DIR",
    "LOG_LEVEL", "LOG_FILE", "DEBUG_MODE",
]


@pytest.fixture(autouse=True)
def entorno_limpio(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for variable in VARIABLES:
        # setenv antes de delenv para que monkeypatch restaure lo que cargue dotenv
        monkeypatch.setenv(variable, "")
        monkeypatch.delenv(variable)
    return tmp_path


def test_valores_por_defecto():
    config = cargar_config()
    assert config.ALPHA == 1.0
    assert config.TOLERANCIA == 1e-9
    assert config.obtener_grilla() == (0.70, 1.00, 16)
    assert config.obtener_politica_pares() == "best"
    assert config.NIVEL_NPA == 2
    assert config.SOLVER == "clarabel"
    assert not config.ENABLE_PARALLEL_PROCESSING


def test_variables_de_entorno(monkeypatch):
    monkeypatch.setenv("CERT_ALPHA", "2.5")
    monkeypatch.setenv("CERT_PAIR", "2,3")
    monkeypatch.setenv("ENABLE_PARALLEL_PROCESSING", "true")
    config = cargar_config()
    assert config.ALPHA == 2.5
    assert config.obtener_politica_pares() == (2, 3)
    assert config.ENABLE_PARALLEL_PROCESSING


def test_archivo_env(tmp_path):
    (tmp_path / ".env").write_text("CERT_BETA=0.25\nCERT_GRID=0.5:1.0:6\n", encoding="utf-8")
    config = CargadorConfiguracion.cargar_configuracion()
    assert config.BETA == 0.25
    assert config.obtener_grilla() == (0.5, 1.0, 6)


def test_archivo_personalizado(tmp_path):
    ruta = tmp_path / "produccion.env"
    ruta.write_text("CERT_SOLVER=scs\n", encoding="utf-8")
    assert CargadorConfiguracion.cargar_configuracion(str(ruta)).SOLVER == "scs"


@pytest.mark.parametrize("variable, valor", [
    ("CERT_ALPHA", "0"),
    ("CERT_TOL", "-1e-9"),
    ("CERT_GRID", "0.5:1.5:4"),
    ("CERT_GRID", "0.5:1.0:1"),
    ("CERT_PAIR", "0,1"),
    ("CERT_SOLVER", "mosek"),
    ("CERT_FORMAT", "xlsx"),
    ("NPA_LEVEL", "0"),
    ("LOG_LEVEL", "VERBOSE"),
])
def test_configuracion_invalida(monkeypatch, variable, valor):
    monkeypatch.setenv(variable, valor)
    with pytest.raises(ValueError):
        cargar_config()


@pytest.mark.parametrize("texto", ["0.7:1.0", "a:b:c", "-0.1:1:3"])
def test_grilla_invalida(texto):
    with pytest.raises(ValueError):
        parsear_grilla(texto)


def test_par():
    assert parsear_par(" BEST ") == "best"
    assert parsear_par("1,3") == (1, 3)
    with pytest.raises(ValueError):
        parsear_par("1;3")


def test_describir_y_ejemplo(tmp_path):
    config = ConfiguracionCertificacion()
    texto = CargadorConfiguracion.describir_configuracion(config)
    assert "clarabel" in texto
    ruta = CargadorConfiguracion.crear_archivo_env_ejemplo(str(tmp_path / ".env.ejemplo"))
    contenido = open(ruta, encoding="utf-8").read()
    assert "CERT_GRID=0.70:1.00:16" in contenido


def test_configurar_logging(tmp_path):
    config = ConfiguracionCertificacion(LOG_FILE=str(tmp_path / "logs" / "cert.log"))
    logger = config.configurar_logging()
    logger.warning("mensaje de prueba")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "mensaje de prueba" in (tmp_path / "logs" / "cert.log").read_text(encoding="utf-8")


if __name__ == "__main__":
    print("🧪 Ejecutando pruebas de configuración...")
    sys.exit(pytest.main([__file__, "-v"]))
