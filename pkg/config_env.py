"""
Sistema de configuración basado en variables de entorno.
Maneja la carga de configuración desde archivos .env y variables de sistema
para la certificación de aleatoriedad y los barridos NPA.
"""

import os
import logging
from typing import Optional, Tuple, Union
from dataclasses import dataclass, field

try:
    from dotenv import load_dotenv
    DOTENV_AVAILABLE = True
except ImportError:
    DOTENV_AVAILABLE = False

logger = logging.getLogger(__name__)

NIVELES_LOG_VALIDOS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
SOLVERS_VALIDOS = ["clarabel", "scs"]
FORMATOS_VALIDOS = ["csv", "json"]


def _bool_env(nombre: str, default: str) -> bool:
    return os.getenv(nombre, default).lower() == "true"


@dataclass
class ConfiguracionCertificacion:
    """Configuración centralizada de la certificación usando variables de entorno"""

    # Expresiones de Bell
    ALPHA: float = field(default_factory=lambda: float(os.getenv("CERT_ALPHA", "1.0")))
    BETA: float = field(default_factory=lambda: float(os.getenv("CERT_BETA", "1.0")))
    TOLERANCIA: float = field(default_factory=lambda: float(os.getenv("CERT_TOL", "1e-9")))

    # Barrido NPA
    GRILLA: str = field(default_factory=lambda: os.getenv("CERT_GRID", "0.70:1.00:16"))
    PAR: str = field(default_factory=lambda: os.getenv("CERT_PAIR", "best"))
    NIVEL_NPA: int = field(default_factory=lambda: int(os.getenv("NPA_LEVEL", "2")))

    # Solver
    SOLVER: str = field(default_factory=lambda: os.getenv("CERT_SOLVER", "clarabel"))
    TOL_RESIDUO_SOLVER: float = field(default_factory=lambda: float(os.getenv("SOLVER_RESIDUAL_TOL", "1e-7")))
    TOL_BRECHA_SOLVER: float = field(default_factory=lambda: float(os.getenv("SOLVER_GAP_TOL", "1e-6")))
    MARGEN_VIOLACION: float = field(default_factory=lambda: float(os.getenv("VIOLATION_MARGIN", "1e-7")))

    # Procesamiento
    ENABLE_PARALLEL_PROCESSING: bool = field(default_factory=lambda: _bool_env("ENABLE_PARALLEL_PROCESSING", "false"))
    PARALLEL_WORKERS: int = field(default_factory=lambda: int(os.getenv("PARALLEL_WORKERS", "4")))

    # Archivos
    FORMATO: str = field(default_factory=lambda: os.getenv("CERT_FORMAT", "csv"))
    DATA_BASE_DIR: str = field(default_factory=lambda: os.getenv("DATA_BASE_DIR", "data"))

    # Logging
    LOG_LEVEL: str = field(default_factory=lambda: os.getenv("LOG_LEVEL", "INFO"))
    LOG_FILE: str = field(default_factory=lambda: os.getenv("LOG_FILE", "certificacion.log"))
    LOG_DATE_FORMAT: str = field(default_factory=lambda: os.getenv("LOG_DATE_FORMAT", "%Y-%m-%d %H:%M:%S"))
    DEBUG_MODE: bool = field(default_factory=lambda: _bool_env("DEBUG_MODE", "false"))

    def __post_init__(self):
        """Validaciones post-inicialización"""
        self._validar_configuracion()

    def _validar_configuracion(self):
        """Valida la configuración cargada"""
        errores = []

        if self.ALPHA <= 0:
            errores.append("CERT_ALPHA debe ser mayor a 0")
        if self.BETA <= 0:
            errores.append("CERT_BETA debe ser mayor a 0")
        for nombre, valor in [("CERT_TOL", self.TOLERANCIA),
                              ("SOLVER_RESIDUAL_TOL", self.TOL_RESIDUO_SOLVER),
                              ("SOLVER_GAP_TOL", self.TOL_BRECHA_SOLVER),
                              ("VIOLATION_MARGIN", self.MARGEN_VIOLACION)]:
            if valor <= 0:
                errores.append(f"{nombre} debe ser mayor a 0")

        try:
            _, _, pasos = parsear_grilla(self.GRILLA)
            if pasos < 2:
                errores.append("CERT_GRID necesita al menos 2 pasos")
        except ValueError as e:
            errores.append(str(e))

        try:
            parsear_par(self.PAR)
        except ValueError as e:
            errores.append(str(e))

        if self.NIVEL_NPA < 1:
            errores.append("NPA_LEVEL debe ser mayor o igual a 1")
        if self.SOLVER.lower() not in SOLVERS_VALIDOS:
            errores.append(f"CERT_SOLVER debe ser uno de: {SOLVERS_VALIDOS}")
        if self.FORMATO.lower() not in FORMATOS_VALIDOS:
            errores.append(f"CERT_FORMAT debe ser uno de: {FORMATOS_VALIDOS}")
        if self.PARALLEL_WORKERS < 1:
            errores.append("PARALLEL_WORKERS debe ser mayor a 0")
        if self.LOG_LEVEL.upper() not in NIVELES_LOG_VALIDOS:
            errores.append(f"LOG_LEVEL debe ser uno de: {NIVELES_LOG_VALIDOS}")

        if errores:
            raise ValueError(f"Errores de configuración: {'; '.join(errores)}")

    def obtener_grilla(self) -> Tuple[float, float, int]:
        """Devuelve (inicio, fin, pasos) de la grilla de visibilidad"""
        return parsear_grilla(self.GRILLA)

    def obtener_politica_pares(self) -> Union[str, Tuple[int, int]]:
        """'best' o el par de entradas (i, j) fijo"""
        return parsear_par(self.PAR)

    def obtener_nivel_log(self) -> int:
        """Convierte el string de nivel de log a constante de logging"""
        return getattr(logging, self.LOG_LEVEL.upper(), logging.INFO)

    def es_modo_desarrollo(self) -> bool:
        return self.DEBUG_MODE

    def crear_directorio_datos(self) -> str:
        """Crea el directorio base de salidas si no existe"""
        os.makedirs(self.DATA_BASE_DIR, exist_ok=True)
        return self.DATA_BASE_DIR

    def configurar_logging(self) -> logging.Logger:
        """Configura el sistema de logging según la configuración"""
        raiz = logging.getLogger()

        # Limpiar handlers existentes
        for handler in raiz.handlers[:]:
            raiz.removeHandler(handler)

        raiz.setLevel(self.obtener_nivel_log())

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt=self.LOG_DATE_FORMAT
        )

        directorio_log = os.path.dirname(self.LOG_FILE)
        if directorio_log:
            os.makedirs(directorio_log, exist_ok=True)
        file_handler = logging.FileHandler(self.LOG_FILE, encoding='utf-8')
        file_handler.setFormatter(formatter)
        raiz.addHandler(file_handler)

        # La consola va a stderr: stdout queda libre para las tablas
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        console_handler.setLevel(logging.WARNING if not self.DEBUG_MODE else logging.DEBUG)
        raiz.addHandler(console_handler)

        return logging.getLogger("certificacion")


def parsear_grilla(texto: str) -> Tuple[float, float, int]:
    """Parsea 'inicio:fin:pasos'"""
    partes = texto.split(":")
    if len(partes) != 3:
        raise ValueError(f"Grilla inválida '{texto}': se espera inicio:fin:pasos")
    try:
        inicio, fin, pasos = float(partes[0]), float(partes[1]), int(partes[2])
    except ValueError:
        raise ValueError(f"Grilla inválida '{texto}': valores no numéricos")
    if not (0.0 <= inicio <= 1.0 and 0.0 <= fin <= 1.0):
        raise ValueError(f"Grilla inválida '{texto}': p debe estar en [0, 1]")
    return inicio, fin, pasos


def parsear_par(texto: str) -> Union[str, Tuple[int, int]]:
    """Parsea 'best' o 'i,j'"""
    if texto.strip().lower() == "best":
        return "best"
    partes = texto.split(",")
    if len(partes) != 2:
        raise ValueError(f"Par inválido '{texto}': se espera 'best' o 'i,j'")
    try:
        i, j = int(partes[0]), int(partes[1])
    except ValueError:
        raise ValueError(f"Par inválido '{texto}': índices no enteros")
    if i < 1 or j < 1:
        raise ValueError(f"Par inválido '{texto}': los índices empiezan en 1")
    return i, j


class CargadorConfiguracion:
    """Carga y gestiona la configuración desde diferentes fuentes"""

    @staticmethod
    def cargar_configuracion(archivo_env: Optional[str] = None) -> ConfiguracionCertificacion:
        """
        Carga la configuración desde archivo .env y variables de entorno

        Args:
            archivo_env: Ruta al archivo .env (default: .env o .env.local en el directorio actual)

        Returns:
            ConfiguracionCertificacion validada
        """
        if DOTENV_AVAILABLE:
            archivos_env = [archivo_env] if archivo_env else [".env", ".env.local"]

            for archivo in archivos_env:
                if os.path.exists(archivo):
                    load_dotenv(archivo, override=False)  # No sobrescribir variables existentes
                    logger.info(f"Configuración cargada desde: {archivo}")
                    break
            else:
                if archivo_env:
                    logger.warning(f"No se encontró el archivo de configuración {archivo_env}")
        else:
            logger.warning("python-dotenv no disponible, usando solo variables de entorno del sistema")

        try:
            config = ConfiguracionCertificacion()
        except ValueError as e:
            logger.error(f"Error en configuración: {e}")
            raise

        if config.es_modo_desarrollo():
            logger.debug(CargadorConfiguracion.describir_configuracion(config))
        return config

    @staticmethod
    def describir_configuracion(config: ConfiguracionCertificacion) -> str:
        """Resumen legible de la configuración actual"""
        lineas = [
            "=" * 60,
            "🔧 CONFIGURACIÓN CARGADA",
            "=" * 60,
            f"α / β: {config.ALPHA} / {config.BETA}",
            f"🎯 Tolerancia de certificación: {config.TOLERANCIA}",
            f"📈 Grilla: {config.GRILLA}  Par: {config.PAR}  Nivel NPA: {config.NIVEL_NPA}",
            f"🧮 Solver: {config.SOLVER} (residuo {config.TOL_RESIDUO_SOLVER}, brecha {config.TOL_BRECHA_SOLVER})",
            f"🔀 Paralelo: {config.ENABLE_PARALLEL_PROCESSING} ({config.PARALLEL_WORKERS} workers)",
            f"📁 Directorio Base: {config.DATA_BASE_DIR}",
            f"📊 Log Level: {config.LOG_LEVEL}",
            f"📝 Log File: {config.LOG_FILE}",
            "=" * 60,
        ]
        return "\n".join(lineas)

    @staticmethod
    def crear_archivo_env_ejemplo(ruta: str = ".env.ejemplo") -> str:
        """Crea un archivo .env de ejemplo"""
        contenido = """# Configuración de la certificación de aleatoriedad
# Copia este archivo como .env y ajusta los valores

# Expresiones C3' y C3''
CERT_ALPHA=1.0
CERT_BETA=1.0
CERT_TOL=1e-9

# Barrido NPA (inicio:fin:pasos, par 'best' o 'i,j')
CERT_GRID=0.70:1.00:16
CERT_PAIR=best
NPA_LEVEL=2

# Solver semidefinido (clarabel | scs)
CERT_SOLVER=clarabel
SOLVER_RESIDUAL_TOL=1e-7
SOLVER_GAP_TOL=1e-6
VIOLATION_MARGIN=1e-7

# Procesamiento
ENABLE_PARALLEL_PROCESSING=false
PARALLEL_WORKERS=4

# Salidas
CERT_FORMAT=csv
DATA_BASE_DIR=data

# Logging
LOG_LEVEL=INFO
LOG_FILE=certificacion.log
DEBUG_MODE=false
"""
        with open(ruta, 'w', encoding='utf-8') as f:
            f.write(contenido)

        logger.info(f"Archivo de ejemplo creado: {ruta}")
        return ruta


def cargar_config() -> ConfiguracionCertificacion:
    """Función de conveniencia para cargar la configuración"""
    return CargadorConfiguracion.cargar_configuracion()
