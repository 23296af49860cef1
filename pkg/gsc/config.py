"""
config.py

Esquema estricto de la configuración de experimentos (JSON) validado con pydantic.
Las claves desconocidas, las requeridas ausentes y los valores fuera de dominio se
reportan como ConfigError con la ruta JSON del problema (``$.methods[0].pipeline.channel.snr``).
Los valores por defecto se rellenan y se devuelven en ``config.echo.json``.
"""

import hashlib
import json
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from gsc.adapters import parse_adapter_spec
from gsc.channel import ChannelConfig
from gsc.errors import ConfigError
from gsc.ldpc import DEFAULT_CODE_ID, DEFAULT_MAX_ITERS, DEFAULT_NORMALIZATION
from gsc.payload import HEADER_SIZE
from gsc.pipeline import DEFAULT_QUALITY, PipelineConfig, StreamSettings


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChannelSection(_Strict):
    snr_db: Union[float, Literal["noiseless"]] = 10.0
    modulation: Literal["BPSK", "QPSK"] = "BPSK"


class StreamSection(_Strict):
    rank: Optional[int] = Field(None, ge=1)
    bits: int = Field(8, ge=1, le=16)
    enabled: bool = True


class ThresholdSection(_Strict):
    semantic_nmse_max: float = Field(0.05, ge=0)
    piqe_max: float = Field(50.0, ge=0, le=100)


class _LinkSection(_Strict):
    code_id: str = DEFAULT_CODE_ID
    channel: ChannelSection = ChannelSection()
    max_iters: int = Field(DEFAULT_MAX_ITERS, ge=1)
    normalization: float = Field(DEFAULT_NORMALIZATION, gt=0, le=1)


class PipelineSection(_LinkSection):
    """Método generativo: gsc (PCA) o semantic_dct (tensores del extractor por DCT)."""

    method: Literal["gsc", "semantic_dct"] = "gsc"
    extractor: Optional[str] = None
    generator: Optional[str] = None
    embedder: Optional[str] = None
    nrqm: Optional[str] = None
    task: StreamSection = StreamSection(bits=12)
    perceptual: StreamSection = StreamSection(bits=8)
    basis_mode: Literal["shared", "self-contained"] = "shared"
    fit_on_demand: bool = False
    quality: int = Field(DEFAULT_QUALITY, ge=1, le=100)


class BaselineSection(_LinkSection):
    """Códec tradicional sobre los fotogramas fuente."""

    codec: Literal["dct"] = "dct"
    quality: int = Field(DEFAULT_QUALITY, ge=1, le=100)


class MethodSection(_Strict):
    label: str = Field(min_length=1)
    pipeline: Optional[PipelineSection] = None
    baseline: Optional[BaselineSection] = None

    @model_validator(mode="after")
    def _one_kind(self):
        if (self.pipeline is None) == (self.baseline is None):
            raise ValueError("cada método necesita exactamente una de las claves 'pipeline' o 'baseline'")
        return self

    @property
    def kind(self):
        return "traditional" if self.baseline is not None else self.pipeline.method


class ExperimentConfig(_Strict):
    """
    Configuración de un experimento: métodos × presupuestos × semillas × elementos.

    Atributos:
        name (str): Nombre del experimento.
        dataset (str): Directorio con elementos PGM/PPM/GSCT.
        scenario (str): online_meeting, road_monitoring o custom.
        methods (list): Métodos a comparar (al menos uno).
        budgets (list): Presupuestos en bytes (al menos uno).
        seeds (list): Semillas del canal (al menos una).
        thresholds (ThresholdSection): Umbrales de las restricciones.
        calibration (str): Directorio de calibración de las bases; por defecto el dataset.
        output (str): Directorio de resultados.
        workers (int): Celdas en paralelo.
    """

    name: str = Field(min_length=1)
    dataset: str = Field(min_length=1)
    scenario: Literal["online_meeting", "road_monitoring", "custom"] = "custom"
    methods: List[MethodSection] = Field(min_length=1)
    budgets: List[int] = Field(min_length=1)
    seeds: List[int] = Field([1], min_length=1)
    thresholds: ThresholdSection = ThresholdSection()
    calibration: Optional[str] = None
    output: str = "results"
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_values(self):
        for b in self.budgets:
            if b < HEADER_SIZE:
                raise ValueError(f"presupuesto {b} menor que la cabecera del payload ({HEADER_SIZE} bytes)")
        for s in self.seeds:
            if not 0 <= s < 2 ** 64:
                raise ValueError(f"semilla {s} fuera de 64 bits sin signo")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("las etiquetas de los métodos deben ser únicas")
        return self

    def echo(self):
        """Configuración completa con los valores por defecto, lista para JSON."""
        return self.model_dump(mode="json", exclude_none=False)

    def config_hash(self):
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


def json_path(loc):
    """Convierte una ubicación de pydantic en una ruta JSON."""
    path = "$"
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        elif part in ("float", "literal['noiseless']") or part.startswith(("function-", "union[")):
            # ramas internas de uniones y validadores
            continue
        else:
            path += f".{part}"
    return path


def parse_config(text):
    """
    Valida un documento JSON de configuración.

    Args:
        text (str): Contenido JSON.

    Returns:
        ExperimentConfig: Configuración con los valores por defecto rellenos.

    Raises:
        ConfigError: JSON mal formado, clave desconocida o ausente, o valor inválido.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON mal formado en la línea {e.lineno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("la configuración debe ser un objeto JSON")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        kind = first["type"]
        if kind == "extra_forbidden":
            message = "clave desconocida"
        elif kind == "missing":
            message = "clave requerida ausente"
        else:
            message = first["msg"]
        raise ConfigError(message, json_path(first["loc"])) from None


def load_config(path):
    """Lee y valida un archivo de configuración; un archivo ilegible es un ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"no se pudo leer {path}: {e.strerror}") from None
    return parse_config(text)


def _adapter(text):
    return None if text is None else parse_adapter_spec(text)


def pipeline_config(config, method, budget, seed):
    """
    Traduce una celda (método, presupuesto, semilla) a un PipelineConfig.

    Args:
        config (ExperimentConfig): Experimento.
        method (MethodSection): Método de la celda.
        budget (int | None): Presupuesto en bytes.
        seed (int): Semilla del canal.

    Returns:
        PipelineConfig: Configuración de la celda.
    """
    section = method.pipeline or method.baseline
    channel = ChannelConfig(section.channel.snr_db, section.channel.modulation, seed)
    common = dict(scenario=config.scenario, code_id=section.code_id, channel=channel,
                  max_iters=section.max_iters, normalization=section.normalization, byte_budget=budget,
                  quality=section.quality, semantic_nmse_max=config.thresholds.semantic_nmse_max,
                  piqe_max=config.thresholds.piqe_max)
    if method.baseline is not None:
        return PipelineConfig(method="traditional", **common)
    p = method.pipeline
    return PipelineConfig(
        method=p.method,
        extractor=_adapter(p.extractor), generator=_adapter(p.generator),
        embedder=_adapter(p.embedder), nrqm=_adapter(p.nrqm),
        task=StreamSettings(p.task.rank, p.task.bits, p.task.enabled),
        perceptual=StreamSettings(p.perceptual.rank, p.perceptual.bits, p.perceptual.enabled),
        basis_mode=p.basis_mode, fit_on_demand=p.fit_on_demand, **common)
