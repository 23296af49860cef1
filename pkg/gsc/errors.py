"""
errors.py

Jerarquía de excepciones del proyecto. Todas derivan de GSCError; las que se deben
a un argumento inválido derivan además de ValueError para que el código cliente
pueda capturarlas de la forma habitual.
"""


class GSCError(Exception):
    """Error base de la librería."""


class GraphValidationError(GSCError, ValueError):
    """El grafo semántico no cumple sus invariantes."""

    def __init__(self, violaciones):
        self.violaciones = list(violaciones)
        super().__init__("Grafo inválido: " + "; ".join(self.violaciones))


class DimensionError(GSCError, ValueError):
    """Dimensiones incompatibles entre vectores, bases o tensores."""


class QuantizationError(GSCError, ValueError):
    """Especificación de cuantización fuera de rango."""


class PayloadError(GSCError, ValueError):
    """Error genérico al (de)serializar un SemanticPayload."""


class TruncatedPayloadError(PayloadError):
    """El flujo de bytes termina antes de lo que declaran sus cabeceras."""


class BadMagicError(PayloadError):
    """La firma inicial del flujo no es la esperada."""


class VersionMismatchError(PayloadError):
    """La versión del formato no está soportada."""


class TensorBlobError(GSCError, ValueError):
    """Blob GSCT mal formado."""


class CodecError(GSCError, ValueError):
    """Flujo del códec DCT corrupto o parámetros inválidos."""


class LdpcConstructionError(GSCError):
    """No se pudo construir un código LDPC de rango completo."""


class AlistParseError(GSCError, ValueError):
    """Archivo alist mal formado; ``line`` indica la línea (1-based)."""

    def __init__(self, mensaje, line=None):
        self.line = line
        if line is not None:
            mensaje = f"línea {line}: {mensaje}"
        super().__init__(mensaje)


class ChannelError(GSCError, ValueError):
    """Configuración de canal o entrada de modulación inválida."""


class MetricError(GSCError, ValueError):
    """Entrada inválida para una métrica (p. ej. norma de referencia nula)."""


class BudgetInfeasibleError(GSCError):
    """El presupuesto de bytes no se puede cumplir con la configuración dada."""


class BasisUnknownError(GSCError, LookupError):
    """No hay base calibrada para un flujo en modo compartido."""


class AdapterError(GSCError):
    """Fallo de un adaptador (extractor, generador o embedder)."""


class ProtocolError(AdapterError, ValueError):
    """Trama del protocolo de adaptadores mal formada; ``offset`` en bytes."""

    def __init__(self, mensaje, offset=None):
        self.offset = offset
        if offset is not None:
            mensaje = f"{mensaje} (offset {offset})"
        super().__init__(mensaje)


class AdapterTimeoutError(AdapterError):
    """El adaptador externo no respondió a tiempo."""


class CapabilityError(AdapterError):
    """Se pidió una operación que el adaptador no declaró en el handshake."""


class ConfigError(GSCError, ValueError):
    """Configuración de experimento inválida; ``path`` es una ruta JSON ($.a.b[0])."""

    def __init__(self, mensaje, path="$"):
        self.path = path
        super().__init__(f"{path}: {mensaje}")


class ItemError(GSCError, ValueError):
    """Elemento de datos (imagen, vídeo o blob) ilegible o con formato no soportado."""
