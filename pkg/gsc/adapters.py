"""
adapters.py

Adaptadores que ocupan los puestos de los modelos fundacionales (extractor q(·),
embedder) y generativos (generador) del sistema. Todos hablan el mismo protocolo de
peticiones/respuestas (gsc.protocol): los integrados se atienden en el mismo proceso a
través de ``dispatch`` y los externos son procesos hijos que intercambian tramas por
stdin/stdout.

Adaptadores integrados (sustitutos sintéticos de escritorio):
    identity      extract/generate: la propia imagen como tensor de tarea.
    sobel-edge    extract: magnitud del gradiente de Sobel [H, W] f32.
    depth-proxy   extract/embed: gris con submuestreo bilineal 4× (mapa de "profundidad").
    upsample      generate: sobremuestreo bilineal 4× con máscara de enfoque.
    captioner     extract: descripción de plantilla fija a partir de los metadatos.
    meeting       extract: región de interés central a resolución completa (tarea) y
                  depth proxy (perceptual); escenario de reunión en línea.
    compose       generate: depth proxy sobremuestreado con la región pegada encima.
    road          extract: descripción (texto) y depth proxy (perceptual); escenario
                  de monitorización de carreteras.
"""

import itertools
import os
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from gsc.errors import AdapterError, AdapterTimeoutError, CapabilityError, GSCError, ProtocolError
from gsc.protocol import OPS, read_frame, reply, write_frame
from utils.logger import log_debug, log_info, log_warning

DOWNSAMPLE = 4
UNSHARP_SIGMA = 1.0
UNSHARP_AMOUNT = 0.5
CAPTION_TEMPLATE = "Escena {scene} con {objects}, clima {weather}."
CAPTION_DEFAULTS = {"scene": "desconocida", "objects": "ningún objeto", "weather": "desconocido"}
DEFAULT_TIMEOUT_MS = 60000


def adapter_timeout_s():
    return int(os.environ.get("GSC_ADAPTER_TIMEOUT_MS", DEFAULT_TIMEOUT_MS)) / 1000.0


# --- operaciones de imagen --------------------------------------------------------

def downsample(image, factor=DOWNSAMPLE):
    """Submuestreo bilineal por ``factor`` (mínimo 1×1)."""
    image = np.asarray(image, dtype=np.float64)
    target = [max(1, int(round(s / factor))) for s in image.shape]
    zoom = [t / s for t, s in zip(target, image.shape)]
    return ndimage.zoom(image, zoom, order=1, mode="nearest", grid_mode=True)


def resize(image, shape):
    """Remuestreo bilineal a una forma exacta."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape == tuple(shape):
        return image.copy()
    zoom = [t / s for t, s in zip(shape, image.shape)]
    out = ndimage.zoom(image, zoom, order=1, mode="nearest", grid_mode=True)
    if out.shape != tuple(shape):
        # redondeo de zoom: se recorta o replica el borde
        out = np.pad(out, [(0, max(0, t - o)) for t, o in zip(shape, out.shape)], mode="edge")
        out = out[:shape[0], :shape[1]]
    return out


def unsharp(image, sigma=UNSHARP_SIGMA, amount=UNSHARP_AMOUNT):
    return image + amount * (image - ndimage.gaussian_filter(image, sigma, mode="nearest"))


def sobel_magnitude(image):
    image = np.asarray(image, dtype=np.float64)
    return np.hypot(ndimage.sobel(image, axis=1, mode="nearest"), ndimage.sobel(image, axis=0, mode="nearest"))


def central_roi(shape):
    """Ventana central de la mitad del tamaño: (fila0, fila1, col0, col1)."""
    h, w = shape
    return h // 4, h // 4 + max(1, h // 2), w // 4, w // 4 + max(1, w // 2)


def caption(metadata):
    values = dict(CAPTION_DEFAULTS)
    for key in CAPTION_DEFAULTS:
        if key in metadata:
            value = metadata[key]
            values[key] = ", ".join(map(str, value)) if isinstance(value, (list, tuple)) else str(value)
    return CAPTION_TEMPLATE.format(**values)


# --- backends integrados ----------------------------------------------------------

@dataclass
class ExtractResult:
    """Salida de un extractor: tensores de tarea, tensores perceptuales y texto opcional."""

    task: list = field(default_factory=list)
    perceptual: list = field(default_factory=list)
    text: str = None
    flops: int = 0


class AdapterBackend:
    """Lógica de un adaptador integrado; las operaciones no declaradas fallan."""

    name = ""
    capabilities = frozenset()
    stochastic = False

    def hello(self):
        return {"name": self.name, "capabilities": sorted(self.capabilities),
                "stochastic": self.stochastic, "flops": {}}

    def extract(self, image, metadata, seed=None):
        raise CapabilityError(f"El adaptador {self.name} no extrae.")

    def generate(self, task, perceptual, text, shape, seed=None):
        raise CapabilityError(f"El adaptador {self.name} no genera.")

    def generate_flops(self, task, perceptual, shape):
        """Coste de la última generación; cada backend declara el suyo."""
        return 0

    def embed(self, image, seed=None):
        raise CapabilityError(f"El adaptador {self.name} no calcula embeddings.")


def _resize_flops(shape):
    return 8 * shape[0] * shape[1]


def _upsample_flops(shape):
    return 8 * shape[0] * shape[1] + 2 * 2 * 9 * shape[0] * shape[1]


class IdentityBackend(AdapterBackend):
    name = "identity"
    capabilities = frozenset({"extract", "generate"})

    def extract(self, image, metadata, seed=None):
        return ExtractResult(task=[np.asarray(image, dtype=np.float32)])

    def generate(self, task, perceptual, text, shape, seed=None):
        source = task or perceptual
        if not source:
            raise AdapterError("identity necesita al menos un tensor para generar.")
        return resize(source[0], shape)

    def generate_flops(self, task, perceptual, shape):
        source = task or perceptual
        return 0 if source and np.shape(source[0]) == tuple(shape) else _resize_flops(shape)


class SobelEdgeBackend(AdapterBackend):
    name = "sobel-edge"
    capabilities = frozenset({"extract"})

    def extract(self, image, metadata, seed=None):
        edges = sobel_magnitude(image).astype(np.float32)
        return ExtractResult(task=[edges], flops=23 * edges.size)


class DepthProxyBackend(AdapterBackend):
    name = "depth-proxy"
    capabilities = frozenset({"extract", "embed"})

    def extract(self, image, metadata, seed=None):
        depth = downsample(image).astype(np.float32)
        return ExtractResult(task=[depth], flops=8 * depth.size)

    def embed(self, image, seed=None):
        return downsample(image).ravel().astype(np.float32)


class UpsampleBackend(AdapterBackend):
    name = "upsample"
    capabilities = frozenset({"generate"})

    def generate(self, task, perceptual, text, shape, seed=None):
        source = perceptual or task
        if not source:
            raise AdapterError("upsample necesita un tensor para generar.")
        return unsharp(resize(source[0], shape))

    def generate_flops(self, task, perceptual, shape):
        return _upsample_flops(shape)


class CaptionerBackend(AdapterBackend):
    name = "captioner"
    capabilities = frozenset({"extract"})

    def extract(self, image, metadata, seed=None):
        return ExtractResult(text=caption(metadata))


class MeetingBackend(AdapterBackend):
    name = "meeting"
    capabilities = frozenset({"extract"})

    def extract(self, image, metadata, seed=None):
        image = np.asarray(image, dtype=np.float64)
        r0, r1, c0, c1 = central_roi(image.shape)
        depth = downsample(image).astype(np.float32)
        return ExtractResult(task=[image[r0:r1, c0:c1].astype(np.float32)], perceptual=[depth],
                             flops=8 * depth.size)


class ComposeBackend(AdapterBackend):
    name = "compose"
    capabilities = frozenset({"generate"})

    def generate(self, task, perceptual, text, shape, seed=None):
        if not perceptual and not task:
            raise AdapterError("compose necesita tensores para generar.")
        canvas = unsharp(resize(perceptual[0], shape)) if perceptual else np.zeros(shape)
        if task:
            r0, r1, c0, c1 = central_roi(shape)
            canvas[r0:r1, c0:c1] = resize(task[0], (r1 - r0, c1 - c0))
        return canvas

    def generate_flops(self, task, perceptual, shape):
        flops = _upsample_flops(shape) if perceptual else 0
        if task:
            r0, r1, c0, c1 = central_roi(shape)
            flops += _resize_flops((r1 - r0, c1 - c0))
        return flops


class RoadBackend(AdapterBackend):
    name = "road"
    capabilities = frozenset({"extract"})

    def extract(self, image, metadata, seed=None):
        depth = downsample(image).astype(np.float32)
        return ExtractResult(perceptual=[depth], text=caption(metadata), flops=8 * depth.size)


BUILTINS = {b.name: b for b in (IdentityBackend, SobelEdgeBackend, DepthProxyBackend, UpsampleBackend,
                                CaptionerBackend, MeetingBackend, ComposeBackend, RoadBackend)}


def dispatch(backend, header, tensors):
    """
    Atiende una petición del protocolo con un backend.

    Returns:
        tuple: (cabecera de respuesta, tensores de respuesta).
    """
    op = header.get("op")
    seed = header.get("stochastic_seed")
    try:
        if op not in OPS:
            return reply(header, ok=False, error=f"operación desconocida: {op}"), []
        if op == "hello":
            return reply(header, **backend.hello()), []
        if op == "shutdown":
            return reply(header), []
        if op not in backend.capabilities:
            raise CapabilityError(f"El adaptador {backend.name} no declara '{op}'.")
        if op == "extract":
            if len(tensors) != 1:
                raise AdapterError("extract espera exactamente un tensor.")
            result = backend.extract(tensors[0], header.get("metadata") or {}, seed)
            out = list(result.task) + list(result.perceptual)
            roles = ["task"] * len(result.task) + ["perceptual"] * len(result.perceptual)
            fields = {"roles": roles, "flops": int(result.flops)}
            if result.text is not None:
                fields["text"] = result.text
            return reply(header, **fields), out
        if op == "generate":
            roles = header.get("roles") or []
            if len(roles) != len(tensors):
                raise AdapterError("roles y tensores no coinciden.")
            task = [t for t, r in zip(tensors, roles) if r == "task"]
            perceptual = [t for t, r in zip(tensors, roles) if r == "perceptual"]
            shape = tuple(header.get("shape") or ())
            if len(shape) != 2:
                raise AdapterError("generate necesita la forma de salida [H, W].")
            image = backend.generate(task, perceptual, header.get("text"), shape, seed)
            flops = backend.generate_flops(task, perceptual, shape)
            return reply(header, flops=int(flops)), [np.asarray(image, dtype=np.float64)]
        if len(tensors) != 1:
            raise AdapterError("embed espera exactamente un tensor.")
        vector = backend.embed(tensors[0], seed)
        return reply(header, flops=int(np.size(vector)) * 8), [np.asarray(vector, dtype=np.float32)]
    except (GSCError, ValueError) as e:
        return reply(header, ok=False, error=str(e)), []


# --- clientes ---------------------------------------------------------------------

@dataclass(frozen=True)
class AdapterSpec:
    """
    Especificación de un adaptador.

    Atributos:
        kind (str): "builtin" o "external".
        name (str): Nombre del adaptador integrado.
        command (tuple): Línea de órdenes del adaptador externo.
    """

    kind: str = "builtin"
    name: str = "identity"
    command: tuple = ()

    def label(self):
        return self.name if self.kind == "builtin" else " ".join(self.command)


def parse_adapter_spec(text):
    """``builtin:<nombre>``, ``external:<orden>`` o un nombre integrado a secas."""
    kind, sep, rest = text.partition(":")
    if not sep:
        return AdapterSpec("builtin", text)
    if kind == "builtin":
        return AdapterSpec("builtin", rest)
    if kind == "external":
        return AdapterSpec("external", rest, tuple(shlex.split(rest)))
    raise AdapterError(f"Tipo de adaptador desconocido: {kind}")


class Adapter:
    """
    Cliente de un adaptador. El handshake (``hello``) se completa antes del primer uso;
    las operaciones no declaradas en él producen CapabilityError.
    """

    def __init__(self, spec):
        self.spec = spec
        self._hello = None
        self._ids = itertools.count(1)
        self.last_flops = 0

    def _request(self, header, tensors):
        raise NotImplementedError

    def handshake(self):
        """
        Realiza el handshake si aún no se hizo.

        Returns:
            frozenset: Capacidades declaradas.
        """
        if self._hello is None:
            header, _ = self._exchange({"op": "hello", "request_id": next(self._ids)}, [])
            self._hello = header
            log_debug(f"Adaptador {self.spec.label()}: capacidades {header.get('capabilities')}.")
        return self.capabilities

    @property
    def capabilities(self):
        return frozenset(self._hello.get("capabilities", ())) if self._hello else frozenset()

    @property
    def stochastic(self):
        return bool(self._hello and self._hello.get("stochastic"))

    def _exchange(self, header, tensors):
        response, out = self._request(header, tensors)
        if response.get("request_id") != header["request_id"]:
            raise ProtocolError(f"respuesta a la petición {response.get('request_id')} "
                                f"en lugar de {header['request_id']}", 0)
        if not response.get("ok", False):
            raise AdapterError(f"{self.spec.label()}: {response.get('error', 'fallo sin mensaje')}")
        return response, out

    def _call(self, op, tensors, seed=None, **fields):
        self.handshake()
        if op not in self.capabilities:
            raise CapabilityError(f"El adaptador {self.spec.label()} no declara '{op}'.")
        header = {"op": op, "request_id": next(self._ids), **fields}
        if self.stochastic:
            header["stochastic_seed"] = int(seed or 0)
        response, out = self._exchange(header, tensors)
        declared = (self._hello.get("flops") or {}).get(op, 0)
        self.last_flops = int(response.get("flops", declared))
        return response, out

    def extract(self, image, metadata=None, seed=None):
        """
        q(·): tensores de tarea, perceptuales y texto de un fotograma.

        Raises:
            ProtocolError: Si los roles no cuadran con los tensores devueltos.
        """
        response, out = self._call("extract", [np.asarray(image, dtype=np.float64)], seed,
                                   metadata=metadata or {})
        roles = response.get("roles") or []
        if len(roles) != len(out) or any(r not in ("task", "perceptual") for r in roles):
            raise ProtocolError("roles de extract inconsistentes con los tensores", 0)
        return ExtractResult(
            task=[t for t, r in zip(out, roles) if r == "task"],
            perceptual=[t for t, r in zip(out, roles) if r == "perceptual"],
            text=response.get("text"),
            flops=self.last_flops,
        )

    def generate(self, task, perceptual, text, shape, seed=None):
        """Genera un fotograma de forma ``shape`` a partir de los tensores recibidos."""
        tensors = [np.asarray(t) for t in list(task) + list(perceptual)]
        roles = ["task"] * len(task) + ["perceptual"] * len(perceptual)
        fields = {"roles": roles, "shape": [int(s) for s in shape]}
        if text is not None:
            fields["text"] = text
        _, out = self._call("generate", tensors, seed, **fields)
        if len(out) != 1 or out[0].shape != tuple(shape):
            raise AdapterError(f"{self.spec.label()} no devolvió una imagen de forma {tuple(shape)}.")
        return out[0].astype(np.float64)

    def embed(self, image, seed=None):
        _, out = self._call("embed", [np.asarray(image, dtype=np.float64)], seed)
        if len(out) != 1:
            raise AdapterError(f"{self.spec.label()} no devolvió un vector.")
        return out[0].astype(np.float64).ravel()

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BuiltinAdapter(Adapter):
    """Adaptador integrado atendido en el mismo proceso."""

    def __init__(self, spec):
        super().__init__(spec)
        if spec.name not in BUILTINS:
            raise AdapterError(f"Adaptador integrado desconocido: {spec.name}")
        self.backend = BUILTINS[spec.name]()

    def _request(self, header, tensors):
        return dispatch(self.backend, header, tensors)


class ExternalAdapter(Adapter):
    """
    Adaptador externo: un proceso hijo de larga duración que habla el protocolo de
    tramas por stdin/stdout. Cada respuesta se espera como mucho
    GSC_ADAPTER_TIMEOUT_MS milisegundos.
    """

    def __init__(self, spec, timeout_s=None):
        super().__init__(spec)
        if not spec.command:
            raise AdapterError("El adaptador externo necesita una orden.")
        self.timeout_s = adapter_timeout_s() if timeout_s is None else timeout_s
        try:
            self.proc = subprocess.Popen(list(spec.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as e:
            raise AdapterError(f"No se pudo lanzar {spec.label()}: {e}") from e
        self._reader = ThreadPoolExecutor(max_workers=1)
        log_info(f"Adaptador externo lanzado: {spec.label()} (pid {self.proc.pid}).")

    def _exit_error(self):
        code = self.proc.poll()
        if code is None:
            self.proc.kill()
            code = self.proc.wait()
        return AdapterError(f"{self.spec.label()} terminó con código {code}.")

    def _request(self, header, tensors):
        try:
            write_frame(self.proc.stdin, header, tensors)
        except (BrokenPipeError, OSError, ValueError):
            raise self._exit_error() from None
        future = self._reader.submit(read_frame, self.proc.stdout)
        try:
            frame = future.result(timeout=self.timeout_s)
        except FutureTimeout:
            self.proc.kill()
            raise AdapterTimeoutError(
                f"{self.spec.label()} no respondió a '{header['op']}' en {self.timeout_s:.1f} s.") from None
        if frame is None:
            raise self._exit_error()
        return frame

    def close(self):
        if self.proc.poll() is None:
            try:
                self._exchange({"op": "shutdown", "request_id": next(self._ids)}, [])
                self.proc.wait(timeout=self.timeout_s)
            except (GSCError, subprocess.TimeoutExpired) as e:
                log_warning(f"Cierre forzado de {self.spec.label()}: {e}")
                self.proc.kill()
                self.proc.wait()
        for pipe in (self.proc.stdin, self.proc.stdout):
            if pipe and not pipe.closed:
                pipe.close()
        self._reader.shutdown(wait=False)


def open_adapter(spec):
    """Crea el cliente adecuado para una especificación."""
    if isinstance(spec, str):
        spec = parse_adapter_spec(spec)
    if spec.kind == "builtin":
        return BuiltinAdapter(spec)
    if spec.kind == "external":
        return ExternalAdapter(spec)
    raise AdapterError(f"Tipo de adaptador desconocido: {spec.kind}")


def list_builtins():
    """Nombres y capacidades de los adaptadores integrados."""
    return [(name, sorted(cls.capabilities)) for name, cls in sorted(BUILTINS.items())]
