"""
payload.py

Este módulo define el SemanticPayload, el paquete que viaja por el canal: flujos de
vectores relevantes para la tarea (g_GSC), flujos perceptuales (g*_GSC), segmentos de
texto y, como extensiones, bases PCA autocontenidas y flujos de códec DCT.

Formato (little-endian): magic "GSCP", versión u8, número de flujos u8 y, por flujo,
su tipo u8 seguido del cuerpo correspondiente:

- 0 (tarea) / 1 (perceptual): longitud del basis_id u8 + bytes, rango u16, número de
  vectores u32, bits u8, lo/hi f32 por componente, códigos empaquetados.
- 2 (texto): longitud u32 + bytes UTF-8.
- 3 (base): longitud del basis_id u8 + bytes, dim u16, rango u16, media f32[dim],
  componentes f32[rango×dim].
- 4 (códec): rol u8 (0 tarea, 1 perceptual, 2 fuente), longitud u32 + bytes.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from gsc.errors import BadMagicError, PayloadError, TruncatedPayloadError, VersionMismatchError
from gsc.pca import PcaBasis
from gsc.quantizer import QuantSpec, dequantize, pack_codes, packed_size, unpack_codes

MAGIC = b"GSCP"
VERSION = 1
HEADER_SIZE = 6

TASK, PERCEPTUAL, TEXT, BASIS, CODED = 0, 1, 2, 3, 4
STREAM_NAMES = {TASK: "task", PERCEPTUAL: "perceptual", TEXT: "text", BASIS: "basis", CODED: "coded"}
ROLE_TASK, ROLE_PERCEPTUAL, ROLE_SOURCE = 0, 1, 2


@dataclass(frozen=True, eq=False)
class PayloadStream:
    """
    Un flujo del payload.

    Atributos:
        stream_type (int): TASK, PERCEPTUAL, TEXT, BASIS o CODED.
        basis_id (str): Base PCA usada (flujos vectoriales y de base).
        codes (np.ndarray): Códigos n×k (flujos vectoriales).
        quant (QuantSpec): Cuantizador del flujo (flujos vectoriales).
        data (bytes): Contenido de los flujos de texto y de códec.
        role (int): Rol de un flujo de códec.
        basis (PcaBasis): Base transmitida (flujo de base).
    """

    stream_type: int
    basis_id: str = ""
    codes: np.ndarray = None
    quant: QuantSpec = None
    data: bytes = b""
    role: int = ROLE_SOURCE
    basis: PcaBasis = None

    @property
    def rank(self):
        return int(self.codes.shape[1])

    @property
    def vector_count(self):
        return int(self.codes.shape[0])

    def vectors(self):
        """Coeficientes descuantizados de un flujo vectorial."""
        return dequantize(self.quant, self.codes)


def vector_stream(stream_type, basis_id, codes, quant):
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim != 2:
        raise PayloadError("Los códigos de un flujo vectorial deben formar una matriz n×k.")
    if codes.shape[1] != quant.lo.size:
        raise PayloadError("El rango del flujo no coincide con el cuantizador.")
    return PayloadStream(stream_type, basis_id=basis_id, codes=codes, quant=quant)


def text_stream(text):
    data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    return PayloadStream(TEXT, data=data)


def coded_stream(data, role):
    return PayloadStream(CODED, data=bytes(data), role=role)


def basis_stream(basis):
    return PayloadStream(BASIS, basis_id=basis.basis_id, basis=basis)


@dataclass(frozen=True, eq=False)
class SemanticPayload:
    """
    Paquete semántico transmitido.

    Atributos:
        streams (tuple): Flujos en orden de transmisión.
    """

    streams: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "streams", tuple(self.streams))
        if len(self.streams) > 255:
            raise PayloadError("Un payload admite como máximo 255 flujos.")

    def __eq__(self, other):
        return isinstance(other, SemanticPayload) and serialize_payload(self) == serialize_payload(other)

    def __hash__(self):
        return hash(serialize_payload(self))

    def of_type(self, stream_type):
        return [s for s in self.streams if s.stream_type == stream_type]

    @property
    def task_vectors(self):
        return [s.vectors() for s in self.of_type(TASK)]

    @property
    def perceptual_vectors(self):
        return [s.vectors() for s in self.of_type(PERCEPTUAL)]

    @property
    def text_segments(self):
        return [s.data for s in self.of_type(TEXT)]

    @property
    def basis_ids(self):
        return [s.basis_id for s in self.streams if s.stream_type in (TASK, PERCEPTUAL)]


def _stream_size(s):
    if s.stream_type in (TASK, PERCEPTUAL):
        ident = len(s.basis_id.encode("utf-8"))
        return 1 + 1 + ident + 2 + 4 + 1 + 8 * s.rank + packed_size(s.vector_count * s.rank, int(s.quant.bits))
    if s.stream_type == TEXT:
        return 1 + 4 + len(s.data)
    if s.stream_type == BASIS:
        ident = len(s.basis_id.encode("utf-8"))
        return 1 + 1 + ident + 2 + 2 + 4 * s.basis.dim * (1 + s.basis.rank)
    if s.stream_type == CODED:
        return 1 + 1 + 4 + len(s.data)
    raise PayloadError(f"Tipo de flujo desconocido: {s.stream_type}")


def payload_byte_size(p):
    """Bytes exactos del payload en el cable, antes de la codificación de canal."""
    return HEADER_SIZE + sum(_stream_size(s) for s in p.streams)


def _pack_id(basis_id):
    raw = basis_id.encode("utf-8")
    if len(raw) > 255:
        raise PayloadError("basis_id demasiado largo (máximo 255 bytes).")
    return struct.pack("<B", len(raw)) + raw


def serialize_payload(p):
    """
    Serializa el payload al formato GSCP.

    Args:
        p (SemanticPayload): Payload a serializar.

    Returns:
        bytes: Representación en el cable.
    """
    out = [MAGIC, struct.pack("<BB", VERSION, len(p.streams))]
    for s in p.streams:
        out.append(struct.pack("<B", s.stream_type))
        if s.stream_type in (TASK, PERCEPTUAL):
            bits = int(s.quant.bits)
            out.append(_pack_id(s.basis_id))
            out.append(struct.pack("<HIB", s.rank, s.vector_count, bits))
            out.append(s.quant.lo.astype("<f4").tobytes())
            out.append(s.quant.hi.astype("<f4").tobytes())
            out.append(pack_codes(s.codes, bits))
        elif s.stream_type == TEXT:
            out.append(struct.pack("<I", len(s.data)) + s.data)
        elif s.stream_type == BASIS:
            b = s.basis
            out.append(_pack_id(s.basis_id))
            out.append(struct.pack("<HH", b.dim, b.rank))
            out.append(b.mean.astype("<f4").tobytes())
            out.append(b.components.astype("<f4").tobytes())
        elif s.stream_type == CODED:
            out.append(struct.pack("<BI", s.role, len(s.data)) + s.data)
        else:
            raise PayloadError(f"Tipo de flujo desconocido: {s.stream_type}")
    return b"".join(out)


class _Reader:
    def __init__(self, data):
        self.data = memoryview(bytes(data))
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise TruncatedPayloadError(
                f"Payload truncado: se necesitan {n} bytes en el offset {self.pos} y quedan {len(self.data) - self.pos}.")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return bytes(chunk)

    def unpack(self, fmt):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))

    def f32(self, count):
        return np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float64)

    def ident(self):
        (length,) = self.unpack("<B")
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError:
            raise PayloadError(f"basis_id no es UTF-8 válido en el offset {self.pos - length}.") from None


def deserialize_payload(data):
    """
    Reconstruye un SemanticPayload desde bytes.

    Raises:
        BadMagicError: Si la firma no es "GSCP".
        VersionMismatchError: Si la versión no es la soportada.
        TruncatedPayloadError: Si faltan bytes.
        PayloadError: Tipo de flujo desconocido o bytes sobrantes.
    """
    r = _Reader(data)
    if len(r.data) >= 4 and r.data[:4] != MAGIC:
        raise BadMagicError("Magic del payload inválido (se esperaba GSCP).")
    r.take(4)
    version, count = r.unpack("<BB")
    if version != VERSION:
        raise VersionMismatchError(f"Versión de payload {version} no soportada (se esperaba {VERSION}).")

    streams = []
    for _ in range(count):
        (stream_type,) = r.unpack("<B")
        if stream_type in (TASK, PERCEPTUAL):
            basis_id = r.ident()
            rank, vector_count, bits = r.unpack("<HIB")
            lo, hi = r.f32(rank), r.f32(rank)
            try:
                quant = QuantSpec(bits, lo, hi)
            except ValueError as e:
                raise PayloadError(f"Cuantizador inválido en el payload: {e}") from e
            raw = r.take(packed_size(vector_count * rank, bits))
            codes = unpack_codes(raw, vector_count * rank, bits).reshape(vector_count, rank)
            streams.append(PayloadStream(stream_type, basis_id=basis_id, codes=codes, quant=quant))
        elif stream_type == TEXT:
            (length,) = r.unpack("<I")
            streams.append(PayloadStream(TEXT, data=r.take(length)))
        elif stream_type == BASIS:
            basis_id = r.ident()
            dim, rank = r.unpack("<HH")
            mean = r.f32(dim)
            components = r.f32(rank * dim).reshape(rank, dim)
            if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(components))):
                raise PayloadError(f"Base {basis_id} con valores no finitos.")
            try:
                basis = PcaBasis(dim, rank, mean, components, basis_id)
            except ValueError as e:
                raise PayloadError(f"Base inválida en el payload: {e}") from e
            streams.append(PayloadStream(BASIS, basis_id=basis_id, basis=basis))
        elif stream_type == CODED:
            role, length = r.unpack("<BI")
            streams.append(PayloadStream(CODED, data=r.take(length), role=role))
        else:
            raise PayloadError(f"Tipo de flujo desconocido {stream_type} en el offset {r.pos - 1}.")

    if r.pos != len(r.data):
        raise PayloadError(f"Sobran {len(r.data) - r.pos} bytes tras el último flujo.")
    return SemanticPayload(streams)


def stream_spans(p):
    """Rangos [inicio, fin) en bytes de cada flujo dentro del payload serializado."""
    spans, pos = [], HEADER_SIZE
    for s in p.streams:
        size = _stream_size(s)
        spans.append((pos, pos + size))
        pos += size
    return spans
