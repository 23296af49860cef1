"""
protocol.py

Protocolo de tramas entre el pipeline y los adaptadores (extractores, generadores y
embedders). Cada trama:

    magic "GSCF" | u32 LE longitud del resto | u32 LE longitud de la cabecera |
    cabecera JSON (UTF-8) | tensor_count blobs GSCT concatenados

La cabecera de una petición lleva {op, request_id, stochastic_seed?, tensor_count, text?};
las respuestas añaden ok, error, roles, capabilities, stochastic y flops. Cualquier
truncamiento de una trama válida se detecta como error de protocolo.
"""

import json
import struct

from gsc.errors import ProtocolError, TensorBlobError
from gsc.tensor_blob import decode_tensor_blob, encode_tensor_blob

MAGIC = b"GSCF"
PREFIX = struct.Struct("<4sI")
HEADER_LEN = struct.Struct("<I")
MAX_FRAME = 1 << 30
OPS = ("hello", "extract", "generate", "embed", "shutdown")


def encode_frame(header, tensors=()):
    """
    Construye una trama.

    Args:
        header (dict): Cabecera JSON; ``tensor_count`` se fija aquí.
        tensors (list): Tensores numpy a adjuntar.

    Returns:
        bytes: Trama completa.
    """
    header = dict(header, tensor_count=len(tensors))
    raw_header = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    body = HEADER_LEN.pack(len(raw_header)) + raw_header + b"".join(encode_tensor_blob(t) for t in tensors)
    return PREFIX.pack(MAGIC, len(body)) + body


def decode_frame(data):
    """
    Interpreta una trama completa.

    Returns:
        tuple: (cabecera, lista de tensores).

    Raises:
        ProtocolError: Con el offset del primer byte inválido.
    """
    data = bytes(data)
    if len(data) < PREFIX.size:
        raise ProtocolError("trama truncada en el prefijo", len(data))
    magic, length = PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise ProtocolError("magic inválido (se esperaba GSCF)", 0)
    if length != len(data) - PREFIX.size:
        raise ProtocolError(f"longitud declarada {length} y recibida {len(data) - PREFIX.size}", 4)
    if length < HEADER_LEN.size:
        raise ProtocolError("falta la longitud de la cabecera", PREFIX.size)
    (header_len,) = HEADER_LEN.unpack_from(data, PREFIX.size)
    start = PREFIX.size + HEADER_LEN.size
    if header_len > len(data) - start:
        raise ProtocolError("la cabecera excede la trama", PREFIX.size)
    try:
        header = json.loads(data[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"cabecera JSON inválida: {e}", start) from None
    if not isinstance(header, dict):
        raise ProtocolError("la cabecera debe ser un objeto JSON", start)
    count = header.get("tensor_count")
    if not isinstance(count, int) or count < 0:
        raise ProtocolError("tensor_count ausente o inválido", start)

    pos = start + header_len
    tensors = []
    for _ in range(count):
        try:
            tensor, pos_next = decode_tensor_blob(data, pos)
        except TensorBlobError as e:
            raise ProtocolError(f"blob inválido: {e}", pos) from None
        tensors.append(tensor)
        pos = pos_next
    if pos != len(data):
        raise ProtocolError(f"sobran {len(data) - pos} bytes tras los tensores", pos)
    return header, tensors


def _read_exact(stream, n):
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream):
    """
    Lee una trama de un flujo binario.

    Returns:
        tuple | None: (cabecera, tensores), o None si el flujo terminó limpiamente.

    Raises:
        ProtocolError: Prefijo o cuerpo incompletos, o tamaño fuera de límites.
    """
    prefix = _read_exact(stream, PREFIX.size)
    if not prefix:
        return None
    if len(prefix) < PREFIX.size:
        raise ProtocolError("flujo cerrado en mitad del prefijo", len(prefix))
    magic, length = PREFIX.unpack(prefix)
    if magic != MAGIC:
        raise ProtocolError("magic inválido (se esperaba GSCF)", 0)
    if length > MAX_FRAME:
        raise ProtocolError(f"trama de {length} bytes supera el máximo", 4)
    body = _read_exact(stream, length)
    if len(body) < length:
        raise ProtocolError("flujo cerrado en mitad de la trama", PREFIX.size + len(body))
    return decode_frame(prefix + body)


def write_frame(stream, header, tensors=()):
    stream.write(encode_frame(header, tensors))
    stream.flush()


def reply(request, ok=True, error=None, **fields):
    """Cabecera de respuesta que conserva op y request_id de la petición."""
    header = {"op": request.get("op"), "request_id": request.get("request_id"), "ok": ok}
    if error is not None:
        header["error"] = error
    header.update(fields)
    return header
