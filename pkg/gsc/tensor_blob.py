"""
tensor_blob.py

Formato binario GSCT para tensores: magic "GSCT", versión u8, dtype u8 (0=u8, 1=f32,
2=f64), ndim u8, cada dimensión como u32 y los datos en orden fila-mayor little-endian.
"""

import struct

import numpy as np

from gsc.errors import TensorBlobError

MAGIC = b"GSCT"
VERSION = 1
DTYPES = {0: np.dtype("<u1"), 1: np.dtype("<f4"), 2: np.dtype("<f8")}
DTYPE_CODES = {np.dtype("uint8"): 0, np.dtype("float32"): 1, np.dtype("float64"): 2}
HEADER = struct.Struct("<4sBBB")


def encode_tensor_blob(array):
    """
    Serializa un tensor u8/f32/f64.

    Args:
        array (np.ndarray): Tensor a serializar.

    Returns:
        bytes: Blob GSCT.
    """
    array = np.asarray(array)
    code = DTYPE_CODES.get(np.dtype(array.dtype.name))
    if code is None:
        raise TensorBlobError(f"dtype no soportado: {array.dtype}")
    dims = struct.pack(f"<{array.ndim}I", *array.shape)
    data = np.ascontiguousarray(array, dtype=DTYPES[code]).tobytes()
    return HEADER.pack(MAGIC, VERSION, code, array.ndim) + dims + data


def decode_tensor_blob(data, offset=0):
    """
    Lee un blob GSCT a partir de ``offset``.

    Returns:
        tuple: (tensor, offset siguiente al blob).

    Raises:
        TensorBlobError: Magic, versión, dtype o longitud incorrectos.
    """
    if len(data) - offset < HEADER.size:
        raise TensorBlobError(f"Blob GSCT truncado en la cabecera (offset {offset}).")
    magic, version, code, ndim = HEADER.unpack_from(data, offset)
    if magic != MAGIC:
        raise TensorBlobError(f"Magic GSCT inválido (offset {offset}).")
    if version != VERSION:
        raise TensorBlobError(f"Versión GSCT {version} no soportada (offset {offset}).")
    if code not in DTYPES:
        raise TensorBlobError(f"dtype GSCT {code} desconocido (offset {offset}).")
    pos = offset + HEADER.size
    if len(data) - pos < 4 * ndim:
        raise TensorBlobError(f"Blob GSCT truncado en las dimensiones (offset {pos}).")
    shape = struct.unpack_from(f"<{ndim}I", data, pos)
    pos += 4 * ndim
    nbytes = int(np.prod(shape, dtype=np.int64)) * DTYPES[code].itemsize
    if len(data) - pos < nbytes:
        raise TensorBlobError(f"Blob GSCT truncado en los datos (offset {pos}).")
    tensor = np.frombuffer(data, dtype=DTYPES[code], count=nbytes // DTYPES[code].itemsize,
                           offset=pos).reshape(shape).copy()
    return tensor, pos + nbytes
