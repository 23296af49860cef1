"""
dct_codec.py

Códec "tradicional" de referencia: DCT por bloques 8×8, cuantización escalada por calidad
(tabla de luminancia JPEG con el escalado IJG), recorrido zigzag, run-length de los
coeficientes AC y empaquetado con códigos Exp-Golomb de longitud fija por símbolo.

Formato del flujo: magic "GSCD", versión u8, calidad u8, alto u32, ancho u32, lo f32,
hi f32 (rango de valores mapeado a 0..255), número de bits válidos u32 y los bits
empaquetados (MSB primero).
"""

import struct

import numpy as np
from scipy.fft import dctn, idctn

from gsc.errors import BudgetInfeasibleError, CodecError

MAGIC = b"GSCD"
VERSION = 1
HEADER = struct.Struct("<4sBBIIffI")
BLOCK = 8
DC_STEP_MAX = 8.0

LUMA_TABLE = np.array([
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
], dtype=np.float64).reshape(8, 8)


def _zigzag_order():
    order = sorted(((u, v) for u in range(BLOCK) for v in range(BLOCK)),
                   key=lambda p: (p[0] + p[1], p[0] if (p[0] + p[1]) % 2 else p[1]))
    return np.array([u * BLOCK + v for u, v in order])


ZIGZAG = _zigzag_order()
UNZIGZAG = np.argsort(ZIGZAG)


def quant_table(quality):
    """Tabla de cuantización para una calidad en [1, 100] (escalado IJG)."""
    if not 1 <= int(quality) <= 100:
        raise CodecError(f"Calidad {quality} fuera de [1, 100].")
    quality = int(quality)
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    table = np.clip(np.floor((LUMA_TABLE * scale + 50) / 100), 1, 255)
    # paso DC acotado: error de la media del bloque ≤ 0.5 niveles a cualquier calidad
    table[0, 0] = min(table[0, 0], DC_STEP_MAX)
    return table


def _to_blocks(image):
    h, w = image.shape
    return image.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).swapaxes(1, 2).reshape(-1, BLOCK, BLOCK)


def _from_blocks(blocks, h, w):
    return blocks.reshape(h // BLOCK, w // BLOCK, BLOCK, BLOCK).swapaxes(1, 2).reshape(h, w)


# --- Exp-Golomb -----------------------------------------------------------

def _signed_to_unsigned(v):
    return np.where(v > 0, 2 * v - 1, -2 * v)


def _exp_golomb(values):
    """Códigos ue(v): devuelve (patrón, longitud en bits) por valor."""
    x = values.astype(np.uint64) + np.uint64(1)
    length = np.floor(np.log2(x.astype(np.float64))).astype(np.int64) + 1
    # corrección de redondeo de log2 para potencias de dos grandes
    length += (x >> length.astype(np.uint64)) > 0
    length -= (x >> (length - 1).astype(np.uint64)) == 0
    return x, 2 * length - 1


def _pack_bits(patterns, lengths):
    total = int(lengths.sum())
    if total == 0:
        return b"", 0
    starts = np.cumsum(lengths) - lengths
    rep_values = np.repeat(patterns, lengths)
    rep_lengths = np.repeat(lengths, lengths)
    offset = np.arange(total) - np.repeat(starts, lengths)
    shifts = (rep_lengths - 1 - offset).astype(np.uint64)
    bits = ((rep_values >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits).tobytes(), total


class _BitReader:
    def __init__(self, data, nbits):
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:nbits]
        self.text = (bits + ord("0")).tobytes().decode("ascii")
        self.pos = 0

    def ue(self):
        one = self.text.find("1", self.pos)
        if one < 0:
            raise CodecError("Flujo DCT corrupto: faltan bits.")
        zeros = one - self.pos
        end = one + zeros + 1
        if end > len(self.text):
            raise CodecError("Flujo DCT corrupto: código Exp-Golomb truncado.")
        value = int(self.text[one:end], 2) - 1
        self.pos = end
        return value

    def se(self):
        u = self.ue()
        return (u + 1) // 2 if u % 2 else -(u // 2)


# --- códec ------------------------------------------------------------------

def dct_baseline_encode(image, quality, value_range=(0.0, 255.0)):
    """
    Codifica una imagen (o tensor 2-D) con el códec DCT de referencia.

    Args:
        image (np.ndarray): Matriz 2-D. Se rellena replicando bordes hasta múltiplos de 8.
        quality (int): Calidad en [1, 100].
        value_range (tuple): Rango (lo, hi) que se mapea a 0..255.

    Returns:
        bytes: Flujo codificado.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise CodecError("El códec DCT espera una matriz 2-D no vacía.")
    table = quant_table(quality)
    lo, hi = float(np.float32(value_range[0])), float(np.float32(value_range[1]))
    if hi <= lo:
        hi = float(np.nextafter(np.float32(lo), np.float32(np.inf)))
    h, w = image.shape
    levels = np.clip(np.round((image - lo) * 255.0 / (hi - lo)), 0, 255)
    padded = np.pad(levels, ((0, -h % BLOCK), (0, -w % BLOCK)), mode="edge")

    coeffs = dctn(_to_blocks(padded) - 128.0, axes=(1, 2), norm="ortho")
    q = np.round(coeffs / table).astype(np.int64).reshape(-1, BLOCK * BLOCK)[:, ZIGZAG]

    dc = q[:, 0]
    dc_diff = np.diff(dc, prepend=0)
    ac = q[:, 1:]
    rows, cols = np.nonzero(ac)
    nnz = np.bincount(rows, minlength=q.shape[0])
    prev = np.where(np.r_[True, rows[1:] != rows[:-1]], -1, np.r_[-1, cols[:-1]])
    runs = cols - prev - 1
    levels_ac = ac[rows, cols]

    # orden de símbolos por bloque: dc, nnz, (run, nivel)*
    nblocks = q.shape[0]
    pair_index = np.arange(rows.size) - np.repeat(np.cumsum(nnz) - nnz, nnz)
    keys = np.concatenate([
        np.arange(nblocks) * 256,
        np.arange(nblocks) * 256 + 1,
        rows * 256 + 2 + 2 * pair_index,
        rows * 256 + 3 + 2 * pair_index,
    ])
    values = np.concatenate([
        _signed_to_unsigned(dc_diff), nnz, runs, _signed_to_unsigned(levels_ac),
    ])
    order = np.argsort(keys, kind="stable")
    patterns, lengths = _exp_golomb(values[order])
    packed, nbits = _pack_bits(patterns, lengths)
    header = HEADER.pack(MAGIC, VERSION, int(quality), h, w, lo, hi, nbits)
    return header + packed


def dct_baseline_decode(data):
    """
    Decodifica un flujo de dct_baseline_encode.

    Returns:
        np.ndarray: Imagen reconstruida (float64) en el rango original de valores.

    Raises:
        CodecError: Si el flujo está corrupto.
    """
    if len(data) < HEADER.size:
        raise CodecError("Flujo DCT truncado en la cabecera.")
    magic, version, quality, h, w, lo, hi, nbits = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CodecError("Magic del flujo DCT inválido.")
    if version != VERSION:
        raise CodecError(f"Versión de flujo DCT {version} no soportada.")
    if len(data) - HEADER.size != (nbits + 7) // 8:
        raise CodecError("Longitud del flujo DCT inconsistente con su cabecera.")
    if h == 0 or w == 0 or not hi > lo:
        raise CodecError("Cabecera del flujo DCT inválida.")
    table = quant_table(quality)

    ph, pw = h + (-h % BLOCK), w + (-w % BLOCK)
    nblocks = (ph // BLOCK) * (pw // BLOCK)
    reader = _BitReader(data[HEADER.size:], nbits)
    q = np.zeros((nblocks, BLOCK * BLOCK), dtype=np.int64)
    dc = 0
    for b in range(nblocks):
        dc += reader.se()
        q[b, 0] = dc
        count = reader.ue()
        pos = 0
        for _ in range(count):
            pos += reader.ue() + 1
            if pos >= BLOCK * BLOCK:
                raise CodecError("Flujo DCT corrupto: run-length fuera del bloque.")
            q[b, pos] = reader.se()
    if reader.pos != nbits:
        raise CodecError("Flujo DCT corrupto: sobran bits.")

    coeffs = (q[:, UNZIGZAG].reshape(-1, BLOCK, BLOCK)) * table
    pixels = np.clip(np.round(idctn(coeffs, axes=(1, 2), norm="ortho") + 128.0), 0, 255)
    levels = _from_blocks(pixels, ph, pw)[:h, :w]
    return levels * (hi - lo) / 255.0 + lo


def dct_baseline_encode_budget(image, budget, value_range=(0.0, 255.0)):
    """
    Mayor calidad cuyo flujo cabe en ``budget`` bytes (búsqueda binaria; el tamaño
    decrece con la calidad).

    Returns:
        tuple: (flujo, calidad elegida).

    Raises:
        BudgetInfeasibleError: Si ni con calidad 1 cabe.
    """
    best = None
    lo_q, hi_q = 1, 100
    while lo_q <= hi_q:
        mid = (lo_q + hi_q) // 2
        stream = dct_baseline_encode(image, mid, value_range)
        if len(stream) <= budget:
            best = (stream, mid)
            lo_q = mid + 1
        else:
            hi_q = mid - 1
    if best is None:
        raise BudgetInfeasibleError(f"El códec DCT no cabe en {budget} bytes ni con calidad 1.")
    return best
