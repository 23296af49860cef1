"""
quantizer.py

Cuantización escalar uniforme mid-rise por componente y empaquetado de códigos en bits
(MSB primero dentro de cada byte).
"""

from dataclasses import dataclass

import numpy as np

from gsc.errors import QuantizationError

MIN_BITS = 1
MAX_BITS = 16


@dataclass(frozen=True)
class QuantSpec:
    """
    Especificación de un cuantizador uniforme.

    Atributos:
        bits (int): Bits por componente, en [1, 16].
        lo (np.ndarray): Mínimo por componente.
        hi (np.ndarray): Máximo por componente (estrictamente mayor que lo).
    """

    bits: int
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if not MIN_BITS <= int(self.bits) <= MAX_BITS:
            raise QuantizationError(f"bits={self.bits} fuera de [{MIN_BITS}, {MAX_BITS}].")
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape:
            raise QuantizationError("lo y hi deben tener la misma longitud.")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise QuantizationError("lo y hi deben ser finitos.")
        if np.any(hi <= lo):
            raise QuantizationError("Se requiere hi > lo en todas las componentes.")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def levels(self):
        return 1 << int(self.bits)

    @property
    def step(self):
        return (self.hi - self.lo) / self.levels

    def max_error(self):
        """Cota del error de ida y vuelta para valores dentro de rango."""
        return (self.hi - self.lo) / (1 << (int(self.bits) + 1))


def quant_spec_for(data, bits):
    """
    Calcula lo/hi por componente a partir de los datos a enviar.

    Los extremos se redondean hacia fuera a float32 (así viajan en la cabecera) para que
    transmisor y receptor usen exactamente los mismos valores; un rango de anchura nula
    se ensancha al siguiente float32 representable.

    Args:
        data (np.ndarray): Matriz n×k de coeficientes.
        bits (int): Bits por componente.

    Returns:
        QuantSpec: Especificación lista para cuantizar ``data``.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    lo = data.min(axis=0).astype(np.float32)
    hi = data.max(axis=0).astype(np.float32)
    lo = np.where(lo.astype(np.float64) > data.min(axis=0), np.nextafter(lo, np.float32(-np.inf)), lo)
    hi = np.where(hi.astype(np.float64) < data.max(axis=0), np.nextafter(hi, np.float32(np.inf)), hi)
    hi = np.where(hi <= lo, np.nextafter(lo, np.float32(np.inf)), hi)
    return QuantSpec(bits, lo.astype(np.float64), hi.astype(np.float64))


def quantize(spec, v):
    """
    Cuantiza v (vector k o matriz n×k) con 2^b celdas por componente, saturando fuera
    de rango.

    Returns:
        np.ndarray: Códigos enteros en [0, 2^b − 1].
    """
    v = np.asarray(v, dtype=np.float64)
    codes = np.floor((v - spec.lo) / spec.step)
    return np.clip(codes, 0, spec.levels - 1).astype(np.int64)


def dequantize(spec, codes):
    """Devuelve el punto medio de cada celda."""
    codes = np.asarray(codes, dtype=np.float64)
    return spec.lo + (codes + 0.5) * spec.step


def pack_codes(codes, bits):
    """Empaqueta códigos de ``bits`` bits, MSB primero, con relleno a byte completo."""
    flat = np.asarray(codes, dtype=np.uint32).ravel()
    shifts = np.arange(bits - 1, -1, -1, dtype=np.uint32)
    bit_matrix = ((flat[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bit_matrix.ravel()).tobytes()


def unpack_codes(data, count, bits):
    """Inverso de pack_codes para ``count`` códigos."""
    needed = count * bits
    raw = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:needed]
    weights = (1 << np.arange(bits - 1, -1, -1)).astype(np.int64)
    return raw.reshape(count, bits).astype(np.int64) @ weights


def packed_size(count, bits):
    return (count * bits + 7) // 8
