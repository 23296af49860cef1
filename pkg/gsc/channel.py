"""
channel.py

Simulación del enlace inalámbrico: modulación BPSK/QPSK de energía unitaria, canal
AWGN con la SNR interpretada como Es/N0 por uso del canal, cálculo de LLRs, entramado
de flujos de bits en palabras código LDPC y medición Monte Carlo de BER/BLER.

Convenciones:
    - BPSK: 0 → +1, 1 → −1 (real). Varianza del ruido N0/2 = 1/(2·snr), LLR = 4·snr·y.
    - QPSK: mapeo Gray (b0 → I, b1 → Q), símbolos (±1 ± j)/√2, LLR = 2·√2·snr·y por
      dimensión.
    - LLR positivo favorece el bit 0.
    - El centinela "noiseless" no añade ruido y produce LLRs finitos grandes.
"""

import math
from dataclasses import dataclass

import numpy as np

from gsc.errors import ChannelError
from gsc.ldpc import DEFAULT_MAX_ITERS, DEFAULT_NORMALIZATION, DECODE_CHUNK, ldpc_decode, ldpc_encode
from utils.logger import log_debug, log_info

NOISELESS = "noiseless"
MODULATIONS = {"BPSK": 1, "QPSK": 2}
NOISELESS_LLR = 1e3
BER_CSV_COLUMNS = ["snr_db", "code_id", "modulation", "info_bits", "bit_errors", "ber", "bler"]


@dataclass(frozen=True)
class ChannelConfig:
    """
    Configuración del canal.

    Atributos:
        snr_db (float | str): Es/N0 en dB, o "noiseless".
        modulation (str): "BPSK" o "QPSK".
        seed (int): Semilla maestra de 64 bits.
    """

    snr_db: object = 10.0
    modulation: str = "BPSK"
    seed: int = 1

    def __post_init__(self):
        if self.modulation not in MODULATIONS:
            raise ChannelError(f"Modulación desconocida: {self.modulation}")
        if isinstance(self.snr_db, str):
            if self.snr_db != NOISELESS:
                raise ChannelError(f"SNR inválida: {self.snr_db!r}")
        elif not math.isfinite(float(self.snr_db)):
            raise ChannelError("La SNR debe ser finita o 'noiseless'.")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ChannelError("La semilla debe ser un entero de 64 bits sin signo.")

    @property
    def noiseless(self):
        return self.snr_db == NOISELESS

    @property
    def snr_linear(self):
        return math.inf if self.noiseless else 10 ** (float(self.snr_db) / 10)

    @property
    def bits_per_symbol(self):
        return MODULATIONS[self.modulation]

    def rng(self, *stream):
        """Generador independiente para (semilla maestra, índices de flujo)."""
        return np.random.default_rng([int(self.seed), *[int(s) for s in stream]])


def ebn0_to_esn0(ebn0_db, rate, modulation="BPSK"):
    return ebn0_db + 10 * math.log10(rate * MODULATIONS[modulation])


def esn0_to_ebn0(esn0_db, rate, modulation="BPSK"):
    return esn0_db - 10 * math.log10(rate * MODULATIONS[modulation])


def modulate(bits, modulation="BPSK"):
    """
    Mapea bits a símbolos de energía unitaria.

    Raises:
        ChannelError: Modulación desconocida o número impar de bits en QPSK.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if modulation == "BPSK":
        return 1.0 - 2.0 * bits
    if modulation == "QPSK":
        if bits.shape[-1] % 2:
            raise ChannelError("QPSK requiere un número par de bits.")
        pairs = bits.reshape(*bits.shape[:-1], -1, 2)
        return ((1.0 - 2.0 * pairs[..., 0]) + 1j * (1.0 - 2.0 * pairs[..., 1])) / math.sqrt(2)
    raise ChannelError(f"Modulación desconocida: {modulation}")


def awgn(symbols, config, rng=None):
    """
    Añade ruido gaussiano de media cero con varianza N0/2 por dimensión real, de forma
    que Es/N0 = snr_db para símbolos de energía unitaria.

    Args:
        symbols (np.ndarray): Símbolos reales (BPSK) o complejos (QPSK).
        config (ChannelConfig): Canal.
        rng (np.random.Generator, opcional): Generador; por defecto el de la semilla.

    Returns:
        np.ndarray: Símbolos recibidos.
    """
    symbols = np.asarray(symbols)
    if config.noiseless:
        return symbols.copy()
    rng = config.rng() if rng is None else rng
    sigma = math.sqrt(1.0 / (2.0 * config.snr_linear))
    if np.iscomplexobj(symbols):
        noise = rng.normal(0.0, sigma, symbols.shape) + 1j * rng.normal(0.0, sigma, symbols.shape)
    else:
        noise = rng.normal(0.0, sigma, symbols.shape)
    return symbols + noise


def llr_from_symbols(symbols, snr_db, modulation="BPSK"):
    """
    LLRs por bit a partir de los símbolos recibidos.

    Returns:
        np.ndarray: LLRs reales; para QPSK se intercalan (I, Q) por símbolo.
    """
    y = np.asarray(symbols)
    if modulation == "QPSK":
        y = np.stack([y.real, y.imag], axis=-1).reshape(*y.shape[:-1], -1)
        scale = 2.0 * math.sqrt(2.0)
    elif modulation == "BPSK":
        y = np.real(y)
        scale = 4.0
    else:
        raise ChannelError(f"Modulación desconocida: {modulation}")
    if snr_db == NOISELESS:
        return NOISELESS_LLR * y
    return scale * 10 ** (float(snr_db) / 10) * y


# --- entramado ------------------------------------------------------------------

@dataclass(frozen=True)
class CodedFrame:
    """
    Flujo de bits entramado en palabras código.

    Atributos:
        code_id (str): Código usado.
        payload_bits (int): Bits útiles antes del relleno.
        bits (np.ndarray): Palabras código B×n (uint8).
        padding (int): Bits de relleno a cero añadidos al final del último mensaje.
        shape (tuple): Forma del fotograma que la trama transporta, o None. Viaja fuera de
            banda junto con el relleno, como la longitud en una cabecera de enlace.
    """

    code_id: str
    payload_bits: int
    bits: np.ndarray
    padding: int
    shape: tuple = None

    @property
    def frames(self):
        return int(self.bits.shape[0])


def bytes_to_bits(data):
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits):
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def frame_bits(code, bits, shape=None):
    """Rellena con ceros hasta un múltiplo de k y codifica cada bloque."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    padding = (-bits.size) % code.k
    if bits.size == 0:
        padding = code.k
    blocks = np.concatenate([bits, np.zeros(padding, dtype=np.uint8)]).reshape(-1, code.k)
    return CodedFrame(code.code_id, int(bits.size), ldpc_encode(code, blocks), int(padding),
                      None if shape is None else tuple(int(s) for s in shape))


def unframe_bits(frame, messages):
    """Concatena los mensajes decodificados y descarta el relleno registrado en la trama."""
    return np.asarray(messages, dtype=np.uint8).reshape(-1)[:frame.payload_bits]


def transmit_frame(frame, config, stream=0):
    """
    Modula, añade ruido y calcula LLRs para cada palabra código de la trama. Cada
    palabra usa su propio generador derivado de (semilla, stream, índice de palabra).

    Returns:
        np.ndarray: LLRs B×n.
    """
    llrs = np.empty(frame.bits.shape, dtype=np.float64)
    for i, word in enumerate(frame.bits):
        received = awgn(modulate(word, config.modulation), config, config.rng(stream, i))
        llrs[i] = llr_from_symbols(received, config.snr_db, config.modulation)
    return llrs


@dataclass(frozen=True)
class LinkReport:
    """Resumen de un paso por el enlace: tramas, convergencia e iteraciones."""

    frames: int
    converged_frames: int
    iterations: int
    padding: int


def send_bytes(data, code, config, stream=0, max_iters=DEFAULT_MAX_ITERS,
               normalization=DEFAULT_NORMALIZATION):
    """
    Transmite un bloque de bytes por el enlace codificado completo.

    Returns:
        tuple: (bytes recibidos, LinkReport).
    """
    frame = frame_bits(code, bytes_to_bits(data))
    result = ldpc_decode(code, transmit_frame(frame, config, stream), max_iters, normalization)
    received = bits_to_bytes(unframe_bits(frame, result.message))
    report = LinkReport(frame.frames, int(np.sum(result.converged)), int(np.sum(result.iterations)),
                        frame.padding)
    log_debug(f"Enlace: {report.frames} palabras, {report.converged_frames} convergidas.")
    return received, report


# --- BER --------------------------------------------------------------------------

@dataclass(frozen=True)
class BerResult:
    ber: float
    bler: float
    frames: int
    bit_errors: int
    info_bits: int
    block_errors: int


def measure_ber(code, config, num_bits, max_iters=DEFAULT_MAX_ITERS,
                normalization=DEFAULT_NORMALIZATION):
    """
    Monte Carlo sobre mensajes aleatorios: ceil(num_bits / k) palabras, cada una con
    mensaje y ruido propios derivados de (semilla, índice de palabra).

    Returns:
        BerResult: Conteos exactos de errores de bit y de bloque.
    """
    frames = max(1, -(-int(num_bits) // code.k))
    bit_errors = block_errors = 0
    for start in range(0, frames, DECODE_CHUNK):
        idx = range(start, min(frames, start + DECODE_CHUNK))
        messages = np.stack([config.rng(i, 1).integers(0, 2, code.k, dtype=np.uint8) for i in idx])
        words = ldpc_encode(code, messages)
        llrs = np.stack([
            llr_from_symbols(awgn(modulate(w, config.modulation), config, config.rng(i, 0)),
                             config.snr_db, config.modulation)
            for i, w in zip(idx, words)
        ])
        decoded = ldpc_decode(code, llrs, max_iters, normalization).message
        errors = np.sum(decoded != messages, axis=1)
        bit_errors += int(errors.sum())
        block_errors += int(np.count_nonzero(errors))
    info_bits = frames * code.k
    result = BerResult(bit_errors / info_bits, block_errors / frames, frames, bit_errors,
                       info_bits, block_errors)
    log_info(f"BER {code.code_id} {config.modulation} @ {config.snr_db} dB: "
             f"{result.ber:.3e} ({bit_errors}/{info_bits}), BLER {result.bler:.3e}")
    return result


def ber_sweep(code, snrs, config, num_bits, max_iters=DEFAULT_MAX_ITERS,
              normalization=DEFAULT_NORMALIZATION):
    """
    Barrido de SNR con la misma semilla en cada punto.

    Returns:
        list: Filas (dict) con las columnas de BER_CSV_COLUMNS.
    """
    rows = []
    for snr in snrs:
        point = ChannelConfig(snr, config.modulation, config.seed)
        r = measure_ber(code, point, num_bits, max_iters, normalization)
        rows.append({
            "snr_db": snr, "code_id": code.code_id, "modulation": config.modulation,
            "info_bits": r.info_bits, "bit_errors": r.bit_errors, "ber": r.ber, "bler": r.bler,
        })
    return rows
