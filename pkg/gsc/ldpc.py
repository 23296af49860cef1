"""
ldpc.py

Este módulo define la clase LdpcCode y las operaciones de codificación de canal:
construcción de códigos QC-LDPC regulares (3,6) a partir de una matriz base con
desplazamientos circulantes, importación/exportación en formato alist, codificación
sistemática y decodificación por min-sum normalizado.

La codificación sistemática usa una matriz densa X (m×k) tal que paridad = X·mensaje
(mod 2). Para códigos QC se obtiene invirtiendo la parte de paridad de la matriz base
sobre el anillo de polinomios circulantes; para códigos arbitrarios (alist), mediante
eliminación de Gauss-Jordan sobre GF(2) con filas empaquetadas en palabras de 64 bits.
"""

import hashlib
import itertools
import os
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import sparse

from gsc.errors import AlistParseError, DimensionError, LdpcConstructionError
from utils.logger import log_debug, log_info, log_warning

MAX_ATTEMPTS = 16
DEFAULT_MAX_ITERS = 25
DEFAULT_NORMALIZATION = 0.8
LLR_CLIP = 1e4
ENCODE_CHUNK = 512
DECODE_CHUNK = 64


# --- álgebra GF(2) ------------------------------------------------------------

def gf2_rref(matrix, column_order=None):
    """
    Forma escalonada reducida por filas sobre GF(2).

    Args:
        matrix (np.ndarray): Matriz binaria m×n.
        column_order (np.ndarray, opcional): Orden en que se buscan pivotes.

    Returns:
        tuple: (R, pivots) con R de tamaño rango×n en el orden ``column_order`` y
        ``pivots`` las posiciones (en ese orden) de cada pivote.
    """
    a = np.asarray(matrix, dtype=np.uint8) & 1
    if column_order is not None:
        a = a[:, column_order]
    m, n = a.shape
    width = -(-n // 64) * 64
    padded = np.zeros((m, width), dtype=np.uint8)
    padded[:, :n] = a
    packed = np.packbits(padded, axis=1, bitorder="little").view("<u8").copy()

    row = 0
    pivots = []
    for c in range(n):
        if row == m:
            break
        w = c >> 6
        bit = np.uint64(1) << np.uint64(c & 63)
        cand = np.flatnonzero(packed[row:, w] & bit)
        if cand.size == 0:
            continue
        p = row + cand[0]
        if p != row:
            packed[[row, p]] = packed[[p, row]]
        hits = np.flatnonzero(packed[:, w] & bit)
        hits = hits[hits != row]
        if hits.size:
            # la fila pivote es nula antes de la columna c
            packed[hits, w:] ^= packed[row, w:]
        pivots.append(c)
        row += 1

    reduced = np.unpackbits(packed[:row].view(np.uint8), axis=1, bitorder="little")[:, :n]
    return reduced, pivots


def gf2_rank(matrix):
    return len(gf2_rref(matrix)[1])


# --- anillo de circulantes GF(2)[x]/(x^z − 1) ---------------------------------

def _monomial(shift, z):
    e = np.zeros(z, dtype=np.uint8)
    e[shift % z] = 1
    return e


def _polymul(a, b, z):
    if a is None or b is None:
        return None
    full = np.convolve(a.astype(np.int64), b.astype(np.int64))
    out = full[:z].copy()
    out[:full.size - z] += full[z:]
    return (out & 1).astype(np.uint8)


def _polyadd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a ^ b


def circulant(first_row):
    """Matriz circulante C[r, c] = first_row[(c − r) mod z]."""
    z = first_row.size
    idx = (np.arange(z)[None, :] - np.arange(z)[:, None]) % z
    return first_row[idx]


def _polyinv(a, z):
    """Inverso en el anillo de circulantes, o None si no es una unidad."""
    if a is None:
        return None
    system = np.concatenate([circulant(a), np.eye(z, dtype=np.uint8)], axis=1)
    reduced, pivots = gf2_rref(system)
    if pivots != list(range(z)):
        return None
    # la inversa de un circulante es circulante: basta su primera fila
    return reduced[0, z:].astype(np.uint8)


def _permanent(blocks, rows, cols, z):
    # en característica 2 el determinante coincide con el permanente
    total = None
    for perm in itertools.permutations(cols):
        term = _monomial(0, z)
        for r, c in zip(rows, perm):
            term = _polymul(term, blocks[r][c], z)
            if term is None:
                break
        total = _polyadd(total, term)
    return total


# --- código ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LdpcCode:
    """
    Código LDPC binario con metadatos de codificación sistemática.

    Atributos:
        n (int): Longitud de la palabra código.
        k (int): Longitud del mensaje.
        parity (scipy.sparse.csr_matrix): Matriz de paridad H ((n−k)×n, o más filas si
            el alist trae comprobaciones redundantes).
        info_cols (np.ndarray): Posiciones de los bits de mensaje en la palabra código.
        parity_cols (np.ndarray): Posiciones de los bits de paridad.
        generator (np.ndarray): Matriz densa X (uint8) con paridad = X·mensaje mod 2.
        code_id (str): Identificador del código.
        base (np.ndarray): Matriz base de desplazamientos (−1 = bloque nulo), solo QC.
        lifting (int): Tamaño z de los circulantes, solo QC.
    """

    n: int
    k: int
    parity: sparse.csr_matrix
    info_cols: np.ndarray
    parity_cols: np.ndarray
    generator: np.ndarray
    code_id: str
    base: np.ndarray = None
    lifting: int = 0

    @property
    def m(self):
        return self.parity.shape[0]

    @property
    def rate(self):
        return self.k / self.n

    @property
    def edges(self):
        return int(self.parity.nnz)

    @cached_property
    def _generator_t(self):
        return self.generator.T.astype(np.float32)

    @cached_property
    def _graph(self):
        coo = self.parity.tocoo()
        order = np.lexsort((coo.col, coo.row))
        chk, var = coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)
        degrees = np.bincount(chk, minlength=self.m)
        width = max(int(degrees.max(initial=0)), 1)
        slot = np.arange(chk.size) - np.repeat(np.cumsum(degrees) - degrees, degrees)
        slots = np.full((self.m, width), -1, dtype=np.int64)
        slots[chk, slot] = np.arange(chk.size)
        incidence = sparse.csr_matrix((np.ones(chk.size), (np.arange(chk.size), var)),
                                      shape=(chk.size, self.n))
        return chk, var, slots, incidence

    def syndrome(self, bits):
        """Síndrome H·cᵀ mod 2 (admite una palabra o un lote por filas)."""
        bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
        return (self.parity @ bits.T).T % 2

    def parity_matrix(self):
        return self.parity.toarray().astype(np.uint8)


def _systematic_from_rref(h_dense, code_id, **extra):
    m, n = h_dense.shape
    order = np.arange(n)[::-1]
    reduced, pivots = gf2_rref(h_dense, order)
    rank = len(pivots)
    pivot_cols = order[pivots]
    info_mask = np.ones(n, dtype=bool)
    info_mask[pivot_cols] = False
    info_cols = np.flatnonzero(info_mask)
    position = np.empty(n, dtype=np.int64)
    position[order] = np.arange(n)
    generator = reduced[:, position[info_cols]].astype(np.uint8)
    if rank < m:
        log_warning(f"La matriz de paridad de {code_id} tiene {m - rank} filas redundantes.")
    return LdpcCode(n, n - rank, sparse.csr_matrix(h_dense), info_cols, pivot_cols,
                    generator, code_id, **extra)


def _expand_base(base, z):
    mb, nb = base.shape
    h = np.zeros((mb * z, nb * z), dtype=np.uint8)
    eye = np.eye(z, dtype=np.uint8)
    for i in range(mb):
        for j in range(nb):
            if base[i, j] >= 0:
                h[i * z:(i + 1) * z, j * z:(j + 1) * z] = np.roll(eye, int(base[i, j]) % z, axis=1)
    return h


def _systematic_qc(base, z, code_id, max_minor=6):
    """Codificador sistemático de un código QC por inversión sobre el anillo de circulantes."""
    mb, nb = base.shape
    if mb > max_minor:
        return None
    blocks = [[_monomial(base[i, j], z) if base[i, j] >= 0 else None for j in range(nb)]
              for i in range(mb)]
    rows = list(range(mb))
    for chosen in itertools.combinations(range(nb - 1, -1, -1), mb):
        chosen = sorted(chosen)
        det_inv = _polyinv(_permanent(blocks, rows, chosen, z), z)
        if det_inv is None:
            continue
        info_blocks = [j for j in range(nb) if j not in chosen]
        # adj(H_p)[i][l] = permanente del menor sin la fila l ni la columna chosen[i]
        adj = [[_permanent(blocks, [r for r in rows if r != l],
                           [c for c in chosen if c != chosen[i]], z) if mb > 1 else _monomial(0, z)
                for l in rows] for i in rows]
        generator = np.zeros((mb * z, len(info_blocks) * z), dtype=np.uint8)
        for i in rows:
            for jj, j in enumerate(info_blocks):
                acc = None
                for l in rows:
                    acc = _polyadd(acc, _polymul(adj[i][l], blocks[l][j], z))
                acc = _polymul(det_inv, acc, z)
                if acc is not None:
                    generator[i * z:(i + 1) * z, jj * z:(jj + 1) * z] = circulant(acc)
        info_cols = np.concatenate([np.arange(j * z, (j + 1) * z) for j in info_blocks])
        parity_cols = np.concatenate([np.arange(j * z, (j + 1) * z) for j in chosen])
        h = sparse.csr_matrix(_expand_base(base, z))
        return LdpcCode(nb * z, len(info_blocks) * z, h, info_cols, parity_cols, generator,
                        code_id, base=base.copy(), lifting=z)
    return None


def _regular_pattern(base_rows, base_cols, col_weight=3):
    weight = min(col_weight, base_rows)
    pattern = np.zeros((base_rows, base_cols), dtype=bool)
    for j in range(base_cols):
        for t in range(weight):
            pattern[(j + t) % base_rows, j] = True
    return pattern


def _draw_shifts(pattern, z, rng, tries=64):
    """Desplazamientos columna a columna evitando ciclos de longitud 4 cuando es posible."""
    mb, nb = pattern.shape
    base = np.full((mb, nb), -1, dtype=np.int64)
    for j in range(nb):
        rows = np.flatnonzero(pattern[:, j])
        best, best_cycles = None, None
        for _ in range(tries):
            shifts = rng.integers(0, z, size=rows.size)
            cycles = 0
            for jp in range(j):
                for (ia, a), (ib, b) in itertools.combinations(enumerate(rows), 2):
                    if base[a, jp] >= 0 and base[b, jp] >= 0:
                        if (shifts[ia] - shifts[ib] - base[a, jp] + base[b, jp]) % z == 0:
                            cycles += 1
            if best is None or cycles < best_cycles:
                best, best_cycles = shifts, cycles
            if cycles == 0:
                break
        base[rows, j] = best
    return base


def make_regular_qc_ldpc(z, base_rows=4, base_cols=8, seed=0, base_matrix=None):
    """
    Construye un código QC-LDPC regular (3,6) (con la base por defecto 4×8) o con una
    matriz base dada por el usuario.

    Args:
        z (int): Tamaño de elevación (lifting), z ≥ 4.
        base_rows (int): Filas de la matriz base.
        base_cols (int): Columnas de la matriz base.
        seed (int): Semilla para los desplazamientos circulantes.
        base_matrix (array-like, opcional): Matriz base (−1 = bloque nulo); en los
            reintentos se conserva su patrón y se perturban los desplazamientos.

    Returns:
        LdpcCode: Código de rango completo y determinista para las mismas entradas.

    Raises:
        LdpcConstructionError: Si tras 16 intentos la paridad no tiene rango completo.
    """
    if z < 4:
        raise LdpcConstructionError(f"El tamaño de elevación debe ser ≥ 4 (z={z}).")
    if base_matrix is not None:
        user_base = np.asarray(base_matrix, dtype=np.int64)
        pattern = user_base >= 0
        code_tag = "qcb" + hashlib.sha256(user_base.tobytes()).hexdigest()[:6]
    else:
        if base_cols <= base_rows:
            raise LdpcConstructionError("La matriz base necesita más columnas que filas.")
        user_base = None
        pattern = _regular_pattern(base_rows, base_cols)
        col_w = int(pattern[:, 0].sum())
        code_tag = f"qc{col_w}{int(round(col_w * base_cols / base_rows))}"
        if (base_rows, base_cols) != (4, 8):
            code_tag += f"b{base_rows}x{base_cols}"
    code_id = f"{code_tag}-z{z}" + (f"-s{seed}" if seed else "")

    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng([int(seed), attempt])
        if user_base is not None and attempt == 0:
            base = user_base.copy()
        else:
            base = _draw_shifts(pattern, z, rng)
        code = _systematic_qc(base, z, code_id)
        if code is None:
            h = _expand_base(base, z)
            if gf2_rank(h) == h.shape[0]:
                code = _systematic_from_rref(h, code_id, base=base, lifting=z)
        if code is not None:
            check = np.random.default_rng(attempt).integers(0, 2, size=code.k)
            if np.any(code.syndrome(ldpc_encode(code, check))):
                raise LdpcConstructionError(f"El codificador de {code_id} no satisface la paridad.")
            log_info(f"Código {code_id} construido: n={code.n}, k={code.k}, intento {attempt + 1}.")
            return code
        log_debug(f"Intento {attempt + 1} de {code_id} con paridad de rango incompleto; se reintenta.")
    raise LdpcConstructionError(
        f"No se obtuvo una paridad de rango completo para {code_id} tras {MAX_ATTEMPTS} intentos.")


# --- alist ------------------------------------------------------------------------

def load_alist(text, code_id=None):
    """
    Lee una matriz de paridad en formato alist: "n m", grados máximos por columna y
    fila, grados de cada columna, grados de cada fila, y a continuación los índices
    (1-based, rellenos con ceros) por columna y por fila.

    Args:
        text (str): Contenido del archivo.
        code_id (str, opcional): Identificador; por defecto se deriva del contenido.

    Returns:
        LdpcCode: Código con la matriz exacta del archivo.

    Raises:
        AlistParseError: Conteos mal formados o índices fuera de rango (con número de línea).
    """
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]

    def ints(entry, expected=None):
        lineno, tokens = entry
        try:
            values = [int(t) for t in tokens]
        except ValueError:
            raise AlistParseError("se esperaban enteros", lineno) from None
        if expected is not None and len(values) != expected:
            raise AlistParseError(f"se esperaban {expected} valores y hay {len(values)}", lineno)
        return values

    if len(lines) < 4:
        raise AlistParseError("faltan las líneas de cabecera", len(lines) + 1)
    n, m = ints(lines[0], 2)
    max_col, max_row = ints(lines[1], 2)
    if n <= 0 or m <= 0 or m >= n:
        raise AlistParseError(f"dimensiones inválidas n={n}, m={m}", lines[0][0])
    col_deg = ints(lines[2], n)
    row_deg = ints(lines[3], m)
    if max(col_deg) > max_col or max(row_deg) > max_row:
        raise AlistParseError("un grado supera el máximo declarado", lines[2][0])
    if len(lines) < 4 + n:
        raise AlistParseError("faltan listas de columnas", len(lines) + 1)

    h = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        entry = lines[4 + j]
        values = ints(entry)
        listed, padding = values[:col_deg[j]], values[col_deg[j]:]
        if len(listed) != col_deg[j] or any(v != 0 for v in padding):
            raise AlistParseError(f"la columna {j + 1} no coincide con su grado {col_deg[j]}", entry[0])
        for v in listed:
            if not 1 <= v <= m:
                raise AlistParseError(f"índice de fila {v} fuera de [1, {m}]", entry[0])
            h[v - 1, j] = 1

    if len(lines) >= 4 + n + m:
        for i in range(m):
            entry = lines[4 + n + i]
            values = ints(entry)
            listed, padding = values[:row_deg[i]], values[row_deg[i]:]
            if len(listed) != row_deg[i] or any(v != 0 for v in padding):
                raise AlistParseError(f"la fila {i + 1} no coincide con su grado {row_deg[i]}", entry[0])
            for v in listed:
                if not 1 <= v <= n:
                    raise AlistParseError(f"índice de columna {v} fuera de [1, {n}]", entry[0])
            if sorted(np.flatnonzero(h[i]) + 1) != sorted(listed):
                raise AlistParseError(f"la fila {i + 1} contradice las listas de columnas", entry[0])
    elif len(lines) > 4 + n:
        raise AlistParseError("listas de filas incompletas", len(lines) + 1)

    if code_id is None:
        code_id = "alist-" + hashlib.sha256(h.tobytes()).hexdigest()[:8]
    return _systematic_from_rref(h, code_id)


def export_alist(code):
    """Exporta la matriz de paridad en formato alist."""
    h = code.parity_matrix()
    m, n = h.shape
    col_lists = [np.flatnonzero(h[:, j]) + 1 for j in range(n)]
    row_lists = [np.flatnonzero(h[i]) + 1 for i in range(m)]
    max_col = max(len(c) for c in col_lists)
    max_row = max(len(r) for r in row_lists)

    def padded(values, width):
        return " ".join(str(int(v)) for v in list(values) + [0] * (width - len(values)))

    out = [f"{n} {m}", f"{max_col} {max_row}",
           " ".join(str(len(c)) for c in col_lists),
           " ".join(str(len(r)) for r in row_lists)]
    out.extend(padded(c, max_col) for c in col_lists)
    out.extend(padded(r, max_row) for r in row_lists)
    return "\n".join(out) + "\n"


# --- codificación y decodificación ----------------------------------------------

def ldpc_encode(code, message):
    """
    Codificación sistemática: los bits de mensaje aparecen tal cual en ``info_cols``.

    Args:
        code (LdpcCode): Código.
        message (array-like): k bits, o un lote B×k.

    Returns:
        np.ndarray: Palabra(s) código de n bits (uint8).

    Raises:
        DimensionError: Si la longitud del mensaje no es k.
    """
    msg = np.asarray(message, dtype=np.uint8)
    single = msg.ndim == 1
    msg = np.atleast_2d(msg)
    if msg.shape[1] != code.k:
        raise DimensionError(f"El mensaje debe tener {code.k} bits y tiene {msg.shape[1]}.")
    out = np.zeros((msg.shape[0], code.n), dtype=np.uint8)
    out[:, code.info_cols] = msg
    for start in range(0, msg.shape[0], ENCODE_CHUNK):
        chunk = msg[start:start + ENCODE_CHUNK].astype(np.float32)
        parity = np.rint(chunk @ code._generator_t).astype(np.int64) & 1
        out[start:start + ENCODE_CHUNK, code.parity_cols] = parity
    return out[0] if single else out


@dataclass(frozen=True)
class DecodeResult:
    """
    Resultado de ldpc_decode.

    Atributos:
        message (np.ndarray): Bits de mensaje estimados (k, o B×k en lote).
        converged (np.ndarray | bool): Síndrome nulo alcanzado.
        iterations (np.ndarray | int): Iteraciones usadas (0 si ya era palabra código).
        codeword (np.ndarray): Decisión dura sobre la palabra completa.
    """

    message: np.ndarray
    converged: object
    iterations: object
    codeword: np.ndarray


def ldpc_decode(code, llrs, max_iters=DEFAULT_MAX_ITERS, normalization=DEFAULT_NORMALIZATION):
    """
    Decodificación min-sum normalizada con salida temprana al anularse el síndrome.

    LLR positivo favorece el bit 0. Cuando no converge se devuelve la mejor estimación
    (decisión dura de la última iteración) marcada como no convergida.

    Args:
        code (LdpcCode): Código.
        llrs (array-like): n LLRs, o un lote B×n.
        max_iters (int): Máximo de iteraciones.
        normalization (float): Factor de escala de los mensajes de comprobación.

    Returns:
        DecodeResult: Mensaje, bandera de convergencia e iteraciones usadas.
    """
    llr = np.asarray(llrs, dtype=np.float64)
    single = llr.ndim == 1
    llr = np.clip(np.atleast_2d(llr), -LLR_CLIP, LLR_CLIP)
    if llr.shape[1] != code.n:
        raise DimensionError(f"Se esperaban {code.n} LLRs y llegaron {llr.shape[1]}.")
    if llr.shape[0] > DECODE_CHUNK:
        parts = [ldpc_decode(code, llr[s:s + DECODE_CHUNK], max_iters, normalization)
                 for s in range(0, llr.shape[0], DECODE_CHUNK)]
        return DecodeResult(np.concatenate([p.message for p in parts]),
                            np.concatenate([p.converged for p in parts]),
                            np.concatenate([p.iterations for p in parts]),
                            np.concatenate([p.codeword for p in parts]))
    _, var, slots, incidence = code._graph
    frames = llr.shape[0]

    hard = (llr < 0).astype(np.uint8)
    converged = ~np.any(code.syndrome(hard), axis=1)
    iterations = np.zeros(frames, dtype=np.int64)
    active = np.flatnonzero(~converged)
    v2c = llr[active][:, var]
    valid = slots >= 0
    safe_slots = np.where(valid, slots, 0)

    for it in range(1, max_iters + 1):
        if active.size == 0:
            break
        view = v2c[:, safe_slots]
        mags = np.where(valid, np.abs(view), np.inf)
        negative = (view < 0) & valid
        parity = np.sum(negative, axis=2) % 2
        first = np.argmin(mags, axis=2)
        min1 = np.take_along_axis(mags, first[..., None], axis=2)
        np.put_along_axis(mags, first[..., None], np.inf, axis=2)
        min2 = np.min(mags, axis=2, keepdims=True)
        is_first = np.arange(slots.shape[1])[None, None, :] == first[..., None]
        magnitude = np.where(is_first, min2, min1)
        magnitude = np.where(np.isinf(magnitude), LLR_CLIP, magnitude)
        sign = 1 - 2 * (parity[..., None] ^ negative)
        c2v_view = normalization * magnitude * sign

        c2v = np.empty_like(v2c)
        c2v[:, slots[valid]] = c2v_view[:, valid]
        posterior = llr[active] + (incidence.T @ c2v.T).T
        v2c = posterior[:, var] - c2v

        hard[active] = (posterior < 0).astype(np.uint8)
        iterations[active] = it
        done = ~np.any(code.syndrome(hard[active]), axis=1)
        converged[active[done]] = True
        keep = ~done
        active, v2c = active[keep], v2c[keep]
        log_debug(f"Iteración {it}: {active.size} tramas sin converger.")

    message = hard[:, code.info_cols]
    if single:
        return DecodeResult(message[0], bool(converged[0]), int(iterations[0]), hard[0])
    return DecodeResult(message, converged, iterations, hard)


# --- registro de códigos -----------------------------------------------------------

DEFAULT_CODE_ID = "qc36-z64"
_QC_ID = re.compile(r"^qc36-z(\d+)(?:-s(\d+))?$")


@lru_cache(maxsize=16)
def resolve_code(code_id=DEFAULT_CODE_ID):
    """
    Obtiene un código por su identificador: ``qc36-z<z>`` o ``qc36-z<z>-s<semilla>``
    construyen el QC-LDPC regular (3,6) con base 4×8; cualquier otro identificador se
    interpreta como la ruta de un archivo alist.

    Raises:
        LdpcConstructionError: Si el identificador no es QC y el archivo no existe.
    """
    match = _QC_ID.match(code_id)
    if match:
        z, seed = int(match.group(1)), int(match.group(2) or 0)
        return make_regular_qc_ldpc(z, 4, 8, seed)
    if not os.path.exists(code_id):
        raise LdpcConstructionError(f"Código desconocido '{code_id}': no es QC ni un archivo alist.")
    with open(code_id, "r", encoding="utf-8") as f:
        return load_alist(f.read(), code_id=code_id)
