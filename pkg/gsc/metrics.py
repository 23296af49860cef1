"""
metrics.py

Magnitudes de evaluación: NMSE y semantic-NMSE sobre los tensores relevantes para la
tarea, divergencia KL entre histogramas, tasa de error de caracteres para el camino de
texto, estimación de FLOPs por etapas y el MetricReport que resume cada fila de
resultados.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import entropy

from gsc.errors import MetricError
from gsc.piqe import PIQE_CONSTANTS, piqe

KL_EPSILON = 1e-9
KL_BINS = 64


def nmse(x, x_hat):
    """
    Error cuadrático medio normalizado ‖x − x̂‖² / ‖x‖².

    Raises:
        MetricError: Longitudes distintas o norma de referencia nula.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    x_hat = np.asarray(x_hat, dtype=np.float64).ravel()
    if x.shape != x_hat.shape:
        raise MetricError(f"NMSE con longitudes distintas: {x.size} y {x_hat.size}.")
    reference = float(np.dot(x, x))
    if reference == 0.0:
        raise MetricError("NMSE indefinido: la referencia tiene norma cero.")
    diff = x - x_hat
    return float(np.dot(diff, diff)) / reference


def concat_tensors(tensors):
    """Concatena tensores en el orden de los flujos."""
    if not tensors:
        return np.zeros(0)
    return np.concatenate([np.asarray(t, dtype=np.float64).ravel() for t in tensors])


def semantic_nmse(source, destination, extractor):
    """
    d(q(ŝ), q(s)): NMSE entre los tensores relevantes para la tarea extraídos del
    origen y del destino, concatenados en el orden de los flujos.

    Args:
        source: Elemento original.
        destination: Elemento reconstruido.
        extractor (callable): Devuelve la lista de tensores de tarea de un elemento.

    Raises:
        MetricError: Si el extractor produce formas distintas.
    """
    ref = extractor(source)
    out = extractor(destination)
    if len(ref) != len(out) or any(np.shape(a) != np.shape(b) for a, b in zip(ref, out)):
        raise MetricError("El extractor produjo tensores de forma distinta para origen y destino.")
    return nmse(concat_tensors(ref), concat_tensors(out))


def kl_divergence_hist(samples_p, samples_q, bins=KL_BINS, epsilon=KL_EPSILON):
    """
    KL(p‖q) entre histogramas con bordes comunes calculados sobre la unión de ambas
    muestras; las probabilidades se suavizan con ``epsilon``.

    Raises:
        MetricError: Muestras vacías o bins < 2.
    """
    p_samples = np.asarray(samples_p, dtype=np.float64).ravel()
    q_samples = np.asarray(samples_q, dtype=np.float64).ravel()
    if p_samples.size == 0 or q_samples.size == 0:
        raise MetricError("KL requiere muestras no vacías.")
    if int(bins) < 2:
        raise MetricError("KL requiere al menos 2 bins.")
    edges = np.histogram_bin_edges(np.concatenate([p_samples, q_samples]), bins=int(bins))
    p = np.histogram(p_samples, edges)[0] / p_samples.size
    q = np.histogram(q_samples, edges)[0] / q_samples.size
    p = (p + epsilon) / (1 + epsilon * p.size)
    q = (q + epsilon) / (1 + epsilon * q.size)
    return max(float(entropy(p, q)), 0.0)


def image_hist_kl(source, destination, bins=KL_BINS, epsilon=KL_EPSILON):
    """KL entre los histogramas de intensidad de origen y destino."""
    return kl_divergence_hist(np.asarray(source).ravel(), np.asarray(destination).ravel(), bins, epsilon)


def character_error_rate(reference, hypothesis):
    """
    Distancia de Levenshtein entre caracteres dividida por la longitud de la referencia.

    Raises:
        MetricError: Si la referencia está vacía.
    """
    if not reference:
        raise MetricError("CER indefinido para una referencia vacía.")
    ref = np.array([ord(c) for c in reference])
    hyp = np.array([ord(c) for c in hypothesis])
    previous = np.arange(hyp.size + 1)
    for i, ch in enumerate(ref, start=1):
        substitution = previous[:-1] + (hyp != ch)
        current = np.empty_like(previous)
        current[0] = i
        current[1:] = np.minimum(substitution, previous[1:] + 1)
        # las inserciones dependen del valor anterior de la misma fila
        current = np.minimum.accumulate(current - np.arange(current.size)) + np.arange(current.size)
        previous = current
    return float(previous[-1]) / ref.size


# --- FLOPs ------------------------------------------------------------------------

@dataclass(frozen=True)
class FlopStage:
    """
    Etapa de la descripción de un pipeline.

    Atributos:
        kind (str): pca, reconstruct, quantize, ldpc_encode, ldpc_decode, dct o adapter.
        params (dict): Parámetros de la fórmula de la etapa.
    """

    kind: str
    params: dict = field(default_factory=dict)


STAGE_FORMULAS = {
    "pca": lambda p: 2 * p["dim"] * p["rank"] * p["vectors"],
    "reconstruct": lambda p: 2 * p["dim"] * p["rank"] * p["vectors"],
    "quantize": lambda p: 2 * p["scalars"],
    "ldpc_encode": lambda p: 2 * p["k"] * (p["n"] - p["k"]) * p.get("frames", 1),
    "ldpc_decode": lambda p: p["iterations"] * 6 * p["edges"],
    "dct": lambda p: 2 * 8 * 8 * p["transforms"],
    "adapter": lambda p: p["flops"],
}


def stage_flops(stage):
    """FLOPs de una etapa según su fórmula declarada."""
    formula = STAGE_FORMULAS.get(stage.kind)
    if formula is None:
        raise MetricError(f"La etapa '{stage.kind}' no declara fórmula de FLOPs.")
    try:
        return int(formula(stage.params))
    except KeyError as e:
        raise MetricError(f"A la etapa '{stage.kind}' le falta el parámetro {e}.") from None


def flops_estimate(stages):
    """Suma de los FLOPs de cada etapa; un pipeline vacío cuesta 0."""
    return sum(stage_flops(s) for s in stages)


def dct_transforms(height, width):
    """Transformadas 8-puntos de una DCT 2-D separable sobre bloques 8×8."""
    blocks = -(-height // 8) * -(-width // 8)
    return 16 * blocks


# --- informe ----------------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    """
    Una fila de resultados (escenario × método × presupuesto × semilla × elemento).

    Los valores ausentes son None; los presentes deben ser finitos y estar en rango.
    """

    scenario: str
    method: str
    budget_label: str
    bytes_transmitted: int
    flops_estimate: int
    semantic_nmse: float = None
    piqe: float = None
    kl_divergence: float = None
    nrqm: float = None
    cer: float = None
    seed: int = 0
    item: str = ""
    basis_mode: str = ""
    status: str = "ok"
    task_pass: bool = None
    perceptual_pass: bool = None

    def __post_init__(self):
        for name in ("semantic_nmse", "kl_divergence", "cer"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value >= 0):
                raise MetricError(f"{name}={value} fuera de rango.")
        if self.piqe is not None and not 0.0 <= self.piqe <= 100.0:
            raise MetricError(f"piqe={self.piqe} fuera de [0, 100].")
        if self.bytes_transmitted < 0 or self.flops_estimate < 0:
            raise MetricError("Los contadores de bytes y FLOPs no pueden ser negativos.")


def constraint_checks(report, semantic_nmse_max, piqe_max):
    """Comprueba las restricciones de tarea y percepción de una fila."""
    task = report.semantic_nmse is not None and report.semantic_nmse <= semantic_nmse_max
    perceptual = report.piqe is not None and report.piqe <= piqe_max
    return {"task_pass": task, "perceptual_pass": perceptual}


def perceptual_scores(source_frames, destination_frames):
    """
    Puntuaciones perceptuales de un ítem reconstruido.

    Args:
        source_frames (list): Fotogramas originales.
        destination_frames (list): Fotogramas reconstruidos.

    Returns:
        tuple: (PIQE medio de los fotogramas destino de al menos ``min_size`` por lado,
        o None si no hay ninguno; KL entre los histogramas de todos los fotogramas).
    """
    scored = [np.asarray(f, dtype=np.float64) for f in destination_frames
              if np.ndim(f) in (2, 3) and min(np.shape(f)[:2]) >= PIQE_CONSTANTS["min_size"]]
    score = float(np.mean([piqe(f) for f in scored])) if scored else None
    kl = image_hist_kl(np.concatenate([np.ravel(f) for f in source_frames]),
                       np.concatenate([np.ravel(f) for f in destination_frames]))
    return score, kl
