"""
piqe.py

Evaluador de calidad perceptual sin referencia (PIQE): normalización MSCN con ventana
gaussiana, clasificación de bloques 16×16 por actividad espacial y puntuación de los
bloques activos con artefactos notables (bordes planos) o ruido gaussiano
(desviación centro/entorno).

La puntuación está en [0, 100]; menor es mejor. Una imagen uniforme puntúa 100.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import gaussian_filter

from gsc.errors import MetricError

# Constantes del método
PIQE_CONSTANTS = {
    "block_size": 16,
    "activity_threshold": 0.1,
    "block_impaired_threshold": 0.1,
    "segment_length": 6,
    "gaussian_sigma": 7 / 6,
    "gaussian_radius": 3,
    "stability_c": 1.0,
    "min_size": 32,
}

RGB_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _mscn(image):
    sigma = PIQE_CONSTANTS["gaussian_sigma"]
    truncate = PIQE_CONSTANTS["gaussian_radius"] / sigma
    mu = gaussian_filter(image, sigma, mode="nearest", truncate=truncate)
    second = gaussian_filter(image * image, sigma, mode="nearest", truncate=truncate)
    deviation = np.sqrt(np.abs(second - mu * mu))
    return (image - mu) / (deviation + 1)


def _edge_impaired(block):
    n = PIQE_CONSTANTS["block_size"]
    edges = np.stack([block[0, :], block[:, n - 1], block[n - 1, :], block[:, 0]])
    segments = sliding_window_view(edges, PIQE_CONSTANTS["segment_length"], axis=1)
    return bool(np.any(np.std(segments, axis=2, ddof=1) < PIQE_CONSTANTS["block_impaired_threshold"]))


def _noisy(block, variance):
    n = PIQE_CONSTANTS["block_size"]
    c1 = n // 2 - 1
    center = block[:, c1:c1 + 2].ravel(order="F")
    surround = np.delete(block, [c1, c1 + 1], axis=1)
    center_std = np.std(center, ddof=1)
    surround_std = np.std(surround, ddof=1)
    ratio = center_std / surround_std if surround_std > 0 else 0.0
    sigma = np.sqrt(variance)
    beta = abs(sigma - ratio) / max(sigma, ratio)
    return sigma > 2 * beta


def piqe_masks(image):
    """
    Calcula la puntuación PIQE y las máscaras por bloque.

    Args:
        image (np.ndarray): Matriz 2-D de intensidades (o RGB H×W×3, que se pasa a gris).

    Returns:
        tuple: (score, activity, artifacts, noise), máscaras booleanas del tamaño de la imagen.

    Raises:
        MetricError: Imagen menor de 32×32, no finita o con forma inválida.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[2] == 3:
        image = image @ RGB_WEIGHTS
    if image.ndim != 2:
        raise MetricError("PIQE espera una imagen 2-D en escala de grises.")
    size = PIQE_CONSTANTS["min_size"]
    if image.shape[0] < size or image.shape[1] < size:
        raise MetricError(f"PIQE requiere al menos {size}×{size} píxeles (recibido {image.shape}).")
    if not np.all(np.isfinite(image)):
        raise MetricError("La imagen contiene valores no finitos.")

    n = PIQE_CONSTANTS["block_size"]
    rows, cols = image.shape
    padded = np.pad(image, ((0, -rows % n), (0, -cols % n)), mode="symmetric")
    peak = np.max(padded)
    if peak > 0:
        padded = np.round(255 * (padded / peak))
    norm = _mscn(padded)

    activity = np.zeros(norm.shape, dtype=bool)
    artifacts = np.zeros(norm.shape, dtype=bool)
    noise = np.zeros(norm.shape, dtype=bool)
    distortion = 0.0
    active = 0
    for i in range(0, norm.shape[0], n):
        for j in range(0, norm.shape[1], n):
            block = norm[i:i + n, j:j + n]
            variance = np.var(block, ddof=1)
            if variance <= PIQE_CONSTANTS["activity_threshold"]:
                continue
            activity[i:i + n, j:j + n] = True
            active += 1
            if _edge_impaired(block):
                artifacts[i:i + n, j:j + n] = True
                distortion += 1 - variance
            if _noisy(block, variance):
                noise[i:i + n, j:j + n] = True
                distortion += variance

    c = PIQE_CONSTANTS["stability_c"]
    score = float(np.clip((distortion + c) / (c + active) * 100, 0.0, 100.0))
    return score, activity[:rows, :cols], artifacts[:rows, :cols], noise[:rows, :cols]


def piqe(image):
    """Puntuación PIQE en [0, 100] (menor = mejor calidad perceptual)."""
    return piqe_masks(image)[0]
