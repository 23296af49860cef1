"""
piqe_referencia.py

PIQE de referencia para las pruebas, escrito bloque a bloque y píxel a píxel y sin
scipy: la convolución gaussiana 7×7 con borde replicado se hace a mano. Solo se usa
para contrastar gsc.piqe.

El entorno de la desviación centro/entorno excluye las dos columnas centrales del
bloque (7 y 8, base 0).
"""

import numpy as np

BLOQUE = 16
SEGMENTO = 6
UMBRAL_ACTIVIDAD = 0.1
UMBRAL_BORDE = 0.1
SIGMA = 7 / 6
RADIO = 3


def _nucleo():
    x = np.arange(-RADIO, RADIO + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / SIGMA) ** 2)
    g /= g.sum()
    return np.outer(g, g)


def _desenfoque(imagen):
    nucleo = _nucleo()
    filas, columnas = imagen.shape
    borde = np.pad(imagen, RADIO, mode="edge")
    salida = np.zeros_like(imagen)
    for i in range(filas):
        for j in range(columnas):
            salida[i, j] = np.sum(nucleo * borde[i:i + 2 * RADIO + 1, j:j + 2 * RADIO + 1])
    return salida


def _segmentos(borde):
    return np.array([borde[i:i + SEGMENTO] for i in range(BLOQUE - SEGMENTO + 1)])


def _bloque_con_artefactos(bloque):
    for borde in (bloque[0, :], bloque[:, BLOQUE - 1], bloque[BLOQUE - 1, :], bloque[:, 0]):
        for segmento in _segmentos(borde):
            if np.std(segmento, ddof=1) < UMBRAL_BORDE:
                return True
    return False


def _bloque_ruidoso(bloque, varianza):
    c1, c2 = BLOQUE // 2, BLOQUE // 2 + 1  # columnas 8 y 9 en base 1
    centro = np.concatenate((bloque[:, c1 - 1], bloque[:, c2 - 1]))
    entorno = np.delete(bloque, [c1 - 1, c2 - 1], axis=1)
    d_centro = np.std(centro, ddof=1)
    d_entorno = np.std(entorno, ddof=1)
    cociente = d_centro / d_entorno if d_entorno != 0 else 0.0
    sigma = np.sqrt(varianza)
    beta = abs(sigma - cociente) / max(sigma, cociente)
    return sigma > 2 * beta


def piqe_referencia(imagen):
    """
    Puntuación PIQE y máscaras (actividad, artefactos, ruido) de una imagen 2-D.

    Returns:
        tuple: (puntuación, actividad, artefactos, ruido).
    """
    imagen = np.asarray(imagen, dtype=np.float64)
    filas, columnas = imagen.shape
    relleno_f = (BLOQUE - filas % BLOQUE) % BLOQUE
    relleno_c = (BLOQUE - columnas % BLOQUE) % BLOQUE
    imagen = np.pad(imagen, ((0, relleno_f), (0, relleno_c)), mode="symmetric")
    imagen = np.round(255 * (imagen / np.max(imagen)))

    mu = _desenfoque(imagen)
    desviacion = np.sqrt(np.abs(_desenfoque(imagen * imagen) - mu * mu))
    normalizada = (imagen - mu) / (desviacion + 1)

    actividad = np.zeros(normalizada.shape, dtype=bool)
    artefactos = np.zeros(normalizada.shape, dtype=bool)
    ruido = np.zeros(normalizada.shape, dtype=bool)
    distorsion = 0.0
    activos = 0
    for i in range(0, normalizada.shape[0], BLOQUE):
        for j in range(0, normalizada.shape[1], BLOQUE):
            bloque = normalizada[i:i + BLOQUE, j:j + BLOQUE]
            varianza = np.var(bloque, ddof=1)
            if varianza > UMBRAL_ACTIVIDAD:
                actividad[i:i + BLOQUE, j:j + BLOQUE] = True
                activos += 1
                wndc = wnc = 0
                if _bloque_con_artefactos(bloque):
                    wndc = 1
                    artefactos[i:i + BLOQUE, j:j + BLOQUE] = True
                if _bloque_ruidoso(bloque, varianza):
                    wnc = 1
                    ruido[i:i + BLOQUE, j:j + BLOQUE] = True
                distorsion += wndc * (1 - varianza) + wnc * varianza

    puntuacion = (distorsion + 1) / (1 + activos) * 100
    return (puntuacion, actividad[:filas, :columnas], artefactos[:filas, :columnas],
            ruido[:filas, :columnas])
