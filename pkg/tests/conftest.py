"""
conftest.py

Fixtures compartidas: generadores con semilla, imágenes sintéticas deterministas y
códigos LDPC pequeños.
"""

import numpy as np
import pytest

from gsc.items import SourceItem
from gsc.ldpc import make_regular_qc_ldpc, resolve_code


def make_scene(size=64, seed=0):
    """Escena 'natural' sintética: fondo suave, un disco con borde nítido y textura leve."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    image = 90 + 0.8 * x + 0.5 * y + 25 * np.sin(x / 7.0) * np.cos(y / 9.0)
    disc = (x - size * 0.55) ** 2 + (y - size * 0.45) ** 2 < (size * 0.2) ** 2
    image[disc] = 210
    image += rng.normal(0, 1.0, image.shape)
    return np.clip(np.round(image), 0, 255)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scene():
    return make_scene()


@pytest.fixture
def scene_item():
    return SourceItem("escena", [make_scene()], {"scene": "autopista", "objects": ["coche"], "weather": "soleado"})


@pytest.fixture
def textured():
    """Textura de bajo contraste sobre un fondo suave, y su versión con ruido fuerte."""
    rng = np.random.default_rng(7)
    y, x = np.mgrid[0:64, 0:64].astype(np.float64)
    clean = 120 + 90 * np.sin(x / 20.0) * np.cos(y / 25.0) + rng.normal(0, 1.0, (64, 64))
    noisy = clean + rng.normal(0, 25.0, (64, 64))
    return clean, noisy


@pytest.fixture(scope="session")
def small_code():
    # n=28, k=12: la paridad de rango completo permite comprobaciones exhaustivas
    return make_regular_qc_ldpc(4, 4, 7)


@pytest.fixture(scope="session")
def default_code():
    return resolve_code()
