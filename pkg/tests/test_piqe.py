import os

import numpy as np
import pytest

from conftest import make_scene
from gsc.errors import MetricError
from gsc.items import load_dataset
from gsc.piqe import piqe, piqe_masks
from piqe_referencia import piqe_referencia


def test_imagen_uniforme_puntua_100():
    assert piqe(np.full((64, 64), 128.0)) == 100.0
    assert piqe(np.zeros((40, 50))) == 100.0


def test_rango_y_mascaras(scene):
    score, activity, artifacts, noise = piqe_masks(scene)
    assert 0.0 <= score <= 100.0
    assert activity.shape == artifacts.shape == noise.shape == scene.shape
    assert not np.any(artifacts & ~activity)
    assert not np.any(noise & ~activity)


def test_ruido_empeora_la_puntuacion(textured):
    clean, noisy = textured
    assert piqe(noisy) > piqe(clean)


def test_determinista(scene):
    assert piqe(scene) == piqe(scene.copy())


def test_dimensiones_no_multiplos_de_16(rng):
    image = rng.uniform(0, 255, (45, 70))
    score, activity, _, _ = piqe_masks(image)
    assert 0.0 <= score <= 100.0
    assert activity.shape == (45, 70)


def test_rgb_se_convierte_a_gris(scene):
    rgb = np.stack([scene] * 3, axis=2)
    assert piqe(rgb) == pytest.approx(piqe(scene), abs=1.0)


@pytest.mark.parametrize("image", [
    np.zeros((31, 64)),
    np.zeros((64, 64, 2)),
    np.full((64, 64), np.nan),
])
def test_entradas_invalidas(image):
    with pytest.raises(MetricError):
        piqe(image)


def _imagenes_de_referencia():
    rng = np.random.default_rng(11)
    scene = make_scene(64)
    noisy = np.clip(make_scene(64, seed=1) + rng.normal(0, 20.0, (64, 64)), 0, 255)
    # bloques 8×8 planos: bordes sin variación, artefactos de compresión
    blocky = np.repeat(np.repeat(scene.reshape(8, 8, 8, 8).mean(axis=(1, 3)), 8, axis=0), 8, axis=1)
    odd = make_scene(96, seed=3)[:80, :72]
    dataset = load_dataset(os.path.join(os.path.dirname(__file__), "..", "data", "items"))[0].frames[0]
    return {"escena": scene, "ruidosa": noisy, "bloques": blocky, "impar": odd, "dataset": dataset}


@pytest.mark.parametrize("name", ["escena", "ruidosa", "bloques", "impar", "dataset"])
def test_coincide_con_la_referencia_bloque_a_bloque(name):
    image = _imagenes_de_referencia()[name]
    expected = piqe_referencia(image)
    score, activity, artifacts, noise = piqe_masks(image)
    assert score == pytest.approx(float(np.clip(expected[0], 0.0, 100.0)), abs=1e-6)
    assert np.array_equal(activity, expected[1])
    assert np.array_equal(artifacts, expected[2])
    assert np.array_equal(noise, expected[3])


def test_referencia_en_imagen_uniforme():
    score, activity, _, _ = piqe_referencia(np.full((32, 48), 9.0))
    assert score == 100.0 and not activity.any()
