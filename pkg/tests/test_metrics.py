import math

import numpy as np
import pytest

from gsc.errors import MetricError
from gsc.metrics import (FlopStage, MetricReport, character_error_rate, constraint_checks, dct_transforms,
                         flops_estimate, image_hist_kl, kl_divergence_hist, nmse, perceptual_scores,
                         semantic_nmse)
from gsc.piqe import piqe


def test_nmse_ejemplos():
    assert nmse([1, 0], [0, 1]) == 2.0
    assert nmse([3, 4], [3, 4]) == 0.0
    assert nmse([2, 0], [1, 0]) == 0.25


def test_nmse_invariante_a_escala(rng):
    x = rng.normal(size=100)
    y = x + rng.normal(scale=0.1, size=100)
    assert nmse(5 * x, 5 * y) == pytest.approx(nmse(x, y), rel=1e-12)


def test_nmse_errores():
    with pytest.raises(MetricError):
        nmse([0, 0], [1, 1])
    with pytest.raises(MetricError):
        nmse([1, 2], [1, 2, 3])


def test_semantic_nmse_usa_el_extractor():
    def extractor(item):
        return [np.asarray(item[:2]), np.asarray(item[2:])]

    assert semantic_nmse([1, 0, 0], [0, 1, 0], extractor) == 2.0
    with pytest.raises(MetricError):
        semantic_nmse([1, 0, 0], [1, 0], extractor)


def test_kl_identica_es_cero(rng):
    samples = rng.normal(size=1000)
    assert kl_divergence_hist(samples, samples) == pytest.approx(0.0, abs=1e-12)


def test_kl_no_negativa(rng):
    for _ in range(20):
        p = rng.normal(size=200)
        q = rng.uniform(-3, 3, size=150)
        assert kl_divergence_hist(p, q) >= 0.0


def test_kl_caso_analitico():
    p = np.zeros(100)
    q = np.concatenate([np.zeros(50), np.ones(50)])
    assert kl_divergence_hist(p, q) == pytest.approx(math.log(2), abs=1e-6)


def test_kl_errores():
    with pytest.raises(MetricError):
        kl_divergence_hist([], [1.0])
    with pytest.raises(MetricError):
        kl_divergence_hist([1.0], [1.0], bins=1)


def test_kl_de_imagenes(scene):
    assert image_hist_kl(scene, scene) == pytest.approx(0.0, abs=1e-12)
    assert image_hist_kl(scene, 255 - scene) > 0.0


def test_puntuaciones_perceptuales_de_varios_fotogramas(scene):
    other = np.flipud(scene)
    score, kl = perceptual_scores([scene, scene], [scene, other])
    assert score == pytest.approx((piqe(scene) + piqe(other)) / 2)
    assert kl == pytest.approx(image_hist_kl(np.concatenate([scene.ravel()] * 2),
                                             np.concatenate([scene.ravel(), other.ravel()])))
    # los fotogramas pequeños no se puntúan pero cuentan para la KL
    small = scene[:16, :16]
    score, kl = perceptual_scores([small], [small])
    assert score is None and kl == pytest.approx(0.0, abs=1e-12)
    score, _ = perceptual_scores([scene, small], [scene, small])
    assert score == pytest.approx(piqe(scene))


@pytest.mark.parametrize("reference, hypothesis, expected", [
    ("kitten", "sitting", 0.5),
    ("abc", "abc", 0.0),
    ("abc", "", 1.0),
    ("ab", "xaby", 1.0),
    ("coche", "coche rojo", 1.0),
])
def test_cer(reference, hypothesis, expected):
    assert character_error_rate(reference, hypothesis) == pytest.approx(expected)


def test_cer_referencia_vacia():
    with pytest.raises(MetricError):
        character_error_rate("", "a")


def test_flops_de_pca():
    assert flops_estimate([FlopStage("pca", {"dim": 64, "rank": 16, "vectors": 100})]) == 204800


def test_flops_aditivos():
    a = [FlopStage("quantize", {"scalars": 10}), FlopStage("dct", {"transforms": dct_transforms(16, 9)})]
    b = [FlopStage("ldpc_decode", {"iterations": 3, "edges": 100}), FlopStage("adapter", {"flops": 7})]
    assert flops_estimate([]) == 0
    assert flops_estimate(a + b) == flops_estimate(a) + flops_estimate(b)
    assert dct_transforms(16, 9) == 16 * 4


def test_flops_errores():
    with pytest.raises(MetricError):
        flops_estimate([FlopStage("magia")])
    with pytest.raises(MetricError):
        flops_estimate([FlopStage("pca", {"dim": 4})])


@pytest.mark.parametrize("kwargs", [
    {"semantic_nmse": -0.1},
    {"semantic_nmse": float("inf")},
    {"piqe": 101.0},
    {"cer": float("nan")},
    {"bytes_transmitted": -1},
])
def test_informe_fuera_de_rango(kwargs):
    base = dict(scenario="custom", method="gsc", budget_label="1000", bytes_transmitted=10, flops_estimate=0)
    base.update(kwargs)
    with pytest.raises(MetricError):
        MetricReport(**base)


def test_restricciones():
    report = MetricReport("custom", "gsc", "1000", 900, 5, semantic_nmse=0.01, piqe=60.0)
    assert constraint_checks(report, 0.05, 50.0) == {"task_pass": True, "perceptual_pass": False}
    empty = MetricReport("custom", "gsc", "1000", 900, 5)
    assert constraint_checks(empty, 0.05, 50.0) == {"task_pass": False, "perceptual_pass": False}
