import numpy as np
import pytest

from gsc.dct_codec import dct_baseline_decode, dct_baseline_encode, dct_baseline_encode_budget, quant_table
from gsc.errors import BudgetInfeasibleError, CodecError
from gsc.metrics import nmse


def test_alta_calidad_reconstruye_casi_exacto(scene):
    out = dct_baseline_decode(dct_baseline_encode(scene, 100))
    assert out.shape == scene.shape
    assert np.max(np.abs(out - scene)) <= 4


def test_calidad_y_tamano(scene):
    sizes = [len(dct_baseline_encode(scene, q)) for q in (10, 50, 90)]
    errors = [nmse(scene, dct_baseline_decode(dct_baseline_encode(scene, q))) for q in (10, 50, 90)]
    assert sizes[0] < sizes[1] < sizes[2]
    assert errors[0] > errors[2]


def test_dimensiones_no_multiplo_de_ocho_y_rango(rng):
    tensor = rng.normal(size=(13, 21)) * 0.01
    lo, hi = float(tensor.min()), float(tensor.max())
    out = dct_baseline_decode(dct_baseline_encode(tensor, 95, (lo, hi)))
    assert out.shape == (13, 21)
    assert np.max(np.abs(out - tensor)) < 0.1 * (hi - lo)


def test_presupuesto(scene):
    previous = 0
    for budget in (200, 600, 2000):
        stream, quality = dct_baseline_encode_budget(scene, budget)
        assert len(stream) <= budget
        assert quality >= previous
        previous = quality
    with pytest.raises(BudgetInfeasibleError):
        dct_baseline_encode_budget(scene, 10)


def test_flujo_corrupto(scene):
    data = dct_baseline_encode(scene, 50)
    with pytest.raises(CodecError):
        dct_baseline_decode(data[:10])
    with pytest.raises(CodecError):
        dct_baseline_decode(b"XXXX" + data[4:])
    with pytest.raises(CodecError):
        dct_baseline_decode(data[:-1])
    with pytest.raises(CodecError):
        quant_table(0)
