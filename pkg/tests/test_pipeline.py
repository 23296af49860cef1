import os
from dataclasses import replace

import numpy as np
import pytest

from gsc.adapters import AdapterSpec
from gsc.channel import NOISELESS, ChannelConfig, bytes_to_bits, frame_bits
from gsc.errors import BasisUnknownError, BudgetInfeasibleError, PayloadError
from gsc.items import SourceItem, load_dataset
from gsc.ldpc import resolve_code
from gsc.metrics import nmse
from gsc.payload import BASIS, PERCEPTUAL, TASK, TEXT, SemanticPayload, payload_byte_size, serialize_payload
from gsc.pipeline import (BasisRegistry, Pipeline, PipelineConfig, StreamSettings, basis_key, run_end_to_end,
                          safe_run, tensor_rows, transmit)
from conftest import make_scene

SILENT = ChannelConfig(NOISELESS, "BPSK", 1)
ROAD_METADATA = {"scene": "autopista", "objects": ["coche", "camión"], "weather": "soleado"}


def _identity(**kwargs):
    kwargs.setdefault("channel", SILENT)
    return PipelineConfig(scenario="custom", **kwargs)


def _calibrated(config, item, calibration=None):
    """Pipeline con las bases compartidas ajustadas sobre ``calibration`` (por defecto, el propio elemento)."""
    pipeline = Pipeline(config)
    if config.method == "gsc" and config.basis_mode == "shared":
        pipeline.calibrate(calibration or [item])
    return pipeline


def _tx(item, config):
    with _calibrated(config, item) as pipeline:
        return pipeline.transmit(item)


def _run(item, config):
    with _calibrated(config, item) as pipeline:
        return pipeline.run_end_to_end(item)


def test_configuracion_por_escenario():
    meeting = PipelineConfig(scenario="online_meeting")
    assert meeting.extractor == AdapterSpec("builtin", "meeting")
    assert meeting.generator == AdapterSpec("builtin", "compose")
    road = PipelineConfig(scenario="road_monitoring", generator=AdapterSpec("builtin", "identity"))
    assert road.extractor.name == "road" and road.generator.name == "identity"
    for kwargs in ({"scenario": "oficina"}, {"method": "jpeg"}, {"basis_mode": "mixto"}, {"byte_budget": 5}):
        with pytest.raises(ValueError):
            PipelineConfig(**kwargs)


def test_filas_de_tensor():
    assert tensor_rows(np.zeros((3, 4, 5))).shape == (12, 5)
    assert tensor_rows(np.zeros(7)).shape == (1, 7)
    assert basis_key("task", 0, 64) == "task0:64"


def test_identidad_sin_ruido_a_rango_completo(scene_item):
    config = _identity(task=StreamSettings(None, 16))
    report = _run(scene_item, config)
    assert report.status == "ok"
    assert report.semantic_nmse < 1e-9
    assert report.task_pass
    assert report.basis_mode == "shared"
    assert report.flops_estimate > 0


def test_payload_recibido_igual_al_transmitido(scene_item):
    with _calibrated(_identity(), scene_item) as pipeline:
        tx = pipeline.transmit(scene_item)
        rx = pipeline.receive(tx.coded)
    assert rx.valid
    assert rx.payloads == tx.payloads
    assert tx.accounting.payload_bytes == sum(payload_byte_size(p) for p in tx.payloads)
    assert tx.accounting.coded_bits == tx.accounting.codewords * pipeline.code.n


def test_presupuesto_reduce_los_bits_de_tarea():
    item = SourceItem("grande", [make_scene(128)])
    tx = _tx(item, _identity(byte_budget=10000))
    # 1058 bytes fijos + 2048 bytes por bit de tarea
    assert tx.accounting.settings.task_bits == 4
    assert tx.accounting.payload_bytes == 1058 + 2048 * 4


def test_presupuesto_recorta_primero_el_rango_perceptual(scene_item):
    config = PipelineConfig(scenario="online_meeting", channel=SILENT)
    full = _tx(scene_item, config)
    assert full.accounting.payload_bytes == 2234
    tx = _tx(scene_item, PipelineConfig(scenario="online_meeting", channel=SILENT, byte_budget=2100))
    settings = tx.accounting.settings
    assert settings.perceptual_rank == 10
    assert settings.task_bits == 12 and settings.perceptual_bits == 8
    assert tx.accounting.payload_bytes <= 2100


def test_presupuesto_imposible(scene_item):
    with pytest.raises(BudgetInfeasibleError):
        _tx(scene_item, _identity(byte_budget=6))
    with _calibrated(_identity(byte_budget=6), scene_item) as pipeline:
        report = safe_run(pipeline, scene_item, seed=1, budget_label="6")
    assert report.status == "failed" and report.budget_label == "6"


def test_nmse_crece_al_bajar_el_presupuesto(scene_item):
    values = []
    for budget in (8000, 5000, 3000):
        report = _run(scene_item, _identity(byte_budget=budget))
        assert report.bytes_transmitted <= budget
        values.append(report.semantic_nmse)
    assert values[0] < values[1] < values[2]


def test_base_autocontenida_con_receptor_nuevo(scene_item):
    config = _identity(basis_mode="self-contained")
    tx = transmit(scene_item, config)
    assert tx.payloads[0].of_type(BASIS)
    with Pipeline(config) as receiver:
        assert len(receiver.registry) == 0
        rx = receiver.receive(tx.coded)
    assert rx.valid
    assert np.allclose(rx.item.frames[0], scene_item.frames[0], atol=1.0)


def test_base_compartida_desconocida_no_rompe(scene_item):
    config = _identity()
    tx = _tx(scene_item, config)
    assert not tx.payloads[0].of_type(BASIS)
    # receptor sin calibrar: la base compartida no viaja en el payload
    with Pipeline(config) as receiver:
        rx = receiver.receive(tx.coded)
    assert not rx.valid
    assert rx.frames[0].stream_valid == [False]
    assert np.all(rx.item.frames[0] == 0)


def test_calibracion_compartida(scene_item):
    calibration = [SourceItem(f"c{i}", [make_scene(seed=i)]) for i in range(3)]
    config = PipelineConfig(scenario="online_meeting", channel=SILENT)
    with Pipeline(config) as pipeline:
        registry = pipeline.calibrate(calibration)
        assert registry.get("task0:32").rank == 32
        assert registry.get("perceptual0:16") is not None
        report = pipeline.run_end_to_end(scene_item)
    assert report.status == "ok"
    copy = registry.copy()
    assert len(copy) == len(registry)
    assert copy.by_id(registry.get("task0:32").basis_id) is registry.get("task0:32")


def test_registro_de_bases(rng):
    registry = BasisRegistry()
    assert registry.get("task0:8") is None
    basis = registry.fit("task0:8", rng.normal(size=(5, 8)))
    assert basis.rank == 5
    assert registry.get("task0:8") is basis and registry.by_id(basis.basis_id) is basis


def test_compartida_sin_calibrar_falla(scene_item):
    config = _identity()
    with Pipeline(config) as pipeline:
        with pytest.raises(BasisUnknownError, match="task0:64"):
            pipeline.transmit(scene_item)
        assert len(pipeline.registry) == 0
        report = safe_run(pipeline, scene_item, seed=1)
    assert report.status == "failed"
    assert report.bytes_transmitted == 0


def test_ajuste_bajo_demanda_solo_si_se_pide(scene_item):
    config = _identity(fit_on_demand=True)
    with Pipeline(config) as pipeline:
        tx = pipeline.transmit(scene_item)
        assert pipeline.registry.get("task0:64") is not None
        report = pipeline.run_end_to_end(scene_item)
    # la base ajustada no viaja en el payload
    assert not tx.payloads[0].of_type(BASIS)
    assert report.status == "ok"


def test_autocontenida_no_registra_la_base(scene_item):
    with Pipeline(_identity(basis_mode="self-contained")) as pipeline:
        tx = pipeline.transmit(scene_item)
        assert len(pipeline.registry) == 0
    assert tx.payloads[0].of_type(BASIS)


def test_receptor_solo_con_las_tramas(scene_item):
    config = _identity()
    with _calibrated(config, scene_item) as sender:
        tx = sender.transmit(scene_item)
        registry = sender.registry.copy()
    # tramas rehechas desde los payloads serializados, sin el elemento fuente
    code = resolve_code(config.code_id)
    coded = [frame_bits(code, bytes_to_bits(serialize_payload(p)), shape=(64, 64)) for p in tx.payloads]
    with Pipeline(config, registry) as receiver:
        rx = receiver.receive(coded, name="remoto")
        assert rx.valid and rx.payloads == tx.payloads
        assert rx.item.name == "remoto" and rx.item.metadata == {}
        assert nmse(scene_item.frames[0], rx.item.frames[0]) < 1e-4
        with pytest.raises(PayloadError):
            receiver.receive([replace(coded[0], shape=None)])


def test_solo_flujos_de_tarea(scene_item):
    config = PipelineConfig(scenario="online_meeting", channel=SILENT,
                            perceptual=StreamSettings(None, 8, enabled=False))
    tx = _tx(scene_item, config)
    assert tx.payloads[0].of_type(TASK)
    assert not tx.payloads[0].of_type(PERCEPTUAL)


def test_ruido_fuerte_corrompe_sin_fallar(scene_item):
    report = _run(scene_item, _identity(channel=ChannelConfig(-10.0, "BPSK", 3)))
    assert report.status == "corrupt"
    assert not report.task_pass


def test_canal_limpio_equivale_a_sin_ruido(scene_item):
    quiet = _run(scene_item, _identity())
    noisy = _run(scene_item, _identity(channel=ChannelConfig(10.0, "BPSK", 1)))
    assert noisy.status == quiet.status == "ok"
    assert noisy.semantic_nmse == quiet.semantic_nmse
    assert noisy.piqe == quiet.piqe
    assert noisy.kl_divergence == quiet.kl_divergence


def test_determinista(scene_item):
    config = _identity(channel=ChannelConfig(1.0, "QPSK", 9), byte_budget=4000)
    assert _run(scene_item, config) == _run(scene_item, config)


def test_monitorizacion_de_carreteras():
    item = SourceItem("via", [make_scene()], ROAD_METADATA)
    config = PipelineConfig(scenario="road_monitoring", channel=SILENT)
    tx = _tx(item, config)
    caption = "Escena autopista con coche, camión, clima soleado."
    (text,) = tx.payloads[0].of_type(TEXT)
    assert text.data.decode("utf-8") == caption
    without_text = SemanticPayload([s for s in tx.payloads[0].streams if s.stream_type != TEXT])
    assert payload_byte_size(tx.payloads[0]) - payload_byte_size(without_text) == 5 + len(caption.encode("utf-8"))
    report = _run(item, config)
    assert report.cer == 0.0
    # sin tensores de tarea ni embedder no hay semantic-NMSE
    assert report.semantic_nmse is None


def test_embedder_para_semantic_nmse():
    item = SourceItem("via", [make_scene()], ROAD_METADATA)
    config = PipelineConfig(scenario="road_monitoring", channel=SILENT,
                            embedder=AdapterSpec("builtin", "depth-proxy"))
    report = _run(item, config)
    assert report.semantic_nmse is not None and report.semantic_nmse < 0.05


def test_metodo_tradicional(scene_item):
    report = run_end_to_end(scene_item, PipelineConfig(method="traditional", channel=SILENT, quality=90))
    assert report.status == "ok" and report.basis_mode == ""
    assert report.semantic_nmse < 0.01
    with pytest.raises(BudgetInfeasibleError):
        transmit(scene_item, PipelineConfig(method="traditional", byte_budget=20))


def test_metodo_semantic_dct(scene_item):
    config = PipelineConfig(scenario="online_meeting", method="semantic_dct", channel=SILENT, byte_budget=1500)
    tx = transmit(scene_item, config)
    assert tx.accounting.payload_bytes <= 1500
    assert 1 <= tx.accounting.quality <= 100
    report = _run(scene_item, config)
    assert report.status == "ok"


def test_video_fotograma_a_fotograma():
    item = SourceItem("clip", [make_scene(seed=1), make_scene(seed=2)])
    with _calibrated(_identity(), item) as pipeline:
        tx = pipeline.transmit(item)
        assert len(tx.payloads) == len(tx.coded) == 2
        report = pipeline.run_end_to_end(item)
    assert report.bytes_transmitted == sum(payload_byte_size(p) for p in tx.payloads)
    assert report.semantic_nmse < 1e-4


def test_presupuestos_altos_con_el_dataset_de_ejemplo():
    item = load_dataset(os.path.join(os.path.dirname(__file__), "..", "data", "items"))[0]
    values = []
    for budget in (78600, 236000, 393000):
        report = run_end_to_end(item, PipelineConfig(method="traditional", channel=SILENT, byte_budget=budget))
        values.append(report.semantic_nmse)
    assert values[0] >= values[1] >= values[2]


def test_umbral_inalcanzable_se_marca():
    item = SourceItem("grande", [make_scene(seed=5)])
    report = _run(item, _identity(task=StreamSettings(None, 4), semantic_nmse_max=0.0))
    assert report.status == "ok"
    assert report.semantic_nmse > 0
    assert report.task_pass is False


def test_profundidad_a_10_db_como_sin_ruido(scene_item):
    adapters = dict(extractor=AdapterSpec("builtin", "depth-proxy"), generator=AdapterSpec("builtin", "upsample"))
    quiet = _run(scene_item, _identity(**adapters))
    noisy = _run(scene_item, _identity(channel=ChannelConfig(10.0, "BPSK", 4), **adapters))
    assert noisy.status == quiet.status == "ok"
    assert abs(noisy.semantic_nmse - quiet.semantic_nmse) <= 0.05 * quiet.semantic_nmse


def test_gsc_plano_en_presupuestos_altos():
    item = load_dataset(os.path.join(os.path.dirname(__file__), "..", "data", "items"))[0]
    values = []
    for budget in (78600, 236000, 393000):
        report = _run(item, PipelineConfig(scenario="online_meeting", channel=SILENT, byte_budget=budget))
        assert report.status == "ok"
        values.append(report.semantic_nmse)
    assert max(values) - min(values) <= 0.15 * max(values)
