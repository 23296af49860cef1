import struct

import numpy as np
import pytest

from gsc.errors import BadMagicError, PayloadError, TruncatedPayloadError, VersionMismatchError
from gsc.pca import fit_basis
from gsc.payload import (PERCEPTUAL, ROLE_SOURCE, TASK, SemanticPayload, basis_stream, coded_stream,
                         deserialize_payload, payload_byte_size, serialize_payload, stream_spans, text_stream,
                         vector_stream)
from gsc.quantizer import quant_spec_for, quantize


def random_payload(rng):
    streams = []
    for _ in range(rng.integers(0, 4)):
        kind = rng.integers(0, 4)
        if kind < 2:
            rank, count, bits = int(rng.integers(1, 6)), int(rng.integers(1, 5)), int(rng.integers(1, 17))
            coeffs = rng.normal(size=(count, rank))
            spec = quant_spec_for(coeffs, bits)
            streams.append(vector_stream(TASK if kind == 0 else PERCEPTUAL, f"b{rank}", quantize(spec, coeffs), spec))
        elif kind == 2:
            streams.append(text_stream("ñandú " * int(rng.integers(0, 3))))
        else:
            streams.append(coded_stream(rng.bytes(int(rng.integers(0, 20))), ROLE_SOURCE))
    return SemanticPayload(streams)


def test_ida_y_vuelta_bit_exacta(rng):
    for _ in range(1000):
        p = random_payload(rng)
        data = serialize_payload(p)
        assert len(data) == payload_byte_size(p)
        back = deserialize_payload(data)
        assert serialize_payload(back) == data
        assert back == p


def test_todos_los_truncamientos_se_rechazan(rng):
    p = random_payload(rng)
    while not p.streams:
        p = random_payload(rng)
    data = serialize_payload(p)
    for cut in range(len(data)):
        with pytest.raises(PayloadError):
            deserialize_payload(data[:cut])


def test_flujo_de_base_autocontenido(rng):
    basis = fit_basis(rng.normal(size=(40, 6)), 3)
    p = SemanticPayload([basis_stream(basis)])
    back = deserialize_payload(serialize_payload(p))
    got = back.streams[0].basis
    assert got.basis_id == basis.basis_id
    assert np.allclose(got.components, basis.components, atol=1e-6)
    assert payload_byte_size(p) == 6 + 1 + 1 + len(basis.basis_id) + 2 + 2 + 4 * 6 * 4


def test_errores_de_cabecera():
    good = serialize_payload(SemanticPayload([text_stream("hola")]))
    with pytest.raises(BadMagicError):
        deserialize_payload(b"XXXX" + good[4:])
    with pytest.raises(VersionMismatchError):
        deserialize_payload(good[:4] + bytes([9]) + good[5:])
    with pytest.raises(TruncatedPayloadError):
        deserialize_payload(good[:-1])
    with pytest.raises(PayloadError):
        deserialize_payload(good + b"\x00")
    with pytest.raises(PayloadError):
        deserialize_payload(b"GSCP" + struct.pack("<BBB", 1, 1, 9))


def test_payload_vacio_es_solo_cabecera():
    p = SemanticPayload([])
    assert payload_byte_size(p) == 6
    assert deserialize_payload(serialize_payload(p)).streams == ()


def test_rangos_de_flujos():
    p = SemanticPayload([text_stream("abc"), coded_stream(b"12345", ROLE_SOURCE)])
    assert stream_spans(p) == [(6, 6 + 1 + 4 + 3), (14, 14 + 1 + 1 + 4 + 5)]
    assert stream_spans(p)[-1][1] == payload_byte_size(p)
