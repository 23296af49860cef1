import io
import json

import numpy as np
import pytest

from gsc.errors import ProtocolError
from gsc.protocol import decode_frame, encode_frame, read_frame, reply, write_frame
from gsc.tensor_blob import encode_tensor_blob


def _frame():
    header = {"op": "extract", "request_id": 3, "metadata": {"scene": "calle mojada"}}
    tensors = [np.arange(12, dtype=np.float32).reshape(3, 4), np.array([1, 2, 255], dtype=np.uint8)]
    return header, tensors


def test_ida_y_vuelta():
    header, tensors = _frame()
    decoded, out = decode_frame(encode_frame(header, tensors))
    assert decoded == dict(header, tensor_count=2)
    assert len(out) == 2
    for a, b in zip(tensors, out):
        assert a.dtype == b.dtype and np.array_equal(a, b)


def test_trama_sin_tensores():
    header, tensors = decode_frame(encode_frame({"op": "hello", "request_id": 1}))
    assert header["tensor_count"] == 0 and tensors == []


def test_magic_invalido_en_offset_cero():
    data = bytearray(encode_frame(*_frame()))
    data[0:4] = b"XXXX"
    with pytest.raises(ProtocolError) as info:
        decode_frame(bytes(data))
    assert info.value.offset == 0


def test_todo_truncamiento_se_rechaza():
    data = encode_frame(*_frame())
    for cut in range(len(data)):
        with pytest.raises(ProtocolError):
            decode_frame(data[:cut])


def test_bytes_sobrantes():
    _, tensors = _frame()
    raw = json.dumps({"op": "extract", "request_id": 1, "tensor_count": 1}).encode()
    body = len(raw).to_bytes(4, "little") + raw + b"".join(encode_tensor_blob(t) for t in tensors)
    with pytest.raises(ProtocolError, match="sobran"):
        decode_frame(b"GSCF" + len(body).to_bytes(4, "little") + body)


def test_cabecera_json_invalida():
    raw = b"{no json"
    body = len(raw).to_bytes(4, "little") + raw
    data = b"GSCF" + len(body).to_bytes(4, "little") + body
    with pytest.raises(ProtocolError) as info:
        decode_frame(data)
    assert info.value.offset == 12


def test_lectura_de_flujo():
    stream = io.BytesIO()
    write_frame(stream, {"op": "hello", "request_id": 1})
    write_frame(stream, *_frame())
    stream.seek(0)
    assert read_frame(stream)[0]["op"] == "hello"
    assert read_frame(stream)[0]["op"] == "extract"
    assert read_frame(stream) is None


def test_flujo_cortado():
    data = encode_frame(*_frame())
    with pytest.raises(ProtocolError):
        read_frame(io.BytesIO(data[:3]))
    with pytest.raises(ProtocolError):
        read_frame(io.BytesIO(data[:-1]))


def test_respuesta_conserva_la_peticion():
    header = reply({"op": "embed", "request_id": 9}, ok=False, error="fallo", flops=3)
    assert header == {"op": "embed", "request_id": 9, "ok": False, "error": "fallo", "flops": 3}
