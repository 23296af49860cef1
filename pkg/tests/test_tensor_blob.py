import numpy as np
import pytest

from gsc.errors import TensorBlobError
from gsc.tensor_blob import decode_tensor_blob, encode_tensor_blob


@pytest.mark.parametrize("dtype", [np.uint8, np.float32, np.float64])
def test_ida_y_vuelta(rng, dtype):
    tensor = (rng.random((3, 5, 2)) * 200).astype(dtype)
    blob = encode_tensor_blob(tensor)
    back, end = decode_tensor_blob(blob)
    assert end == len(blob)
    assert back.dtype == tensor.dtype and np.array_equal(back, tensor)


def test_blobs_concatenados():
    a, b = np.arange(4, dtype=np.float32), np.eye(2)
    data = encode_tensor_blob(a) + encode_tensor_blob(b)
    first, pos = decode_tensor_blob(data)
    second, end = decode_tensor_blob(data, pos)
    assert np.array_equal(first, a) and np.array_equal(second, b) and end == len(data)


def test_errores():
    with pytest.raises(TensorBlobError):
        encode_tensor_blob(np.zeros(3, dtype=np.int32))
    blob = encode_tensor_blob(np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(TensorBlobError):
        decode_tensor_blob(b"NOPE" + blob[4:])
    for cut in range(len(blob)):
        with pytest.raises(TensorBlobError):
            decode_tensor_blob(blob[:cut])
