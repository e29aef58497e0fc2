import numpy as np
import pytest

from specdiar.tensorio import (
    TensorFormatError,
    load_tensor,
    save_tensor,
    tensor_from_bytes,
    tensor_to_bytes,
)


def test_roundtrip_float32(tmp_path):
    arr = np.random.default_rng(0).standard_normal((7, 80)).astype(np.float32)
    save_tensor(tmp_path / "t.bin", arr)
    back = load_tensor(tmp_path / "t.bin")
    assert back.dtype == np.float32
    assert np.array_equal(back, arr)


def test_roundtrip_float64_bitwise(tmp_path):
    arr = np.random.default_rng(1).standard_normal((3, 4, 5))
    save_tensor(tmp_path / "t.bin", arr, dtype="float64")
    back = load_tensor(tmp_path / "t.bin")
    assert back.dtype == np.float64
    assert np.array_equal(back, arr)


def test_default_interchange_type_is_float32(tmp_path):
    arr = np.ones((2, 2), dtype=np.float64)
    buf = tensor_to_bytes(arr.astype(np.float32))
    back, _ = tensor_from_bytes(buf)
    assert back.dtype == np.float32


def test_multiple_tensors_in_one_buffer():
    a = np.arange(6, dtype=np.float32).reshape(2, 3)
    b = np.arange(4, dtype=np.float64)
    buf = tensor_to_bytes(a) + tensor_to_bytes(b)
    got_a, off = tensor_from_bytes(buf)
    got_b, end = tensor_from_bytes(buf, off)
    assert end == len(buf)
    assert np.array_equal(got_a, a)
    assert np.array_equal(got_b, b)


def test_truncated_payload_errors():
    buf = tensor_to_bytes(np.ones(10, dtype=np.float32))
    with pytest.raises(TensorFormatError, match="truncated"):
        tensor_from_bytes(buf[:-4])


def test_unknown_dtype_code_errors():
    import struct

    buf = struct.pack("<I", 1) + struct.pack("<I", 2) + struct.pack("<I", 99)
    with pytest.raises(TensorFormatError, match="element-type"):
        tensor_from_bytes(buf + b"\x00" * 16)


def test_trailing_bytes_detected(tmp_path):
    path = tmp_path / "t.bin"
    with open(path, "wb") as f:
        f.write(tensor_to_bytes(np.zeros(3, dtype=np.float32)) + b"junk")
    with pytest.raises(TensorFormatError, match="trailing"):
        load_tensor(path)
