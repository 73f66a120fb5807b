"""Unit tests for the VTEN tensor codec."""

import struct

import numpy as np
import pytest

from varda.errors import FormatError
from varda.tensor import Tensor, decode_array, encode_array, load_array, load_tensor, save_tensor


class TestEncoding:
    """Tests for the on-disk layout."""

    def test_header_layout(self):
        """Test magic, dtype code, rank and little-endian extents."""
        buf = encode_array(np.zeros((2, 3), dtype=np.float64))
        assert buf[:4] == b"VTEN"
        assert buf[4] == 2
        assert buf[5] == 2
        assert struct.unpack_from("<2I", buf, 6) == (2, 3)
        assert len(buf) == 6 + 8 + 6 * 8

    def test_values_are_little_endian_row_major(self):
        """Test the payload byte order."""
        buf = encode_array(np.array([[1, 2], [3, 4]], dtype=np.uint8))
        assert buf[4] == 3
        assert buf[-4:] == bytes([1, 2, 3, 4])
        buf = encode_array(np.array([1.5], dtype=">f4"))
        assert buf[-4:] == struct.pack("<f", 1.5)

    def test_unsupported_dtype(self):
        """Test that complex arrays have no code."""
        with pytest.raises(FormatError):
            encode_array(np.zeros(2, dtype=np.complex128))

    def test_records_concatenate(self):
        """Test decoding two records back to back."""
        buf = encode_array(np.arange(3, dtype=np.int64)) + encode_array(np.ones((1, 2)))
        first, pos = decode_array(buf)
        second, end = decode_array(buf, pos)
        np.testing.assert_array_equal(first, [0, 1, 2])
        assert second.shape == (1, 2)
        assert end == len(buf)


class TestDecodingErrors:
    """Tests for malformed records and their byte offsets."""

    def test_bad_magic(self):
        """Test that the wrong magic is reported at offset 0."""
        with pytest.raises(FormatError) as info:
            decode_array(b"NOPE" + bytes(10))
        assert info.value.offset == 0

    def test_unknown_dtype_code(self):
        """Test that an unknown dtype code is reported at its byte."""
        with pytest.raises(FormatError) as info:
            decode_array(b"VTEN" + bytes([9, 1]) + struct.pack("<I", 1) + bytes(8))
        assert info.value.offset == 4

    def test_truncated_payload(self):
        """Test that a short payload names the end of the buffer."""
        buf = encode_array(np.ones(4))[:-3]
        with pytest.raises(FormatError) as info:
            decode_array(buf)
        assert info.value.offset == len(buf)
        assert "truncated" in str(info.value)

    def test_truncated_header(self):
        """Test a buffer shorter than the fixed header."""
        with pytest.raises(FormatError):
            decode_array(b"VTE")

    def test_zero_extent(self):
        """Test that an empty dimension is rejected."""
        with pytest.raises(FormatError):
            decode_array(b"VTEN" + bytes([2, 1]) + struct.pack("<I", 0))

    def test_trailing_bytes(self, tmp_path):
        """Test that a file holding more than one record is rejected."""
        path = tmp_path / "x.vten"
        path.write_bytes(encode_array(np.ones(2)) + b"\x00")
        with pytest.raises(FormatError):
            load_array(path)


class TestFiles:
    """Tests for saving and loading tensors."""

    def test_save_and_load(self, tmp_path, rng):
        """Test that a saved tensor loads bit-identical."""
        data = rng.standard_normal((3, 4))
        path = tmp_path / "t.vten"
        save_tensor(path, Tensor(data))
        loaded = load_tensor(path)
        assert loaded.dtype == np.float64
        np.testing.assert_array_equal(loaded.data, data)

    def test_float32_kept(self, tmp_path):
        """Test that a float32 record stays float32."""
        path = tmp_path / "f.vten"
        save_tensor(path, np.ones(3, dtype=np.float32))
        assert load_tensor(path).dtype == np.float32
