"""Binary matrix format: byte layout and failure modes."""

import struct

import numpy as np
import pytest

from embed_server import TbemError, read_tbem, write_tbem


def sample(tmp_path, ids, data):
    path = tmp_path / "m.tbem"
    write_tbem(ids, np.asarray(data, dtype=np.float32), path)
    return path


class TestRoundTrip:
    def test_values_and_ids(self, tmp_path):
        ids = ["a", "doc-2", "ümläut"]
        data = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
        path = sample(tmp_path, ids, data)
        got_ids, got = read_tbem(path)
        assert got_ids == ids
        assert np.array_equal(got, data)

    def test_zero_rows(self, tmp_path):
        path = sample(tmp_path, [], np.zeros((0, 5)))
        ids, data = read_tbem(path)
        assert ids == []
        assert data.shape == (0, 5)

    def test_exact_byte_layout(self, tmp_path):
        path = sample(tmp_path, ["x"], [[1.5, -2.0]])
        expected = (
            struct.pack("<4sIII", b"TBEM", 1, 1, 2)
            + np.array([1.5, -2.0], dtype="<f4").tobytes()
            + struct.pack("<H", 1)
            + b"x"
        )
        assert path.read_bytes() == expected


class TestValidation:
    def test_id_count_mismatch(self, tmp_path):
        with pytest.raises(TbemError, match="ids for"):
            write_tbem(["a", "b"], np.zeros((1, 2), dtype=np.float32),
                       tmp_path / "bad.tbem")

    def test_one_dimensional_rejected(self, tmp_path):
        with pytest.raises(TbemError, match="2-D"):
            write_tbem(["a"], np.zeros(3, dtype=np.float32), tmp_path / "bad.tbem")

    def test_overlong_id_rejected(self, tmp_path):
        with pytest.raises(TbemError, match="id too long"):
            write_tbem(["x" * 70000], np.zeros((1, 2), dtype=np.float32),
                       tmp_path / "bad.tbem")


class TestCorruption:
    def test_bad_magic(self, tmp_path):
        path = sample(tmp_path, ["a"], [[1.0]])
        blob = path.read_bytes()
        path.write_bytes(b"NOPE" + blob[4:])
        with pytest.raises(TbemError, match="bad magic"):
            read_tbem(path)

    def test_unsupported_version(self, tmp_path):
        path = sample(tmp_path, ["a"], [[1.0]])
        blob = bytearray(path.read_bytes())
        blob[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(blob))
        with pytest.raises(TbemError, match="unsupported version 9"):
            read_tbem(path)

    def test_truncated_header(self, tmp_path):
        path = sample(tmp_path, ["a"], [[1.0]])
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(TbemError, match="truncated header"):
            read_tbem(path)

    def test_truncated_payload(self, tmp_path):
        path = sample(tmp_path, ["a"], [[1.0, 2.0]])
        path.write_bytes(path.read_bytes()[:18])
        with pytest.raises(TbemError, match="truncated payload"):
            read_tbem(path)

    def test_truncated_ids(self, tmp_path):
        path = sample(tmp_path, ["abcdef"], [[1.0]])
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(TbemError, match="truncated id records"):
            read_tbem(path)

    def test_trailing_bytes(self, tmp_path):
        path = sample(tmp_path, ["a"], [[1.0]])
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(TbemError, match="trailing bytes"):
            read_tbem(path)
