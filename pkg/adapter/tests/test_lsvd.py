"""LSVD file format round-trips and refusal paths."""

import struct

import numpy as np
import pytest

from latentadapter.lsvd import read_lsvd, sidecar_path, write_lsvd


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((3, 8, 5)).astype(np.float32)
    path = tmp_path / "a.lat"
    write_lsvd(data, path, meta={"time_step": 800, "total_steps": 1000,
                                 "seed": 7, "tag": "original"})
    back, meta = read_lsvd(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, data)
    assert meta["time_step"] == 800
    assert meta["total_steps"] == 1000
    assert meta["seed"] == 7
    assert meta["tag"] == "original"


def test_file_size_is_header_plus_payload(tmp_path):
    path = tmp_path / "z.lat"
    write_lsvd(np.zeros((4, 64, 64), dtype=np.float32), path)
    assert path.stat().st_size == 24 + 4 * 64 * 64 * 4
    assert not (tmp_path / sidecar_path("z.lat")).exists()


def test_no_meta_reads_empty_dict(tmp_path):
    path = tmp_path / "m.lat"
    write_lsvd(np.ones((1, 2, 2)), path)
    _, meta = read_lsvd(path)
    assert meta == {}


def test_rejects_non_finite(tmp_path):
    data = np.zeros((1, 2, 2))
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        write_lsvd(data, tmp_path / "bad.lat")


def test_rejects_wrong_rank():
    with pytest.raises(ValueError, match="C, H, W"):
        write_lsvd(np.zeros((2, 2)), "unused.lat")


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.lat"
    path.write_bytes(b"NOPE" + b"\0" * 40)
    with pytest.raises(ValueError, match="bad magic"):
        read_lsvd(path)


def test_bad_version(tmp_path):
    path = tmp_path / "bad.lat"
    path.write_bytes(struct.pack("<4sIIIII", b"LSVD", 9, 1, 1, 1, 0) + b"\0" * 4)
    with pytest.raises(ValueError, match="version"):
        read_lsvd(path)


def test_bad_dtype_code(tmp_path):
    path = tmp_path / "bad.lat"
    path.write_bytes(struct.pack("<4sIIIII", b"LSVD", 1, 1, 1, 1, 0) + b"\0" * 4)
    with pytest.raises(ValueError, match="dtype"):
        read_lsvd(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "bad.lat"
    path.write_bytes(struct.pack("<4sIIIII", b"LSVD", 1, 1, 2, 2, 1) + b"\0" * 8)
    with pytest.raises(ValueError, match="truncated payload"):
        read_lsvd(path)


def test_trailing_bytes(tmp_path):
    path = tmp_path / "bad.lat"
    write_lsvd(np.zeros((1, 2, 2)), path)
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(ValueError, match="trailing"):
        read_lsvd(path)
