"""Binary embedding-matrix file writer and reader.

Layout, little-endian throughout: magic "TBEM", u32 version (1),
u32 row count, u32 dimension, then count x dim float32 values
row-major, then one id record per row as a u16 byte length followed
by that many UTF-8 bytes.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"TBEM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_ID_LEN = struct.Struct("<H")


class TbemError(ValueError):
    """Raised for unwritable matrices or malformed files."""


def write_tbem(ids: list[str], matrix: np.ndarray, path) -> None:
    data = np.ascontiguousarray(matrix, dtype=np.float32)
    if data.ndim != 2:
        raise TbemError("matrix must be 2-D")
    if len(ids) != data.shape[0]:
        raise TbemError(f"{len(ids)} ids for {data.shape[0]} rows")
    encoded = [doc_id.encode("utf-8") for doc_id in ids]
    for doc_id, raw in zip(ids, encoded):
        if len(raw) > 0xFFFF:
            raise TbemError(f"id too long: {doc_id[:40]!r}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.shape[0], data.shape[1]))
        fh.write(data.tobytes())
        for raw in encoded:
            fh.write(_ID_LEN.pack(len(raw)))
            fh.write(raw)


def read_tbem(path) -> tuple[list[str], np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TbemError(f"{path}: truncated header")
    magic, version, count, dim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise TbemError(f"{path}: bad magic")
    if version != VERSION:
        raise TbemError(f"{path}: unsupported version {version}")
    offset = _HEADER.size
    payload = count * dim * 4
    if len(blob) < offset + payload:
        raise TbemError(f"{path}: truncated payload")
    data = np.frombuffer(blob, dtype="<f4", count=count * dim, offset=offset)
    data = data.reshape(count, dim).copy()
    offset += payload
    ids = []
    for _ in range(count):
        if len(blob) < offset + _ID_LEN.size:
            raise TbemError(f"{path}: truncated id records")
        (length,) = _ID_LEN.unpack_from(blob, offset)
        offset += _ID_LEN.size
        if len(blob) < offset + length:
            raise TbemError(f"{path}: truncated id records")
        ids.append(blob[offset : offset + length].decode("utf-8"))
        offset += length
    if offset != len(blob):
        raise TbemError(f"{path}: trailing bytes")
    return ids, data
