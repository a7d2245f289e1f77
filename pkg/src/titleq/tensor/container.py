"""Flat binary container for named float64 arrays.

Layout: magic ``TQPARAMS``, u32 version, u32 entry count, then per entry
(u16 name length, utf-8 name, u8 ndim, u32 dims...), then all array data as
little-endian float64 in declaration order.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"TQPARAMS"
VERSION = 1


def dumps(params: dict) -> bytes:
    head = [MAGIC, struct.pack("<II", VERSION, len(params))]
    body = []
    for name, arr in params.items():
        arr = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        head.append(struct.pack("<H", len(raw)) + raw)
        head.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        body.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(head + body)


def loads(buf: bytes) -> dict:
    if buf[:len(MAGIC)] != MAGIC:
        raise ValueError("not a parameter container (bad magic)")
    pos = len(MAGIC)
    version, count = struct.unpack_from("<II", buf, pos)
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    pos += 8
    table = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = buf[pos:pos + ln].decode("utf-8")
        pos += ln
        (ndim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", buf, pos)
        pos += 4 * ndim
        table.append((name, shape))
    out = {}
    for name, shape in table:
        size = int(np.prod(shape)) if shape else 1
        out[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * size
    if pos != len(buf):
        raise ValueError("trailing bytes in parameter container")
    return out


def save(path: str | Path, params: dict) -> None:
    Path(path).write_bytes(dumps(params))


def load(path: str | Path) -> dict:
    return loads(Path(path).read_bytes())
