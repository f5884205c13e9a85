"""Binary containers for encoder weights (ASGW) and trained heads (ASGM).

Both formats are little-endian and share a tensor record layout:

    u32 name length, UTF-8 name, u32 rank, rank x u64 dims, float32 payload

ASGW: magic "ASGW", u32 version, 9 x u32 config ints, u32 tensor count,
tensor records.

ASGM: magic "ASGM", u32 version, head kind (string record), u32 label
count, (u32 id, string) pairs, u32 tensor count, tensor records.

Round-trips are bit-exact: tensors are stored and kept as float32.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagicError, TruncatedFileError, VersionMismatchError

FORMAT_VERSION = 1


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFileError(f"file truncated while reading {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]

    def string(self, what: str) -> str:
        length = self.u32(what)
        return self.take(length, what).decode("utf-8")

    def done(self) -> bool:
        return self.pos == len(self.data)


def pack_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def pack_tensor(name: str, array: np.ndarray) -> bytes:
    arr = np.asarray(array, dtype="<f4")
    if not arr.flags.c_contiguous:  # ascontiguousarray would promote 0-d to 1-d
        arr = np.ascontiguousarray(arr)
    parts = [pack_string(name), struct.pack("<I", arr.ndim)]
    for dim in arr.shape:
        parts.append(struct.pack("<Q", dim))
    parts.append(arr.tobytes())
    return b"".join(parts)


def read_tensor(reader: _Reader) -> tuple[str, np.ndarray]:
    name = reader.string("tensor name")
    rank = reader.u32(f"rank of {name}")
    dims = tuple(reader.u64(f"dims of {name}") for _ in range(rank))
    count = 1
    for dim in dims:
        count *= dim
    payload = reader.take(4 * count, f"tensor {name}")
    return name, np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_container(magic: bytes, header: bytes, tensors: dict[str, np.ndarray]) -> bytes:
    parts = [magic, struct.pack("<I", FORMAT_VERSION), header]
    parts.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        parts.append(pack_tensor(name, arr))
    return b"".join(parts)


def open_container(data: bytes, magic: bytes) -> _Reader:
    reader = _Reader(data)
    got = reader.take(4, "magic")
    if got != magic:
        raise BadMagicError(f"expected magic {magic!r}, got {got!r}")
    version = reader.u32("version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported version {version}")
    return reader


def read_tensor_table(reader: _Reader) -> dict[str, np.ndarray]:
    count = reader.u32("tensor count")
    tensors = {}
    for _ in range(count):
        name, arr = read_tensor(reader)
        tensors[name] = arr
    return tensors
