"""Binary model container.

Layout (all integers little-endian)::

    b"SFCM" | u32 version | u32 header length | UTF-8 JSON header | float32 arrays

The header lists every array as ``{"name", "shape", "nbytes"}`` in payload
order, plus the total ``payload_bytes`` so truncation can be told apart
from a header whose shapes disagree with the payload.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np

from .errors import ArraySizeError, BadMagicError, TruncatedContainerError, UnsupportedVersionError

MAGIC = b"SFCM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sII")
_F32 = np.dtype("<f4")


def pack(header: dict, arrays: dict) -> bytes:
    """Serialize ``header`` plus named arrays (stored as little-endian float32)."""
    specs, blobs = [], []
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype=_F32)
        blobs.append(data.tobytes())
        specs.append({"name": name, "shape": list(data.shape), "nbytes": len(blobs[-1])})
    header = dict(header, arrays=specs, payload_bytes=sum(len(b) for b in blobs))
    raw = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(raw)) + raw + b"".join(blobs)


def unpack(data: bytes) -> tuple[dict, dict]:
    if len(data) < 4 and MAGIC.startswith(bytes(data)):
        raise TruncatedContainerError("container shorter than its magic number")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _PREFIX.size:
        raise TruncatedContainerError("container truncated inside the fixed prefix")
    _, version, hlen = _PREFIX.unpack_from(data)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"container version {version} unsupported (expected {FORMAT_VERSION})")
    end = _PREFIX.size + hlen
    if len(data) < end:
        raise TruncatedContainerError(f"header declares {hlen} bytes but only {len(data) - _PREFIX.size} remain")
    header = json.loads(data[_PREFIX.size:end].decode("utf-8"))
    payload = memoryview(data)[end:]
    declared = header.get("payload_bytes", 0)
    if len(payload) < declared:
        raise TruncatedContainerError(f"payload truncated: {len(payload)} of {declared} bytes present")

    arrays, offset = {}, 0
    for spec in header.get("arrays", []):
        name, shape, nbytes = spec["name"], tuple(spec["shape"]), spec["nbytes"]
        expected = int(np.prod(shape, dtype=np.int64)) * _F32.itemsize
        if nbytes != expected:
            raise ArraySizeError(f"array {name!r}: shape {shape} needs {expected} bytes, header says {nbytes}")
        if offset + nbytes > declared:
            raise ArraySizeError(f"array {name!r} runs past the declared payload")
        arrays[name] = np.frombuffer(payload[offset:offset + nbytes], dtype=_F32).reshape(shape).copy()
        offset += nbytes
    if offset != declared or len(payload) != declared:
        raise ArraySizeError(f"payload is {len(payload)} bytes but arrays account for {offset}")
    return header, arrays


def write(header: dict, arrays: dict, sink: BinaryIO):
    sink.write(pack(header, arrays))


def read(source: BinaryIO):
    return unpack(source.read())
