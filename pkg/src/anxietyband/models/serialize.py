"""Portable model file: magic, version, JSON header, raw little-endian arrays, CRC32.

Layout::

    b"ANXBMDL\\0" | u16 version | u32 header length | header JSON | array bytes | u32 crc32

The header lists every array as ``{name, dtype, shape, offset, nbytes}``
relative to the start of the array block.  Output depends only on the model,
so saving the same model twice gives identical bytes.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..errors import CorruptModel, VersionMismatch

MAGIC = b"ANXBMDL\0"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sHI")


def dumps(header: dict, arrays: dict[str, np.ndarray]) -> bytes:
    specs, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = le.tobytes()
        specs.append({"name": name, "dtype": le.dtype.str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    head = json.dumps({**header, "arrays": specs}, sort_keys=True, separators=(",", ":")).encode()
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(head)) + head + b"".join(blobs)
    return body + struct.pack("<I", zlib.crc32(body))


def loads(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(data) < _PREFIX.size + 4:
        raise CorruptModel("model file is truncated")
    magic, version, head_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CorruptModel("not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, this build reads {FORMAT_VERSION}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptModel("checksum mismatch (truncated or modified file)")
    start = _PREFIX.size
    try:
        header = json.loads(body[start:start + head_len])
        base = start + head_len
        arrays = {}
        for s in header.pop("arrays"):
            raw = body[base + s["offset"]: base + s["offset"] + s["nbytes"]]
            arrays[s["name"]] = np.frombuffer(raw, dtype=np.dtype(s["dtype"])).reshape(s["shape"]).copy()
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptModel(f"unreadable model header: {exc}") from exc
    return header, arrays
