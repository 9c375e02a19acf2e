"""``VCKP`` checkpoint files: architecture text plus f64 parameter blocks.

Layout (little-endian)::

    magic "VCKP" | version u16 | phase i32 (-1 when not a phase checkpoint)
    config length u32 | UTF-8 JSON config
    block count u32
    per block: name length u16, UTF-8 name, ndim u8, dims u32[ndim], f64 data
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

__all__ = ["CheckpointFormatError", "load_checkpoint", "save_checkpoint"]

MAGIC = b"VCKP"
VERSION = 1


class CheckpointFormatError(ValueError):
    pass


def save_checkpoint(path, config: dict, params: dict, phase: int = -1) -> None:
    text = json.dumps(config, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<Hi", VERSION, phase), struct.pack("<I", len(text)), text,
             struct.pack("<I", len(params))]
    for name in sorted(params):
        arr = np.asarray(params[name], dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[dict, dict, int]:
    """Return ``(config, params, phase)``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise CheckpointFormatError(f"truncated checkpoint at byte {pos}")
        out = buf[pos : pos + n]
        pos += n
        return out

    if take(4) != MAGIC:
        raise CheckpointFormatError("bad magic, expected b'VCKP'")
    version, phase = struct.unpack("<Hi", take(6))
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    (clen,) = struct.unpack("<I", take(4))
    config = json.loads(take(clen).decode("utf-8"))
    (count,) = struct.unpack("<I", take(4))
    params = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        n = int(np.prod(shape)) if ndim else 1
        params[name] = np.frombuffer(take(8 * n), dtype="<f8").reshape(shape).astype(np.float64)
    if pos != len(buf):
        raise CheckpointFormatError(f"{len(buf) - pos} trailing bytes")
    return config, params, phase
