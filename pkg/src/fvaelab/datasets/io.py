"""Versioned little-endian dataset container (``DSEQ``).

Layout::

    magic "DSEQ" | version u16 | width u16 | height u16 | factor count u8
    per factor: name length u8, UTF-8 name, value count u32, values f64[count]
    image count u64
    labels u32[N * K]   (image-major, factor-minor)
    pixels u8[N * H * W] (row-major, values in {0, 1})
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .core import Factor, FactorSpec, ImageDataset

__all__ = ["DatasetFormatError", "MAGIC", "VERSION", "read_dataset", "write_dataset"]

MAGIC = b"DSEQ"
VERSION = 1


class DatasetFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def write_dataset(path, dataset: ImageDataset) -> None:
    """Write ``dataset`` atomically (temp file then rename)."""
    if len(dataset.spec) == 0:
        raise ValueError("refusing to write a dataset with no factors")
    if len(dataset.spec) > 255:
        raise ValueError("at most 255 factors fit the container")
    parts = [MAGIC, struct.pack("<HHHB", VERSION, dataset.width, dataset.height, len(dataset.spec))]
    for f in dataset.spec.factors:
        name = f.name.encode("utf-8")
        if len(name) > 255:
            raise ValueError(f"factor name too long: {f.name!r}")
        parts.append(struct.pack("<B", len(name)) + name)
        parts.append(struct.pack("<I", len(f.values)))
        parts.append(np.asarray(f.values, dtype="<f8").tobytes())
    parts.append(struct.pack("<Q", len(dataset)))
    parts.append(dataset.labels.astype("<u4").tobytes())
    parts.append(dataset.images.astype(np.uint8).tobytes())
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise DatasetFormatError(
                f"truncated file: need {n} bytes for {what}, {len(self.buf) - self.pos} left", self.pos
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_dataset(path) -> ImageDataset:
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf)
    if r.take(4, "magic") != MAGIC:
        raise DatasetFormatError("bad magic, expected b'DSEQ'", 0)
    (version,) = r.unpack("<H", "version")
    if version != VERSION:
        raise DatasetFormatError(f"unsupported version {version}", 4)
    width, height, nfac = r.unpack("<HHB", "dimensions")
    if width == 0 or height == 0 or nfac == 0:
        raise DatasetFormatError(f"invalid dimensions {width}x{height} with {nfac} factors", 6)
    factors = []
    for _ in range(nfac):
        (nlen,) = r.unpack("<B", "factor name length")
        at = r.pos
        try:
            name = r.take(nlen, "factor name").decode("utf-8")
        except UnicodeDecodeError:
            raise DatasetFormatError("factor name is not UTF-8", at) from None
        (count,) = r.unpack("<I", "value count")
        values = np.frombuffer(r.take(8 * count, "factor values"), dtype="<f8")
        try:
            factors.append(Factor(name, values))
        except ValueError as exc:
            raise DatasetFormatError(str(exc), at) from None
    (n,) = r.unpack("<Q", "image count")
    k = len(factors)
    labels = np.frombuffer(r.take(4 * n * k, "labels"), dtype="<u4").reshape(n, k)
    at = r.pos
    pixels = np.frombuffer(r.take(n * width * height, "pixels"), dtype=np.uint8)
    if r.pos != len(buf):
        raise DatasetFormatError(f"{len(buf) - r.pos} trailing bytes", r.pos)
    try:
        return ImageDataset(pixels.reshape(n, height, width).copy(), labels.astype(np.int64),
                            FactorSpec(tuple(factors)))
    except ValueError as exc:
        raise DatasetFormatError(str(exc), at) from None
