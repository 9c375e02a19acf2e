"""Image outputs: afterimages, tiled grids and PGM/PNG writers."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

__all__ = ["afterimage", "read_pgm", "tile", "to_uint8", "write_pgm", "write_png"]


def afterimage(seq) -> np.ndarray:
    """Single image where frame ``i`` of ``N`` is drawn at brightness ``(i + 1) / N``.

    Overlaps keep the brightest (latest) value.
    """
    frames = np.asarray(getattr(seq, "images", seq), dtype=np.float64)
    if frames.ndim != 3 or len(frames) == 0:
        raise ValueError("need a non-empty (N, H, W) stack of frames")
    n = len(frames)
    weights = (np.arange(n) + 1.0) / n
    return (frames * weights[:, None, None]).max(axis=0)


def to_uint8(image) -> np.ndarray:
    """Map values in [0, 1] to 0..255 (values outside are clipped)."""
    img = np.asarray(image, dtype=np.float64)
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def tile(images, cols: int | None = None, pad: int = 1, fill: float = 1.0) -> np.ndarray:
    """Arrange ``(N, H, W)`` images (or ``(R, C, H, W)``) into one grid image."""
    arr = np.asarray(images, dtype=np.float64)
    if arr.ndim == 4:
        rows, cols = arr.shape[:2]
        arr = arr.reshape(-1, *arr.shape[2:])
    elif arr.ndim == 3:
        cols = cols or len(arr)
        rows = -(-len(arr) // cols)
    else:
        raise ValueError("expected (N, H, W) or (R, C, H, W) images")
    h, w = arr.shape[1:]
    out = np.full((rows * (h + pad) + pad, cols * (w + pad) + pad), fill)
    for k, img in enumerate(arr):
        r, c = divmod(k, cols)
        y, x = pad + r * (h + pad), pad + c * (w + pad)
        out[y : y + h, x : x + w] = img
    return out


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_pgm(path, image) -> None:
    """Binary 8-bit PGM (P5); float input is taken as [0, 1]."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM needs a 2-D image")
    if img.dtype != np.uint8:
        img = to_uint8(img)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    _atomic_write(path, header + img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5" or parts[3] != b"255":
        raise ValueError(f"{path}: not an 8-bit P5 PGM")
    w, h = int(parts[1]), int(parts[2])
    pix = np.frombuffer(parts[4], dtype=np.uint8)
    if pix.size != w * h:
        raise ValueError(f"{path}: expected {w * h} pixels, found {pix.size}")
    return pix.reshape(h, w)


def write_png(path, image) -> None:
    from PIL import Image

    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PNG writer expects a 2-D grayscale image")
    if img.dtype != np.uint8:
        img = to_uint8(img)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    Image.fromarray(img, mode="L").save(tmp, format="PNG")
    os.replace(tmp, path)
