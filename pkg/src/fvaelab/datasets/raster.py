"""Binary rasterization of simple shapes by supersampled coverage.

Pixel ``(row, col)`` has its center at ``(x=col, y=row)``; a canvas of width W
spans ``[-0.5, W - 0.5]`` horizontally.  A shape is described in its own
frame ``(u, v)`` (``u`` along the width) and placed with

    x = cx + u cos(theta) - v sin(theta)
    y = cy + u sin(theta) + v cos(theta)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, PlacementError

__all__ = ["SHAPE_KINDS", "ShapeSpec", "coverage", "render_shape", "shape_extent"]

SHAPE_KINDS = ("rectangle", "square", "ellipse", "heart")

# Bounding box of (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0, measured on a fine grid.
_HEART_HALF_X = 1.139
_HEART_Y_LO, _HEART_Y_HI = -1.0, 1.2365

_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    width: float
    height: float
    orientation: float = 0.0
    center: tuple[float, float] = (31.5, 31.5)

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ConfigurationError(f"unknown shape kind {self.kind!r}")
        vals = (self.width, self.height, self.orientation, *self.center)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ConfigurationError(f"non-finite shape parameters: {self}")
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError(f"shape sizes must be positive: {self}")
        if self.kind == "square" and self.width != self.height:
            raise ConfigurationError("square needs width == height")
        object.__setattr__(self, "orientation", float(self.orientation) % (2 * math.pi))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def replace(self, **changes) -> "ShapeSpec":
        fields = dict(
            kind=self.kind,
            width=self.width,
            height=self.height,
            orientation=self.orientation,
            center=self.center,
        )
        fields.update(changes)
        return ShapeSpec(**fields)


def _inside(kind: str, u: np.ndarray, v: np.ndarray, w: float, h: float) -> np.ndarray:
    if kind in ("rectangle", "square"):
        return (np.abs(u) <= w / 2) & (np.abs(v) <= h / 2)
    if kind == "ellipse":
        return (u / (w / 2)) ** 2 + (v / (h / 2)) ** 2 <= 1.0
    # heart: lobes toward -v (up on screen), tip toward +v
    x = u * (2 * _HEART_HALF_X / w)
    y = -v * ((_HEART_Y_HI - _HEART_Y_LO) / h) + (_HEART_Y_HI + _HEART_Y_LO) / 2
    return (x * x + y * y - 1.0) ** 3 - x * x * y**3 <= 0.0


def shape_extent(shape: ShapeSpec) -> tuple[float, float, float, float]:
    """Axis-aligned bounds ``(xmin, xmax, ymin, ymax)`` of the placed shape.

    Exact for rectangles and ellipses; for hearts the rotated local bounding
    box is used, which can only over-estimate.
    """
    c, s = math.cos(shape.orientation), math.sin(shape.orientation)
    a, b = shape.width / 2, shape.height / 2
    if shape.kind == "ellipse":
        ex = math.sqrt((a * c) ** 2 + (b * s) ** 2)
        ey = math.sqrt((a * s) ** 2 + (b * c) ** 2)
    else:
        ex = abs(a * c) + abs(b * s)
        ey = abs(a * s) + abs(b * c)
    cx, cy = shape.center
    return cx - ex, cx + ex, cy - ey, cy + ey


def _check_placement(shape: ShapeSpec, width: int, height: int) -> None:
    xmin, xmax, ymin, ymax = shape_extent(shape)
    over = {
        "left": -0.5 - xmin,
        "right": xmax - (width - 0.5),
        "top": -0.5 - ymin,
        "bottom": ymax - (height - 0.5),
    }
    bad = {k: v for k, v in over.items() if v > _EDGE_TOL}
    if bad:
        detail = ", ".join(f"{k} by {v:.3f}px" for k, v in bad.items())
        raise PlacementError(f"{shape} extends outside the {width}x{height} canvas: {detail}")


def coverage(
    shape: ShapeSpec, width: int = 64, height: int = 64, supersample: int = 8
) -> np.ndarray:
    """Fraction of each pixel's ``supersample**2`` subsamples inside the shape."""
    if supersample < 1:
        raise ConfigurationError("supersample must be >= 1")
    _check_placement(shape, width, height)
    xmin, xmax, ymin, ymax = shape_extent(shape)
    c0 = max(int(math.floor(xmin + 0.5)), 0)
    c1 = min(int(math.ceil(xmax + 0.5)), width)
    r0 = max(int(math.floor(ymin + 0.5)), 0)
    r1 = min(int(math.ceil(ymax + 0.5)), height)
    out = np.zeros((height, width), dtype=np.float64)
    if c1 <= c0 or r1 <= r0:
        return out

    offs = (np.arange(supersample) + 0.5) / supersample - 0.5
    xs = (np.arange(c0, c1)[:, None] + offs[None, :]).ravel()
    ys = (np.arange(r0, r1)[:, None] + offs[None, :]).ravel()
    dx = xs[None, :] - shape.center[0]
    dy = ys[:, None] - shape.center[1]
    c, s = math.cos(shape.orientation), math.sin(shape.orientation)
    u = c * dx + s * dy
    v = -s * dx + c * dy
    hit = _inside(shape.kind, u, v, shape.width, shape.height)
    hit = hit.reshape(r1 - r0, supersample, c1 - c0, supersample)
    out[r0:r1, c0:c1] = hit.mean(axis=(1, 3))
    return out


def render_shape(
    shape: ShapeSpec, width: int = 64, height: int = 64, supersample: int = 8
) -> np.ndarray:
    """Binary image: a pixel is lit iff at least half its subsamples are covered."""
    return (coverage(shape, width, height, supersample) >= 0.5).astype(np.uint8)
