"""Procedural dataset families.

All images are rendered with :func:`render_shape`.  Each generated dataset
records per-image shape centers and orientations in ``meta`` (not persisted
by the binary container).
"""

from __future__ import annotations

import math

import numpy as np

from .core import ConfigurationError, Factor, FactorSpec, ImageDataset
from .raster import ShapeSpec, render_shape, shape_extent

__all__ = [
    "CANVAS",
    "DSPRITES_FULL",
    "RECT_SIZE",
    "SUITE_KINDS",
    "a4_max_length",
    "dsprites_shape_spec",
    "gen_a4",
    "gen_action_grid",
    "gen_dsprites",
    "gen_transformation_suite",
    "gen_translation_dataset",
    "grid_margin",
    "named_dataset",
]

CANVAS = 64
RECT_SIZE = (11.0, 5.0)
SUITE_KINDS = ("y", "x", "diagonal", "cycle", "rotation", "random")

DSPRITES_SHAPES = ("square", "ellipse", "heart")
DSPRITES_FULL = (3, 6, 40, 32, 32)
DSPRITES_BASE_SIZE = 20.0


def grid_margin(width: float = RECT_SIZE[0], height: float = RECT_SIZE[1]) -> int:
    """Whole-pixel margin that keeps the shape in-canvas at any orientation."""
    return int(math.ceil(math.hypot(width, height) / 2))


def _build(shapes: list[ShapeSpec], labels, spec: FactorSpec, canvas: int, **meta) -> ImageDataset:
    images = np.stack([render_shape(s, canvas, canvas) for s in shapes]) if shapes else np.zeros(
        (0, canvas, canvas), dtype=np.uint8
    )
    meta = dict(meta)
    meta["centers"] = np.array([s.center for s in shapes], dtype=np.float64).reshape(-1, 2)
    meta["orientations"] = np.array([s.orientation for s in shapes], dtype=np.float64)
    return ImageDataset(images, np.asarray(labels, dtype=np.int64), spec, meta)


def gen_translation_dataset(
    orientation: float = 0.0,
    coords: str = "cartesian",
    grid: int = 40,
    canvas: int = CANVAS,
) -> ImageDataset:
    """Translate an 11x5 rectangle over a ``grid x grid`` set of positions.

    ``coords="cartesian"`` gives factors (posX, posY) equally spaced inside the
    margin; ``coords="polar"`` gives (r, phi) around the canvas center with
    ``r`` up to the largest in-canvas radius.  A1/A2/A3 are
    ``(0, cartesian)``, ``(0, polar)`` and ``(pi/4, cartesian)``.
    """
    if coords not in ("cartesian", "polar"):
        raise ConfigurationError(f"coords must be 'cartesian' or 'polar', got {coords!r}")
    if grid < 1:
        raise ConfigurationError("grid must be >= 1")
    margin = grid_margin()
    lo, hi = margin - 0.5, canvas - 0.5 - margin
    if hi < lo:
        raise ConfigurationError(f"canvas {canvas} too small for margin {margin}")
    center = (canvas - 1) / 2
    base = ShapeSpec("rectangle", *RECT_SIZE, orientation=orientation, center=(center, center))

    if coords == "cartesian":
        xs = np.linspace(lo, hi, grid)
        spec = FactorSpec((Factor("posX", xs), Factor("posY", xs)))
        positions = [(x, y) for x in xs for y in xs]
    else:
        r_max = center - lo
        rs = np.linspace(0.0, r_max, grid)
        phis = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
        spec = FactorSpec((Factor("r", rs), Factor("phi", phis)))
        positions = [
            (center + r * math.cos(p), center + r * math.sin(p)) for r in rs for p in phis
        ]
    shapes = [base.replace(center=p) for p in positions]
    return _build(shapes, spec.grid(), spec, canvas, coords=coords)


def a4_max_length(orientations, canvas: int = CANVAS) -> float:
    """Longest centered x-path keeping the rectangle in-canvas for every orientation."""
    best = math.inf
    for theta in np.atleast_1d(orientations):
        shape = ShapeSpec("rectangle", *RECT_SIZE, orientation=float(theta), center=(0.0, 0.0))
        xmin, xmax, _, _ = shape_extent(shape)
        best = min(best, canvas - (xmax - xmin))
    return best


def gen_a4(theta: float, length: float, n: int = 16, canvas: int = CANVAS) -> ImageDataset:
    """One x-translation action of the ``theta``-oriented rectangle.

    ``n`` equally spaced frames cover a total distance ``length`` centered on
    the canvas.  The single factor is ``posX`` (frame centers); for
    ``length == 0`` the frames coincide and the factor is the frame index
    ``frame`` instead.
    """
    if length < 0:
        raise ConfigurationError("length must be >= 0")
    if n < 2:
        raise ConfigurationError("n must be >= 2")
    if length > a4_max_length([theta], canvas) + 1e-9:
        raise ConfigurationError(
            f"path length {length} leaves the {canvas}px canvas at theta={theta:.4f}"
        )
    center = (canvas - 1) / 2
    xs = center - length / 2 + length * np.arange(n) / (n - 1)
    factor = Factor("posX", xs) if length > 0 else Factor("frame", np.arange(n))
    spec = FactorSpec((factor,))
    shapes = [ShapeSpec("rectangle", *RECT_SIZE, orientation=theta, center=(x, center)) for x in xs]
    return _build(shapes, spec.grid(), spec, canvas, theta=theta, length=length)


def _evenly(values, k: int) -> np.ndarray:
    values = np.asarray(values)
    if not 1 <= k <= len(values):
        raise ConfigurationError(f"cardinality {k} outside 1..{len(values)}")
    idx = np.round(np.linspace(0, len(values) - 1, k)).astype(int)
    return values[idx]


def dsprites_shape_spec(shape: int, scale: float, orientation: float, pos_x: float, pos_y: float,
                        canvas: int = CANVAS) -> ShapeSpec:
    """Shape for dSprites-style factor values; positions are in [0, 1]."""
    size = DSPRITES_BASE_SIZE * scale
    kind = DSPRITES_SHAPES[int(shape)]
    width, height = (size, size / 2) if kind == "ellipse" else (size, size)
    margin = math.ceil(DSPRITES_BASE_SIZE / math.sqrt(2))
    lo, span = margin - 0.5, canvas - 2 * margin
    return ShapeSpec(kind, width, height, orientation, (lo + pos_x * span, lo + pos_y * span))


def gen_dsprites(cardinalities=DSPRITES_FULL, canvas: int = CANVAS) -> ImageDataset:
    """Full factor grid over (shape, scale, orientation, posX, posY).

    Each cardinality selects evenly spaced entries of the full dSprites grid
    (3 shapes, 6 scales in [0.5, 1], 40 orientations in [0, 2pi), 32x32
    positions).
    """
    cardinalities = tuple(int(c) for c in cardinalities)
    if len(cardinalities) != 5 or min(cardinalities) < 1:
        raise ConfigurationError(f"need five cardinalities >= 1, got {cardinalities}")
    full = (
        np.arange(len(DSPRITES_SHAPES), dtype=float),
        np.linspace(0.5, 1.0, DSPRITES_FULL[1]),
        np.linspace(0.0, 2 * math.pi, DSPRITES_FULL[2], endpoint=False),
        np.linspace(0.0, 1.0, DSPRITES_FULL[3]),
        np.linspace(0.0, 1.0, DSPRITES_FULL[4]),
    )
    names = ("shape", "scale", "orientation", "posX", "posY")
    spec = FactorSpec(tuple(Factor(n, _evenly(v, k)) for n, v, k in zip(names, full, cardinalities)))
    labels = spec.grid()
    values = [np.asarray(f.values) for f in spec.factors]
    shapes = [
        dsprites_shape_spec(*(values[k][row[k]] for k in range(5)), canvas=canvas)
        for row in labels
    ]
    return _build(shapes, labels, spec, canvas, family="dsprites")


def gen_transformation_suite(
    kind: str,
    n: int = 16,
    seed: int = 0,
    length: float = 32.0,
    shape: str = "rectangle",
    canvas: int = CANVAS,
) -> ImageDataset:
    """Single-transformation dataset of ``n`` frames.

    Paths are centered on the canvas: ``y``/``x``/``diagonal`` translate over
    ``length`` pixels (diagonal along (1, 1)/sqrt 2); ``cycle`` walks a circle
    of radius ``length / 2``; ``rotation`` turns in place through a full turn;
    ``random`` draws uniform positions in the ``length x length`` box.
    """
    if kind not in SUITE_KINDS:
        raise ConfigurationError(f"kind must be one of {SUITE_KINDS}, got {kind!r}")
    if n < 2:
        raise ConfigurationError("n must be >= 2")
    size = RECT_SIZE if shape == "rectangle" else (RECT_SIZE[0], RECT_SIZE[0])
    c = (canvas - 1) / 2
    base = ShapeSpec(shape, *size, orientation=0.0, center=(c, c))
    t = -length / 2 + length * np.arange(n) / (n - 1)

    if kind == "y":
        factor = Factor("posY", c + t)
        shapes = [base.replace(center=(c, c + d)) for d in t]
    elif kind == "x":
        factor = Factor("posX", c + t)
        shapes = [base.replace(center=(c + d, c)) for d in t]
    elif kind == "diagonal":
        factor = Factor("offset", t)
        shapes = [base.replace(center=(c + d / math.sqrt(2), c + d / math.sqrt(2))) for d in t]
    elif kind in ("cycle", "rotation"):
        angles = 2 * math.pi * np.arange(n) / n
        factor = Factor("angle", angles)
        if kind == "cycle":
            r = length / 2
            shapes = [base.replace(center=(c + r * math.cos(a), c + r * math.sin(a))) for a in angles]
        else:
            shapes = [base.replace(orientation=a) for a in angles]
    else:
        from ..rng import stream

        pos = stream(seed, "suite-random", n, length).uniform(-length / 2, length / 2, size=(n, 2))
        factor = Factor("draw", np.arange(n))
        shapes = [base.replace(center=(c + p[0], c + p[1])) for p in pos]

    spec = FactorSpec((factor,))
    return _build(shapes, spec.grid(), spec, canvas, kind=kind, seed=seed)


_ACTIONS = ("x", "y", "rotation")


def gen_action_grid(actions, shape: str = "rectangle", canvas: int = CANVAS) -> ImageDataset:
    """Full grid over several simultaneous actions of the 11x5 rectangle.

    ``actions`` is a sequence of ``(kind, count, extent)`` with kind in
    ``x``/``y`` (extent in pixels, centered) or ``rotation`` (extent in
    radians, starting at 0, endpoint excluded).  Used for the two-action toy
    mixes.
    """
    factors, offsets = [], []
    for kind, count, extent in actions:
        if kind not in _ACTIONS:
            raise ConfigurationError(f"action kind must be one of {_ACTIONS}, got {kind!r}")
        if count < 1:
            raise ConfigurationError("action count must be >= 1")
        if kind == "rotation":
            vals = extent * np.arange(count) / count
        else:
            vals = np.linspace(-extent / 2, extent / 2, count) if count > 1 else np.zeros(1)
        name = {"x": "posX", "y": "posY", "rotation": "orientation"}[kind]
        factors.append(Factor(name, vals))
        offsets.append(kind)
    if len(set(offsets)) != len(offsets):
        raise ConfigurationError("each action kind may appear once")
    spec = FactorSpec(tuple(factors))
    c = (canvas - 1) / 2
    size = RECT_SIZE if shape == "rectangle" else (RECT_SIZE[0], RECT_SIZE[0])
    labels = spec.grid()
    shapes = []
    for row in labels:
        cx, cy, theta = c, c, 0.0
        for k, kind in enumerate(offsets):
            v = spec.factors[k].values[row[k]]
            if kind == "x":
                cx += v
            elif kind == "y":
                cy += v
            else:
                theta = v
        shapes.append(ShapeSpec(shape, *size, orientation=theta, center=(cx, cy)))
    return _build(shapes, labels, spec, canvas, actions=list(actions))


def named_dataset(name: str) -> ImageDataset:
    """The orientation-study baselines by name: ``A1``, ``A2`` or ``A3``."""
    table = {
        "A1": (0.0, "cartesian"),
        "A2": (0.0, "polar"),
        "A3": (math.pi / 4, "cartesian"),
    }
    try:
        theta, coords = table[name.upper()]
    except KeyError:
        raise ConfigurationError(f"unknown dataset {name!r}; expected A1, A2 or A3") from None
    ds = gen_translation_dataset(theta, coords)
    ds.meta["name"] = name.upper()
    return ds
