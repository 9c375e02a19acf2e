"""Dataset containers: factor specifications and labelled binary image sets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigurationError",
    "Factor",
    "FactorSpec",
    "ImageDataset",
    "PlacementError",
]


class ConfigurationError(ValueError):
    """Raised when generator parameters cannot produce a valid dataset."""


class PlacementError(ValueError):
    """Raised when a shape would extend past the canvas."""


@dataclass(frozen=True)
class Factor:
    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.name:
            raise ConfigurationError("factor name must be non-empty")
        if len(self.values) < 1:
            raise ConfigurationError(f"factor {self.name!r} has no values")
        # categorical factors use their indices 0..k-1 as values, so this holds too
        if len(self.values) > 1 and not np.all(np.diff(np.asarray(self.values)) > 0):
            raise ConfigurationError(f"values of factor {self.name!r} must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FactorSpec:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate factor names in {names}")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.factors)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown factor {name!r}; known: {self.names}") from None

    def __getitem__(self, name: str) -> Factor:
        return self.factors[self.index(name)]

    def __len__(self) -> int:
        return len(self.factors)

    def grid(self) -> np.ndarray:
        """All label vectors of the full factor product, first factor slowest."""
        if not self.factors:
            return np.zeros((0, 0), dtype=np.int64)
        ranges = [range(len(f)) for f in self.factors]
        return np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(
            -1, len(self.factors)
        )


@dataclass(frozen=True, eq=False)
class ImageDataset:
    """Binary images with per-image factor-index labels.

    ``images`` is stored as uint8 with values in {0, 1}; use :meth:`as_float`
    for training.  Instances are treated as immutable.
    """

    images: np.ndarray
    labels: np.ndarray
    spec: FactorSpec
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        images = np.ascontiguousarray(self.images, dtype=np.uint8)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if images.ndim != 3:
            raise ConfigurationError(f"images must be N x H x W, got shape {images.shape}")
        if labels.shape != (images.shape[0], len(self.spec)):
            raise ConfigurationError(
                f"labels shape {labels.shape} does not match "
                f"({images.shape[0]}, {len(self.spec)})"
            )
        if images.size and images.max() > 1:
            raise ConfigurationError("pixel values must lie in {0, 1}")
        card = np.asarray(self.spec.cardinalities, dtype=np.int64)
        if labels.size and (labels.min() < 0 or np.any(labels >= card)):
            raise ConfigurationError("label index out of range for its factor")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.images.shape[1]

    @property
    def width(self) -> int:
        return self.images.shape[2]

    def __len__(self) -> int:
        return self.images.shape[0]

    def as_float(self) -> np.ndarray:
        return self.images.astype(np.float64)

    def factor_values(self, name: str) -> np.ndarray:
        """Per-image value of factor ``name``."""
        k = self.spec.index(name)
        return np.asarray(self.spec.factors[k].values)[self.labels[:, k]]

    def lookup(self, label) -> int:
        """Row index of the image with the given full label vector."""
        hits = np.flatnonzero(np.all(self.labels == np.asarray(label), axis=1))
        if hits.size == 0:
            raise KeyError(f"no image with label {tuple(label)}")
        return int(hits[0])

    def subset(self, rows) -> "ImageDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return ImageDataset(self.images[rows], self.labels[rows], self.spec, dict(self.meta))
