"""Action sequences: one factor traversed in order with the others held fixed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ImageDataset

__all__ = ["ActionSequence", "extract_action", "sequence_dataset"]


@dataclass(frozen=True, eq=False)
class ActionSequence:
    images: np.ndarray
    varying_factor: str
    fixed_labels: dict
    parameter_values: tuple[float, ...]

    def __len__(self) -> int:
        return self.images.shape[0]


def extract_action(dataset: ImageDataset, varying: str, fixed=None) -> ActionSequence:
    """Traverse ``varying`` with every other factor pinned.

    ``fixed`` maps factor name to value index; omitted factors default to
    index 0.  A positional sequence of indices (one per non-varying factor,
    in spec order) is accepted too.
    """
    spec = dataset.spec
    k = spec.index(varying)
    others = [n for n in spec.names if n != varying]
    if fixed is None:
        fixed = {}
    elif not isinstance(fixed, dict):
        fixed = list(fixed)
        if len(fixed) != len(others):
            raise ValueError(f"expected {len(others)} fixed indices for {others}, got {len(fixed)}")
        fixed = dict(zip(others, fixed))
    unknown = set(fixed) - set(others)
    if unknown:
        raise KeyError(f"unknown or varying factor(s) in fixed: {sorted(unknown)}")
    pinned = {}
    for name in others:
        idx = int(fixed.get(name, 0))
        if not 0 <= idx < len(spec[name]):
            raise IndexError(f"index {idx} out of range for factor {name!r} ({len(spec[name])} values)")
        pinned[name] = idx

    mask = np.ones(len(dataset), dtype=bool)
    for name, idx in pinned.items():
        mask &= dataset.labels[:, spec.index(name)] == idx
    rows = np.flatnonzero(mask)
    rows = rows[np.argsort(dataset.labels[rows, k], kind="stable")]
    if len(rows) != len(spec.factors[k]):
        raise ValueError(
            f"dataset is not a full grid along {varying!r}: found {len(rows)} of {len(spec.factors[k])} frames"
        )
    images = dataset.images[rows]
    return ActionSequence(images, varying, pinned, spec.factors[k].values)


def sequence_dataset(seq: ActionSequence) -> ImageDataset:
    """Package a sequence as a single-factor dataset."""
    from .core import Factor, FactorSpec

    spec = FactorSpec((Factor(seq.varying_factor, seq.parameter_values),))
    labels = np.arange(len(seq)).reshape(-1, 1)
    return ImageDataset(seq.images, labels, spec)
