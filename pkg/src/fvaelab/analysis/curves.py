"""Reconstruction-loss learning curves for competing action sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..datasets import ActionSequence, ImageDataset, sequence_dataset
from ..nn_core import ArchitectureConfig
from ..training import TrainConfig, TrainingError, train_vae
from ._jobs import map_jobs

__all__ = ["CurveSet", "iterations_to_reach", "learning_curve_compare", "reach_table", "reference_level"]


@dataclass
class CurveSet:
    """``curves[name][seed]`` is the per-step reconstruction loss (-recon_ll)."""

    curves: dict

    @property
    def names(self) -> list[str]:
        return list(self.curves)

    def mean(self, name: str) -> np.ndarray:
        return np.mean([c for c in self.curves[name].values()], axis=0)

    def rows(self):
        for name, per_seed in self.curves.items():
            for seed, curve in per_seed.items():
                for it, loss in enumerate(curve):
                    yield name, seed, it, float(loss)


def iterations_to_reach(curve, level: float) -> int | None:
    """First iteration whose loss is at or below ``level`` (None if never)."""
    hit = np.flatnonzero(np.asarray(curve) <= level)
    return int(hit[0]) if hit.size else None


def reference_level(curve, fraction: float = 0.6) -> float:
    """Loss of ``curve`` at ``fraction`` of its budget."""
    curve = np.asarray(curve)
    if len(curve) == 0:
        raise ValueError("empty curve")
    return float(curve[max(int(round(fraction * len(curve))) - 1, 0)])


def reach_table(curves: CurveSet, reference: str, fraction: float = 0.6) -> dict:
    """Per name and seed, iterations to reach the reference run's loss at ``fraction`` of budget.

    The level is taken per seed from ``curves[reference][seed]``.
    """
    out = {}
    for name, per_seed in curves.curves.items():
        out[name] = {}
        for seed, curve in per_seed.items():
            level = reference_level(curves.curves[reference][seed], fraction)
            out[name][seed] = iterations_to_reach(curve, level)
    return out


def _curve_job(name, dataset, arch, config, seed):
    try:
        _, trace = train_vae(dataset, arch, config, seed)
    except TrainingError as exc:
        raise TrainingError(f"sequence {name!r}, seed={seed}: {exc}") from exc
    return -np.asarray(trace.recon_ll)


def learning_curve_compare(sequences, arch: ArchitectureConfig, config: TrainConfig, seeds,
                           jobs: int = 1) -> CurveSet:
    """Train the same model and config on each named sequence; collect loss curves.

    ``sequences`` is a mapping or list of ``(name, ActionSequence | ImageDataset)``.
    """
    if config.steps < 1:
        raise ValueError("step budget must be >= 1")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    pairs = list(sequences.items()) if isinstance(sequences, dict) else list(sequences)
    names = [n for n, _ in pairs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate sequence names in {names}")
    items = []
    for name, seq in pairs:
        ds = sequence_dataset(seq) if isinstance(seq, ActionSequence) else seq
        if not isinstance(ds, ImageDataset):
            raise TypeError(f"{name!r}: expected an ActionSequence or ImageDataset")
        items.extend((name, ds, arch, config, s) for s in seeds)
    results = map_jobs(_curve_job, items, jobs)
    curves = {n: {} for n in names}
    for (name, _, _, _, seed), curve in zip(items, results):
        curves[name][seed] = curve
    return CurveSet(curves)
