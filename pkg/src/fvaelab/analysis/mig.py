"""Mutual information gap with equal-width binning of latent means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..datasets import ImageDataset

__all__ = ["FactorGap", "MigReport", "discrete_entropy", "discrete_mutual_info", "discretize", "mig",
           "mig_from_codes"]


@dataclass(frozen=True)
class FactorGap:
    factor: str
    mi_top: float
    mi_second: float
    entropy: float
    gap: float
    top_dim: int


@dataclass(frozen=True)
class MigReport:
    score: float
    factors: tuple[FactorGap, ...]
    bins: int

    def rows(self):
        for f in self.factors:
            yield f.factor, f.mi_top, f.mi_second, f.entropy, f.gap


def discretize(codes: np.ndarray, bins: int) -> np.ndarray:
    """Per-column equal-width bin index over the observed range (constant columns -> 0)."""
    codes = np.asarray(codes, dtype=np.float64)
    lo, hi = codes.min(axis=0), codes.max(axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    idx = np.floor((codes - lo) / safe * bins).astype(np.int64)
    idx = np.clip(idx, 0, bins - 1)
    idx[:, span <= 0] = 0
    return idx


def discrete_entropy(v: np.ndarray) -> float:
    counts = np.bincount(v)
    p = counts[counts > 0] / len(v)
    return float(-(p * np.log(p)).sum())


def discrete_mutual_info(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in MI in nats between two non-negative integer arrays."""
    n = len(a)
    kb = int(b.max()) + 1
    joint = np.bincount(a * kb + b).astype(np.float64)
    nz = np.flatnonzero(joint)
    pa = np.bincount(a).astype(np.float64) / n
    pb = np.bincount(b, minlength=kb).astype(np.float64) / n
    pj = joint[nz] / n
    return float(max((pj * np.log(pj / (pa[nz // kb] * pb[nz % kb]))).sum(), 0.0))


def mig_from_codes(codes, labels, bins: int = 20, factor_names=None) -> MigReport:
    """MIG of latent ``codes`` (N, d) against integer factor ``labels`` (N, K).

    Factors with a single value have zero entropy and are left out of the
    mean.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    codes = np.asarray(codes, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if codes.ndim != 2 or labels.ndim != 2 or len(codes) != len(labels):
        raise ValueError("codes and labels must be (N, d) and (N, K) with equal N")
    names = factor_names or [f"factor{k}" for k in range(labels.shape[1])]
    disc = discretize(codes, bins)
    gaps, rows = [], []
    for k in range(labels.shape[1]):
        v = labels[:, k]
        h = discrete_entropy(v)
        mis = np.array([discrete_mutual_info(disc[:, j], v) for j in range(codes.shape[1])])
        order = np.argsort(-mis, kind="stable")
        top = mis[order[0]]
        second = mis[order[1]] if len(mis) > 1 else 0.0
        gap = (top - second) / h if h > 0 else 0.0
        rows.append(FactorGap(names[k], float(top), float(second), h, float(gap), int(order[0])))
        if h > 0:
            gaps.append(gap)
    score = float(np.mean(gaps)) if gaps else 0.0
    return MigReport(score, tuple(rows), bins)


def mig(model, dataset: ImageDataset, bins: int = 20, n_samples: int | None = None,
        seed: int = 0) -> MigReport:
    """MIG of ``model``'s posterior means over ``dataset`` (or a seeded subsample)."""
    from ..rng import stream
    from ..training import posterior_means

    ds = dataset
    if n_samples is not None and n_samples < len(dataset):
        rows = np.sort(stream(seed, "mig-subsample").choice(len(dataset), n_samples, replace=False))
        ds = dataset.subset(rows)
    means, _ = posterior_means(model, ds)
    return mig_from_codes(means, ds.labels, bins, ds.spec.names)
