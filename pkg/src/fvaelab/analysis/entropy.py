"""Information content of an action sequence."""

from __future__ import annotations

import numpy as np

__all__ = ["binary_entropy", "sequence_entropy"]


def binary_entropy(p) -> np.ndarray:
    """Entropy in nats of Bernoulli(p), with h(0) = h(1) = 0."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    inside = (p > 0) & (p < 1)
    q = p[inside]
    out[inside] = -(q * np.log(q) + (1 - q) * np.log1p(-q))
    return out


def sequence_entropy(seq) -> float:
    """Sum over pixels of the binary entropy of each pixel's lit-frame frequency.

    Accepts an :class:`ActionSequence` or an ``(N, H, W)`` array of binary
    frames.  Depends only on per-pixel frequencies, so it ignores frame order.
    """
    frames = np.asarray(getattr(seq, "images", seq), dtype=np.float64)
    if frames.ndim != 3 or len(frames) == 0:
        raise ValueError("need a non-empty (N, H, W) stack of frames")
    return float(binary_entropy(frames.mean(axis=0)).sum())
