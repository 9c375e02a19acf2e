"""Latent-space inspection: active units, traversals, projections and axis alignment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..datasets import ImageDataset
from ..nn_core import GaussianPosterior

__all__ = [
    "AlignmentFit",
    "Projection",
    "active_units",
    "axis_alignment",
    "best_fit_frame",
    "frame_distance",
    "latent_projection",
    "latent_traversal",
]


def active_units(model, dataset: ImageDataset, eps: float = 0.01) -> list[int]:
    """Dimensions whose dataset-mean KL exceeds ``eps`` nats."""
    from ..nn_core import kl_divergence
    from ..training import posterior_means

    mu, logvar = posterior_means(model, dataset)
    per_dim = kl_divergence(GaussianPosterior(mu, logvar))[0].mean(axis=0)
    return [int(j) for j in np.flatnonzero(per_dim > eps)]


def latent_traversal(model, anchor, dim: int, steps: int = 7, span: float = 3.0, labels=None) -> np.ndarray:
    """Decode the anchor's posterior mean with entry ``dim`` offset over ``[-span, span]``.

    Offsets are relative to the posterior mean, so with an odd number of
    steps the middle frame is the plain reconstruction.  Returns
    ``(steps, H, W)`` pixel means.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    d = model.latent_dim
    if not 0 <= dim < d:
        raise IndexError(f"latent dim {dim} out of range [0, {d})")
    post: GaussianPosterior = model.encode(np.asarray(anchor, dtype=np.float64))
    z = np.repeat(post.mean[None], steps, axis=0)
    z[:, dim] += np.linspace(-span, span, steps)
    if labels is not None:
        labels = np.repeat(np.asarray(labels, dtype=np.float64)[None], steps, axis=0)
    return model.decode(z, labels)


@dataclass(frozen=True)
class Projection:
    """Posterior means on two latent dims with factor labels.

    ``lines[name]`` holds one index array per combination of the other
    factors, ordered by the named factor's value.
    """

    points: np.ndarray  # (N, 2)
    labels: np.ndarray  # (N, K)
    factor_names: tuple[str, ...]
    dims: tuple[int, int]
    lines: dict

    def rows(self):
        for p, lab in zip(self.points, self.labels):
            yield (float(p[0]), float(p[1]), *(int(v) for v in lab))


def _polylines(labels: np.ndarray, k: int) -> list[np.ndarray]:
    others = np.delete(labels, k, axis=1)
    keys = {}
    for row, key in enumerate(map(tuple, others)):
        keys.setdefault(key, []).append(row)
    out = []
    for key in sorted(keys):
        rows = np.asarray(keys[key])
        if len(rows) >= 2:
            out.append(rows[np.argsort(labels[rows, k], kind="stable")])
    return out


def latent_projection(model, dataset: ImageDataset, dims: tuple[int, int]) -> Projection:
    from ..training import posterior_means

    i, j = dims
    d = model.latent_dim
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise ValueError(f"need two distinct dims in [0, {d}), got {dims}")
    means, _ = posterior_means(model, dataset)
    lines = {name: _polylines(dataset.labels, k) for k, name in enumerate(dataset.spec.names)}
    return Projection(means[:, [i, j]], dataset.labels.copy(), tuple(dataset.spec.names), (i, j), lines)


def _r2(y: np.ndarray, t: np.ndarray) -> float:
    """R^2 of a least-squares line of ``y`` on ``t`` (0 when either is constant)."""
    sy, st = y.std(), t.std()
    if sy == 0 or st == 0:
        return 0.0
    r = np.mean((y - y.mean()) * (t - t.mean())) / (sy * st)
    return float(min(r * r, 1.0))


@dataclass(frozen=True)
class AlignmentFit:
    r2: tuple[float, float]  # for the (u, v) axes in assignment order
    assignment: tuple[int, int]  # latent column regressed on u, then on v

    @property
    def score(self) -> float:
        return 0.5 * (self.r2[0] + self.r2[1])


def axis_alignment(codes, positions, theta: float) -> AlignmentFit:
    """How well two latent columns track positions in a frame rotated by ``theta``.

    ``u = x cos t + y sin t`` and ``v = -x sin t + y cos t``.  Each latent is
    regressed on one rotated axis; both assignments are tried and the
    better one is kept.
    """
    codes = np.asarray(codes, dtype=np.float64)
    pos = np.asarray(positions, dtype=np.float64)
    if codes.ndim != 2 or codes.shape[1] != 2 or pos.shape != codes.shape:
        raise ValueError("codes and positions must both be (N, 2)")
    c, s = math.cos(theta), math.sin(theta)
    u = pos[:, 0] * c + pos[:, 1] * s
    v = -pos[:, 0] * s + pos[:, 1] * c
    a = (_r2(codes[:, 0], u), _r2(codes[:, 1], v))
    b = (_r2(codes[:, 1], u), _r2(codes[:, 0], v))
    if sum(b) > sum(a):
        return AlignmentFit(b, (1, 0))
    return AlignmentFit(a, (0, 1))


def best_fit_frame(codes, positions, step_deg: float = 0.5) -> tuple[float, AlignmentFit]:
    """Frame angle in degrees, within ``[0, 90)``, maximizing the mean R^2."""
    best = None
    for deg in np.arange(0.0, 90.0, step_deg):
        fit = axis_alignment(codes, positions, math.radians(deg))
        if best is None or fit.score > best[1].score + 1e-12:
            best = (float(deg), fit)
    return best


def frame_distance(a_deg: float, b_deg: float) -> float:
    """Angular distance between two axis frames (frames repeat every 90 degrees)."""
    d = (a_deg - b_deg) % 90.0
    return min(d, 90.0 - d)
