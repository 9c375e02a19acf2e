"""Latent-information thresholds: beta sweeps, threshold estimates and the annealing test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..datasets import ImageDataset
from ..nn_core import ArchitectureConfig
from ..objectives import ObjectiveConfig
from ..training import TrainConfig, TrainingError, VaeTrainer, evaluate
from ._jobs import map_jobs

__all__ = [
    "AnnealingTrace",
    "SweepPoint",
    "SweepResult",
    "Threshold",
    "ThresholdReport",
    "annealing_test",
    "beta_sweep",
    "detect_critical_points",
    "estimate_threshold",
    "geometric_schedule",
]

DEFAULT_EPS_INFO = 0.1
DEFAULT_JUMP = 0.5


@dataclass(frozen=True)
class SweepPoint:
    beta: float
    kl: float
    recon_ll: float


@dataclass
class SweepResult:
    """Seed-averaged final KL per beta, plus the per-seed runs behind it."""

    points: list
    runs: dict = field(default_factory=dict)  # (beta, seed) -> (kl, recon_ll)

    def __post_init__(self):
        betas = [p.beta for p in self.points]
        if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ValueError("sweep betas must be strictly increasing")

    @property
    def betas(self) -> list[float]:
        return [p.beta for p in self.points]

    @property
    def kls(self) -> list[float]:
        return [p.kl for p in self.points]

    @property
    def seeds(self) -> list[int]:
        return sorted({s for _, s in self.runs})

    def for_seed(self, seed: int) -> "SweepResult":
        pts = [SweepPoint(b, *self.runs[(b, seed)]) for b in self.betas]
        return SweepResult(pts, {(b, seed): self.runs[(b, seed)] for b in self.betas})

    def rows(self):
        """``(beta, seed, kl, recon_ll)`` for CSV output."""
        for b in self.betas:
            for s in self.seeds:
                kl, rec = self.runs[(b, s)]
                yield b, s, kl, rec


def _sweep_job(dataset, arch, config, beta, seed):
    try:
        trainer = VaeTrainer(dataset, arch, config.with_beta(beta), seed)
        trainer.run(config.steps)
    except TrainingError as exc:
        raise TrainingError(f"beta={beta:g}, seed={seed}: {exc}") from exc
    ev = evaluate(trainer.model, dataset, config.label_target)
    return ev["kl_total"], ev["recon_ll"]


def beta_sweep(dataset: ImageDataset, betas, arch: ArchitectureConfig, config: TrainConfig,
               seeds, jobs: int = 1) -> SweepResult:
    """Train a fresh beta-VAE per (beta, seed); record the final dataset-mean KL.

    With ``config.label_target`` set, the decoder also receives the other
    factors' labels, so the KL measures the target factor alone.
    """
    betas = [float(b) for b in betas]
    seeds = [int(s) for s in seeds]
    if not betas:
        raise ValueError("beta grid must be non-empty")
    if len(set(betas)) != len(betas):
        raise ValueError(f"duplicate beta values in {betas}")
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta grid must be increasing")
    if not seeds:
        raise ValueError("need at least one seed")
    items = [(dataset, arch, config, b, s) for b in betas for s in seeds]
    results = map_jobs(_sweep_job, items, jobs)
    runs = {(b, s): r for (_, _, _, b, s), r in zip(items, results)}
    points = [
        SweepPoint(b, float(np.mean([runs[(b, s)][0] for s in seeds])),
                   float(np.mean([runs[(b, s)][1] for s in seeds])))
        for b in betas
    ]
    return SweepResult(points, runs)


@dataclass(frozen=True)
class Threshold:
    """``status`` is ``within``, ``above`` (every grid point still learns) or ``below``."""

    value: float | None
    status: str
    eps_info: float
    grid: tuple[float, ...]

    def __str__(self) -> str:
        if self.status == "above":
            return f"{self.grid[-1]:g}+"
        if self.status == "below":
            return f"<{self.grid[0]:g}"
        return f"{self.value:g}"

    @property
    def sort_key(self) -> float:
        """Comparable magnitude: ``inf`` above the grid, ``-inf`` below it."""
        if self.status == "above":
            return math.inf
        if self.status == "below":
            return -math.inf
        return float(self.value)


def estimate_threshold(sweep: SweepResult, eps_info: float = DEFAULT_EPS_INFO) -> Threshold:
    """Largest grid beta whose KL is still at least ``eps_info`` nats."""
    if len(sweep.points) < 2:
        raise ValueError("threshold estimation needs at least two sweep points")
    grid = tuple(sweep.betas)
    learned = [p.beta for p in sweep.points if p.kl >= eps_info]
    if not learned:
        return Threshold(None, "below", eps_info, grid)
    if len(learned) == len(grid):
        return Threshold(grid[-1], "above", eps_info, grid)
    return Threshold(max(learned), "within", eps_info, grid)


@dataclass
class ThresholdReport:
    entries: dict  # action name -> Threshold

    def rows(self):
        for name, th in self.entries.items():
            yield name, str(th), th.eps_info, " ".join(f"{b:g}" for b in th.grid)


# -- annealing test ----------------------------------------------------------

def geometric_schedule(high: float = 120.0, low: float = 1.0, levels: int = 12) -> list[float]:
    if levels < 2 or not high > low > 0:
        raise ValueError("need levels >= 2 and high > low > 0")
    return [float(b) for b in np.geomspace(high, low, levels)]


@dataclass
class AnnealingTrace:
    steps: list = field(default_factory=list)  # (iteration, beta, batch KL)
    levels: list = field(default_factory=list)  # (beta, dataset KL at level end)
    critical_points: list = field(default_factory=list)  # (beta, KL jump)


def detect_critical_points(levels, delta: float = DEFAULT_JUMP) -> list[tuple[float, float]]:
    """Levels where beta decreased and the KL rose by at least ``delta`` nats."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    found = []
    for (b0, k0), (b1, k1) in zip(levels, levels[1:]):
        if b1 < b0 and k1 - k0 >= delta:
            found.append((b1, k1 - k0))
    return found


def annealing_test(dataset: ImageDataset, betas, steps_per_level: int, arch: ArchitectureConfig,
                   config: TrainConfig, seed: int, delta: float = DEFAULT_JUMP) -> AnnealingTrace:
    """One continuous run stepping beta from high to low, holding each level."""
    betas = [float(b) for b in betas]
    if any(b2 > b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("annealing schedule must be non-increasing")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if steps_per_level < 1:
        raise ValueError("steps_per_level must be >= 1")
    trainer = VaeTrainer(dataset, arch, config, seed)
    out = AnnealingTrace()
    for i, beta in enumerate(betas):
        objective = ObjectiveConfig(kind="beta_vae", beta=beta)
        start = trainer.step
        try:
            trainer.run(steps_per_level, objective)
        except TrainingError as exc:
            raise TrainingError(f"annealing level {i} (beta={beta:g}): {exc}") from exc
        for it in range(start, trainer.step):
            out.steps.append((it, beta, trainer.trace.kl_total[it]))
        out.levels.append((beta, evaluate(trainer.model, dataset, config.label_target)["kl_total"]))
    out.critical_points = detect_critical_points(out.levels, delta)
    return out
