"""Minibatch training loop for single-encoder VAEs and dataset-level evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .datasets import ImageDataset
from .nn_core import autodiff as ad
from .nn_core import AdamState, ArchitectureConfig, NonFiniteGradientError, VaeModel, adam_step
from .nn_core.networks import decoder_forward, encoder_forward
from .objectives import ObjectiveConfig, objective_loss

__all__ = [
    "BatchSampler",
    "TrainConfig",
    "TrainingError",
    "TrainingTrace",
    "VaeTrainer",
    "evaluate",
    "train_vae",
    "vae_batch_loss",
]


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 30000
    batch_size: int = 64
    lr: float = 5e-4
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    label_target: str | None = None

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")

    def with_beta(self, beta: float) -> "TrainConfig":
        return replace(self, objective=replace(self.objective, beta=beta))


@dataclass
class TrainingTrace:
    """Per-step records; KL values are batch means in nats."""

    loss: list = field(default_factory=list)
    recon_ll: list = field(default_factory=list)
    kl_total: list = field(default_factory=list)
    kl_per_dim: list = field(default_factory=list)
    beta: list = field(default_factory=list)

    def append(self, loss, recon_ll, kl_total, kl_per_dim, beta):
        self.loss.append(float(loss))
        self.recon_ll.append(float(recon_ll))
        self.kl_total.append(float(kl_total))
        self.kl_per_dim.append(np.asarray(kl_per_dim, dtype=np.float64))
        self.beta.append(float(beta))

    def __len__(self) -> int:
        return len(self.loss)

    def arrays(self) -> dict:
        return {
            "loss": np.asarray(self.loss),
            "recon_ll": np.asarray(self.recon_ll),
            "kl_total": np.asarray(self.kl_total),
            "kl_per_dim": np.asarray(self.kl_per_dim),
            "beta": np.asarray(self.beta),
        }


class BatchSampler:
    """Epoch-wise shuffled minibatches; the whole dataset when it fits one batch."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        if n < 1:
            raise TrainingError("dataset is empty")
        self.n, self.batch_size, self.rng = n, batch_size, rng
        self.queue = np.zeros(0, dtype=np.int64)

    def next(self) -> np.ndarray:
        if self.n <= self.batch_size:
            return np.arange(self.n)
        if len(self.queue) < self.batch_size:
            self.queue = np.concatenate([self.queue, self.rng.permutation(self.n)])
        rows, self.queue = self.queue[: self.batch_size], self.queue[self.batch_size :]
        return rows


def condition_matrix(dataset: ImageDataset, label_target: str | None) -> np.ndarray | None:
    if label_target is None:
        return None
    from .fvae import LabelMixConfig, mix_labels

    cfg = LabelMixConfig.for_dataset(dataset.spec, label_target)
    return np.stack([mix_labels(row, cfg) for row in dataset.labels])


def vae_batch_loss(tape: ad.Tape, model: VaeModel, x: np.ndarray, noise: np.ndarray,
                   objective: ObjectiveConfig, step: int = 0, cond: np.ndarray | None = None):
    """Record one minibatch loss on ``tape``.

    Returns ``(loss, recon_ll_mean, kl_mean, kl_per_dim_mean)`` as nodes.
    """
    mu, logvar = encoder_forward(tape, model.arch, x, "encoder")
    z = ad.reparameterize(mu, logvar, noise)
    if cond is not None and cond.shape[1]:
        z = ad.concat([z, tape.const(cond)], axis=1)
    logits = decoder_forward(tape, model.arch, z, "decoder")
    recon = ad.bernoulli_log_likelihood(logits, x).mean()
    kl_dims = ad.gaussian_kl(mu, logvar).mean(axis=0)
    kl = kl_dims.sum()
    return objective_loss(objective, recon, kl, step), recon, kl, kl_dims


class VaeTrainer:
    """Stateful training of one model; :meth:`run` may be called repeatedly.

    Random streams: ``init`` (parameters), ``batch`` (minibatch order) and
    ``noise`` (reparameterization), all derived from ``seed``.
    """

    def __init__(self, dataset: ImageDataset, arch: ArchitectureConfig, config: TrainConfig,
                 seed: int, model: VaeModel | None = None):
        self.dataset = dataset
        self.config = config
        self.seed = seed
        self.x = dataset.as_float()
        self.cond = condition_matrix(dataset, config.label_target)
        cond_dim = 0 if self.cond is None else self.cond.shape[1]
        if model is None:
            model = VaeModel.init(arch, rngmod.stream(seed, "init"), cond_dim=cond_dim)
        elif model.cond_dim != cond_dim:
            raise ValueError(f"model expects {model.cond_dim} label entries, dataset gives {cond_dim}")
        self.model = model
        self.state = AdamState()
        self.sampler = BatchSampler(len(dataset), config.batch_size, rngmod.stream(seed, "batch"))
        self.noise_rng = rngmod.stream(seed, "noise")
        self.step = 0
        self.trace = TrainingTrace()

    def run(self, steps: int, objective: ObjectiveConfig | None = None) -> TrainingTrace:
        objective = objective or self.config.objective
        d = self.model.latent_dim
        for _ in range(steps):
            rows = self.sampler.next()
            x = self.x[rows]
            noise = self.noise_rng.standard_normal((len(rows), d))
            cond = None if self.cond is None else self.cond[rows]
            tape = ad.Tape(self.model.params)
            loss, recon, kl, kl_dims = vae_batch_loss(tape, self.model, x, noise, objective, self.step, cond)
            if not np.isfinite(loss.value):
                raise TrainingError(f"non-finite loss at step {self.step}")
            grads = ad.backward(tape, loss)
            try:
                adam_step(self.model.params, grads, self.state, self.config.lr, iteration=self.step)
            except NonFiniteGradientError as exc:
                raise TrainingError(str(exc)) from exc
            self.trace.append(loss.value, recon.value, kl.value, kl_dims.value, objective.beta)
            self.step += 1
        return self.trace


def train_vae(dataset: ImageDataset, arch: ArchitectureConfig, config: TrainConfig,
              seed: int) -> tuple[VaeModel, TrainingTrace]:
    trainer = VaeTrainer(dataset, arch, config, seed)
    trainer.run(config.steps)
    return trainer.model, trainer.trace


def posterior_means(model, dataset: ImageDataset, batch: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and log-variances for every image, in dataset order."""
    mus, lvs = [], []
    x = dataset.as_float()
    for start in range(0, len(dataset), batch):
        post = model.encode(x[start : start + batch])
        mus.append(post.mean)
        lvs.append(post.logvar)
    return np.concatenate(mus), np.concatenate(lvs)


def evaluate(model: VaeModel, dataset: ImageDataset, label_target: str | None = None,
             batch: int = 256) -> dict:
    """Dataset-mean KL (total and per dimension) and reconstruction at ``z = mu``."""
    from .nn_core import decode_logits

    cond = condition_matrix(dataset, label_target)
    x = dataset.as_float()
    kl_dims = np.zeros(model.latent_dim)
    recon = 0.0
    for start in range(0, len(dataset), batch):
        xb = x[start : start + batch]
        tape = ad.Tape(model.params)
        mu, logvar = encoder_forward(tape, model.arch, xb, "encoder")
        kl_dims += ad.gaussian_kl(mu, logvar).value.sum(axis=0)
        cb = None if cond is None else cond[start : start + batch]
        logits = decode_logits(model, mu.value, cb)
        lv = logits
        recon += float((xb * lv - (np.maximum(lv, 0) + np.log1p(np.exp(-np.abs(lv))))).sum())
    n = len(dataset)
    kl_dims /= n
    return {"kl_total": float(kl_dims.sum()), "kl_per_dim": kl_dims, "recon_ll": recon / n}
