"""Fractional VAE: grouped sub-encoders trained phase by phase.

In phase ``p`` (1-based) groups ``1..p`` are encoded and reparameterized;
later groups are never evaluated and feed fresh standard-normal draws to the
shared decoder instead.  Each group's encoder has its own learning rate per
phase, so groups learned earlier keep adapting only slowly (or not at all).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .datasets import FactorSpec, ImageDataset
from .nn_core import autodiff as ad
from .nn_core import AdamState, ArchitectureConfig, GaussianPosterior, NonFiniteGradientError, adam_step
from .nn_core.networks import decoder_forward, encoder_forward, init_decoder, init_encoder
from .training import BatchSampler, TrainingError, TrainingTrace, condition_matrix

__all__ = [
    "FvaeModel",
    "FvaeTrainer",
    "LabelMixConfig",
    "Phase",
    "PhaseSchedule",
    "PhaseTrace",
    "STAGE_BETAS",
    "fvae_forward",
    "fvae_loss",
    "fvae_train",
    "mix_labels",
]

# Per-phase KL weights of the three-stage schedules (dSprites, 3D Chairs).
STAGE_BETAS = {"dsprites": (100.0, 40.0, 4.0), "chairs": (60.0, 20.0, 2.0)}
ACTIVE_LR = 5e-4
LEARNED_LR = 5e-5


# -- mixed labels ------------------------------------------------------------

@dataclass(frozen=True)
class LabelMixConfig:
    """Which factors the decoder sees as one-hot labels.

    ``factors`` lists every ``(name, cardinality)`` in spec order; all but
    ``target_factor`` are provided.
    """

    target_factor: str
    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.factors]
        if self.target_factor not in names:
            raise KeyError(f"target factor {self.target_factor!r} not among {names}")

    @classmethod
    def for_dataset(cls, spec: FactorSpec, target: str) -> "LabelMixConfig":
        return cls(target, tuple((f.name, len(f)) for f in spec.factors))

    @property
    def provided(self) -> tuple[tuple[str, int], ...]:
        return tuple((n, k) for n, k in self.factors if n != self.target_factor)

    @property
    def width(self) -> int:
        return sum(k for _, k in self.provided)


def mix_labels(labels, config: LabelMixConfig) -> np.ndarray:
    """Concatenated one-hot blocks of the provided factors, target omitted.

    ``labels`` is either a mapping ``name -> index`` (the target may be
    absent) or a full index vector in spec order.
    """
    if not isinstance(labels, dict):
        vec = np.asarray(labels).ravel()
        if len(vec) != len(config.factors):
            raise ValueError(f"expected {len(config.factors)} labels, got {len(vec)}")
        labels = {name: vec[i] for i, (name, _) in enumerate(config.factors)}
    out = np.zeros(config.width)
    offset = 0
    for name, card in config.provided:
        if name not in labels:
            raise KeyError(f"missing label for provided factor {name!r}")
        idx = int(labels[name])
        if not 0 <= idx < card:
            raise IndexError(f"label {idx} out of range for factor {name!r}")
        out[offset + idx] = 1.0
        offset += card
    return out


# -- model -------------------------------------------------------------------

class FvaeModel:
    """Sub-encoders ``encoder0..`` with latent widths ``group_dims`` and one decoder."""

    def __init__(self, arch: ArchitectureConfig, group_dims, params: dict, cond_dim: int = 0):
        self.arch = arch
        self.group_dims = tuple(int(d) for d in group_dims)
        if not self.group_dims or min(self.group_dims) < 1:
            raise ValueError("need at least one group with latent dim >= 1")
        self.params = params
        self.cond_dim = cond_dim

    @classmethod
    def init(cls, arch: ArchitectureConfig, group_dims, rng: np.random.Generator,
             cond_dim: int = 0) -> "FvaeModel":
        group_dims = tuple(int(d) for d in group_dims)
        params: dict = {}
        for g, d in enumerate(group_dims):
            params.update(init_encoder(arch.replace(latent_dim=d), rng, f"encoder{g}"))
        params.update(init_decoder(arch, rng, sum(group_dims) + cond_dim, "decoder"))
        return cls(arch, group_dims, params, cond_dim)

    @property
    def n_groups(self) -> int:
        return len(self.group_dims)

    @property
    def latent_dim(self) -> int:
        return sum(self.group_dims)

    def group_arch(self, g: int) -> ArchitectureConfig:
        return self.arch.replace(latent_dim=self.group_dims[g])

    def group_of(self, name: str) -> int | None:
        """Encoder group owning parameter ``name``; None for the decoder."""
        head = name.split(".", 1)[0]
        return int(head[len("encoder"):]) if head.startswith("encoder") else None

    def copy(self) -> "FvaeModel":
        return FvaeModel(self.arch, self.group_dims, {k: v.copy() for k, v in self.params.items()},
                         self.cond_dim)

    def encode(self, images) -> GaussianPosterior:
        """Concatenated posterior of all groups (ignores phases)."""
        x = np.asarray(images, dtype=np.float64)
        single = x.ndim == 2
        if single:
            x = x[None]
        tape = ad.Tape(self.params)
        mus, lvs = [], []
        for g in range(self.n_groups):
            mu, lv = encoder_forward(tape, self.group_arch(g), x, f"encoder{g}")
            mus.append(mu.value)
            lvs.append(lv.value)
        mean, logvar = np.concatenate(mus, axis=1), np.concatenate(lvs, axis=1)
        return GaussianPosterior(mean[0], logvar[0]) if single else GaussianPosterior(mean, logvar)

    def decode(self, z, labels=None) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        if single:
            z = z[None]
            labels = None if labels is None else np.asarray(labels, dtype=np.float64)[None]
        if z.shape[1] != self.latent_dim:
            raise ValueError(f"code width {z.shape[1]} != {self.latent_dim}")
        if self.cond_dim:
            if labels is None or np.shape(labels)[-1] != self.cond_dim:
                raise ValueError(f"decoder expects {self.cond_dim} label entries")
            z = np.concatenate([z, labels], axis=1)
        tape = ad.Tape(self.params)
        logits = decoder_forward(tape, self.arch, tape.const(z), "decoder").value
        p = np.clip(0.5 * (1.0 + np.tanh(0.5 * logits)), 1e-12, 1.0 - 1e-12)
        return p[0] if single else p


def _check_phase(model: FvaeModel, phase: int) -> None:
    if not 1 <= phase <= model.n_groups:
        raise ValueError(f"phase {phase} outside 1..{model.n_groups}")


def _draw_noise(model: FvaeModel, batch: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.standard_normal((batch, d)) for d in model.group_dims]


def _record(tape: ad.Tape, model: FvaeModel, x: np.ndarray, phase: int, noise, cond):
    """Forward pass on ``tape``; returns (logits, group posteriors, group KL-per-dim nodes)."""
    codes, posts, kls = [], [], []
    for g in range(model.n_groups):
        if g < phase:
            mu, lv = encoder_forward(tape, model.group_arch(g), x, f"encoder{g}")
            codes.append(ad.reparameterize(mu, lv, noise[g]))
            posts.append(GaussianPosterior(mu.value, lv.value))
            kls.append(ad.gaussian_kl(mu, lv).mean(axis=0))
        else:
            codes.append(tape.const(noise[g]))
            posts.append(None)
            kls.append(None)
    if cond is not None:
        if cond.shape[1] != model.cond_dim:
            raise ValueError(f"label width {cond.shape[1]} != decoder label width {model.cond_dim}")
        if cond.shape[1]:
            codes.append(tape.const(cond))
    elif model.cond_dim:
        raise ValueError(f"decoder expects {model.cond_dim} label entries")
    z = ad.concat(codes, axis=1) if len(codes) > 1 else codes[0]
    logits = decoder_forward(tape, model.arch, z, "decoder")
    return logits, posts, kls


def fvae_forward(model: FvaeModel, images, phase: int, noise=None, labels=None):
    """Pixel means and per-group posteriors at ``phase``.

    ``noise`` is a generator or a list of per-group ``(B, d_g)`` arrays (a
    fixed stream when omitted); for groups after ``phase`` the draws are used
    as codes directly.  Posteriors of those groups are ``None``.
    """
    _check_phase(model, phase)
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if noise is None or isinstance(noise, np.random.Generator):
        noise = _draw_noise(model, len(x), noise if noise is not None else rngmod.stream(0, "forward-noise"))
    cond = None if labels is None else np.atleast_2d(np.asarray(labels, dtype=np.float64))
    tape = ad.Tape(model.params)
    logits, posts, _ = _record(tape, model, x, phase, noise, cond)
    p = np.clip(0.5 * (1.0 + np.tanh(0.5 * logits.value)), 1e-12, 1.0 - 1e-12)
    return p, posts


def fvae_loss(recon_ll, group_kls, phase: int, beta: float):
    """``-recon + beta * sum of KL over groups 1..phase``; later groups are ignored."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    total = 0.0
    for g in range(phase):
        total = group_kls[g] + total
    return -recon_ll + beta * total


# -- schedules ---------------------------------------------------------------

@dataclass(frozen=True)
class Phase:
    active: int
    beta: float
    encoder_lrs: tuple[float, ...]
    steps: int
    decoder_lr: float | None = None

    @property
    def dec_lr(self) -> float:
        return self.encoder_lrs[self.active - 1] if self.decoder_lr is None else self.decoder_lr


@dataclass(frozen=True)
class PhaseSchedule:
    phases: tuple[Phase, ...]

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ValueError("schedule needs at least one phase")
        n = len(self.phases[0].encoder_lrs)
        for i, ph in enumerate(self.phases, 1):
            if len(ph.encoder_lrs) != n:
                raise ValueError(f"phase {i}: expected {n} encoder rates")
            if not 1 <= ph.active <= n:
                raise ValueError(f"phase {i}: active group {ph.active} outside 1..{n}")
            if any(ph.encoder_lrs[g] != 0 for g in range(ph.active, n)):
                raise ValueError(f"phase {i}: groups after the active one must have rate 0")
            if ph.encoder_lrs[ph.active - 1] < max(ph.encoder_lrs):
                raise ValueError(f"phase {i}: the active group must have the largest rate")
            if ph.beta <= 0:
                raise ValueError(f"phase {i}: beta must be positive")
            if ph.steps < 0 or min(ph.encoder_lrs) < 0 or ph.dec_lr < 0:
                raise ValueError(f"phase {i}: steps and rates must be >= 0")

    @property
    def n_groups(self) -> int:
        return len(self.phases[0].encoder_lrs)

    @classmethod
    def staged(cls, betas, steps, active_lr: float = ACTIVE_LR, learned_lr: float = LEARNED_LR
               ) -> "PhaseSchedule":
        """One phase per group: the active group at ``active_lr``, earlier ones at ``learned_lr``."""
        betas = tuple(betas)
        n = len(betas)
        steps = (steps,) * n if np.isscalar(steps) else tuple(steps)
        phases = []
        for p in range(1, n + 1):
            lrs = tuple(learned_lr if g < p - 1 else active_lr if g == p - 1 else 0.0 for g in range(n))
            phases.append(Phase(p, float(betas[p - 1]), lrs, int(steps[p - 1])))
        return cls(tuple(phases))

    @classmethod
    def preset(cls, dataset: str = "dsprites", steps=1000) -> "PhaseSchedule":
        return cls.staged(STAGE_BETAS[dataset], steps)

    def to_text(self) -> str:
        """``beta:lr1,lr2,..:steps[:dec_lr]`` per phase, joined by ``;``."""
        parts = []
        for ph in self.phases:
            s = f"{ph.beta:g}:{','.join(f'{lr:g}' for lr in ph.encoder_lrs)}:{ph.steps}"
            if ph.decoder_lr is not None:
                s += f":{ph.decoder_lr:g}"
            parts.append(s)
        return ";".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "PhaseSchedule":
        phases = []
        for i, chunk in enumerate(filter(None, (c.strip() for c in text.split(";"))), 1):
            fields = chunk.split(":")
            if len(fields) not in (3, 4):
                raise ValueError(f"phase {i}: expected beta:lrs:steps[:dec_lr], got {chunk!r}")
            lrs = tuple(float(v) for v in fields[1].split(","))
            dec = float(fields[3]) if len(fields) == 4 else None
            phases.append(Phase(i, float(fields[0]), lrs, int(fields[2]), dec))
        return cls(tuple(phases))


# -- training ----------------------------------------------------------------

@dataclass
class PhaseTrace(TrainingTrace):
    phase: int = 0
    group_kl: list = field(default_factory=list)


class FvaeTrainer:
    """Runs a :class:`PhaseSchedule`; random streams match :class:`VaeTrainer`."""

    def __init__(self, dataset: ImageDataset, arch: ArchitectureConfig, group_dims, seed: int,
                 batch_size: int = 64, label_target: str | None = None,
                 model: FvaeModel | None = None):
        self.dataset = dataset
        self.x = dataset.as_float()
        self.cond = condition_matrix(dataset, label_target)
        cond_dim = 0 if self.cond is None else self.cond.shape[1]
        if model is None:
            model = FvaeModel.init(arch, group_dims, rngmod.stream(seed, "init"), cond_dim)
        self.model = model
        self.state = AdamState()
        self.sampler = BatchSampler(len(dataset), batch_size, rngmod.stream(seed, "batch"))
        self.noise_rng = rngmod.stream(seed, "noise")
        self.step = 0
        self.traces: list[PhaseTrace] = []

    def run_phase(self, phase: Phase) -> PhaseTrace:
        model = self.model
        p = phase.active
        _check_phase(model, p)
        if len(phase.encoder_lrs) != model.n_groups:
            raise ValueError(f"phase has {len(phase.encoder_lrs)} rates for {model.n_groups} groups")
        rates = {}
        for name in model.params:
            g = model.group_of(name)
            rates[name] = phase.dec_lr if g is None else phase.encoder_lrs[g]
        trace = PhaseTrace(phase=p)
        for _ in range(phase.steps):
            rows = self.sampler.next()
            x = self.x[rows]
            noise = _draw_noise(model, len(rows), self.noise_rng)
            cond = None if self.cond is None else self.cond[rows]
            tape = ad.Tape(model.params)
            logits, _, kls = _record(tape, model, x, p, noise, cond)
            recon = ad.bernoulli_log_likelihood(logits, x).mean()
            group_kl = [k.sum() for k in kls[:p]]
            loss = fvae_loss(recon, group_kl, p, phase.beta)
            if not np.isfinite(loss.value):
                raise TrainingError(f"non-finite loss in phase {p} at step {self.step}")
            grads = ad.backward(tape, loss)
            try:
                adam_step(model.params, grads, self.state, rates.__getitem__, iteration=self.step)
            except NonFiniteGradientError as exc:
                raise TrainingError(f"phase {p}: {exc}") from exc
            per_dim = np.concatenate(
                [k.value if k is not None else np.zeros(d) for k, d in zip(kls, model.group_dims)]
            )
            gkl = [float(k.value.sum()) if k is not None else 0.0 for k in kls]
            kl_total = sum(k.value for k in group_kl)
            trace.append(loss.value, recon.value, kl_total, per_dim, phase.beta)
            trace.group_kl.append(gkl)
            self.step += 1
        self.traces.append(trace)
        return trace

    def run(self, schedule: PhaseSchedule, on_phase_end=None) -> list[PhaseTrace]:
        if schedule.n_groups != self.model.n_groups:
            raise ValueError(f"schedule is for {schedule.n_groups} groups, model has {self.model.n_groups}")
        for i, phase in enumerate(schedule.phases, 1):
            self.run_phase(phase)
            if on_phase_end is not None:
                on_phase_end(i, self)
        return self.traces


def fvae_train(dataset: ImageDataset, arch: ArchitectureConfig, group_dims, schedule: PhaseSchedule,
               seed: int, batch_size: int = 64, label_target: str | None = None,
               model: FvaeModel | None = None) -> tuple[FvaeModel, list[PhaseTrace]]:
    trainer = FvaeTrainer(dataset, arch, group_dims, seed, batch_size, label_target, model)
    traces = trainer.run(schedule)
    return trainer.model, traces
