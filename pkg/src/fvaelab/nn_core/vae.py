"""Gaussian-posterior / Bernoulli-likelihood VAE built from the tape networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .networks import ArchitectureConfig, decoder_forward, encoder_forward, init_decoder, init_encoder

__all__ = [
    "GaussianPosterior",
    "VaeModel",
    "decode",
    "encode",
    "kl_divergence",
    "recon_log_likelihood",
    "reparameterize",
]

_P_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianPosterior:
    mean: np.ndarray
    logvar: np.ndarray

    @property
    def var(self) -> np.ndarray:
        return np.exp(self.logvar)


class VaeModel:
    """Encoder and decoder parameters in one named dict.

    ``cond_dim`` extra decoder inputs carry one-hot labels in the mixed-label
    variant (0 for a plain VAE).
    """

    def __init__(self, arch: ArchitectureConfig, params: dict, cond_dim: int = 0):
        self.arch = arch
        self.params = params
        self.cond_dim = cond_dim

    @classmethod
    def init(cls, arch: ArchitectureConfig, rng: np.random.Generator, cond_dim: int = 0) -> "VaeModel":
        params = init_encoder(arch, rng, "encoder")
        params.update(init_decoder(arch, rng, arch.latent_dim + cond_dim, "decoder"))
        return cls(arch, params, cond_dim)

    def copy(self) -> "VaeModel":
        return VaeModel(self.arch, {k: v.copy() for k, v in self.params.items()}, self.cond_dim)

    @property
    def latent_dim(self) -> int:
        return self.arch.latent_dim

    def encode(self, images) -> "GaussianPosterior":
        return encode(self, images)

    def decode(self, z, labels=None) -> np.ndarray:
        return decode(self, z, labels)


def _batch(model: VaeModel, images) -> tuple[np.ndarray, bool]:
    x = np.asarray(images, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1:] != model.arch.input_shape:
        raise ValueError(f"image shape {x.shape[1:]} does not match model input {model.arch.input_shape}")
    return x, single


def encode(model: VaeModel, images) -> GaussianPosterior:
    """Posterior for one image ``(H, W)`` or a batch ``(B, H, W)``."""
    x, single = _batch(model, images)
    tape = ad.Tape(model.params)
    mu, logvar = encoder_forward(tape, model.arch, x, "encoder")
    if single:
        return GaussianPosterior(mu.value[0], logvar.value[0])
    return GaussianPosterior(mu.value, logvar.value)


def reparameterize(post: GaussianPosterior, noise) -> np.ndarray:
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape[-1] != post.mean.shape[-1]:
        raise ValueError(f"noise width {noise.shape[-1]} != latent dim {post.mean.shape[-1]}")
    return post.mean + np.exp(0.5 * post.logvar) * noise


def decode_logits(model: VaeModel, z, labels=None) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None]
        labels = None if labels is None else np.asarray(labels, dtype=np.float64)[None]
    if z.shape[1] != model.latent_dim:
        raise ValueError(f"code width {z.shape[1]} != latent dim {model.latent_dim}")
    if model.cond_dim:
        if labels is None or np.shape(labels)[-1] != model.cond_dim:
            raise ValueError(f"decoder expects {model.cond_dim} label entries")
        z = np.concatenate([z, np.asarray(labels, dtype=np.float64)], axis=1)
    tape = ad.Tape(model.params)
    logits = decoder_forward(tape, model.arch, tape.const(z), "decoder").value
    return logits[0] if single else logits


def decode(model: VaeModel, z, labels=None) -> np.ndarray:
    """Bernoulli pixel means, kept strictly inside (0, 1)."""
    logits = decode_logits(model, z, labels)
    p = 0.5 * (1.0 + np.tanh(0.5 * logits))
    return np.clip(p, _P_FLOOR, 1.0 - _P_FLOOR)


def recon_log_likelihood(x, p) -> float | np.ndarray:
    """``sum x log p + (1 - x) log(1 - p)`` over pixels (per image for batches)."""
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if x.shape != p.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {p.shape}")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("pixel means must lie strictly inside (0, 1); was the output squashed?")
    terms = x * np.log(p) + (1.0 - x) * np.log1p(-p)
    if terms.ndim <= 2:
        return float(terms.sum())
    return terms.reshape(terms.shape[0], -1).sum(axis=1)


def kl_divergence(post: GaussianPosterior) -> tuple[np.ndarray, float | np.ndarray]:
    """Per-dimension KL to N(0, I) and its total over the last axis."""
    per_dim = 0.5 * (post.mean**2 + np.exp(post.logvar) - 1.0 - post.logvar)
    per_dim = np.maximum(per_dim, 0.0)
    total = per_dim.sum(axis=-1)
    return per_dim, (float(total) if np.ndim(total) == 0 else total)
