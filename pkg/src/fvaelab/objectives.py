"""Training objectives as functions of the reconstruction and KL terms.

All losses are negated ELBO-style quantities to be minimized.  They accept
plain floats or tape nodes, so the same function serves logging and
backpropagation.  Callers pass per-image batch means.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "OBJECTIVE_KINDS",
    "ObjectiveConfig",
    "annealed_vae_loss",
    "beta_vae_loss",
    "c_schedule",
    "objective_loss",
    "vae_loss",
]

OBJECTIVE_KINDS = ("vae", "beta_vae", "annealed_vae")


@dataclass(frozen=True)
class ObjectiveConfig:
    kind: str = "beta_vae"
    beta: float = 1.0
    gamma: float = 100.0
    c_start: float = 0.0
    c_end: float = 25.0
    ramp_steps: int = 10000

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"objective kind must be one of {OBJECTIVE_KINDS}, got {self.kind!r}")
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("beta and gamma must be >= 0")
        if not 0 <= self.c_start <= self.c_end:
            raise ValueError("need 0 <= c_start <= c_end")
        if self.ramp_steps < 1:
            raise ValueError("ramp_steps must be >= 1")


def vae_loss(recon_ll, kl_total):
    return -recon_ll + kl_total


def beta_vae_loss(recon_ll, kl_total, beta: float):
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return -recon_ll + beta * kl_total


def annealed_vae_loss(recon_ll, kl_total, gamma: float, capacity: float):
    """Reconstruction plus ``gamma * |KL - C|``."""
    if gamma < 0 or capacity < 0:
        raise ValueError("gamma and capacity must be >= 0")
    return -recon_ll + gamma * abs(kl_total - capacity)


def c_schedule(step: int, config: ObjectiveConfig) -> float:
    """Capacity ramped linearly from ``c_start`` to ``c_end`` over ``ramp_steps``."""
    if step < 0:
        raise ValueError("step must be >= 0")
    frac = min(step / config.ramp_steps, 1.0)
    return config.c_start + frac * (config.c_end - config.c_start)


def objective_loss(config: ObjectiveConfig, recon_ll, kl_total, step: int = 0):
    if config.kind == "vae":
        return vae_loss(recon_ll, kl_total)
    if config.kind == "beta_vae":
        return beta_vae_loss(recon_ll, kl_total, config.beta)
    return annealed_vae_loss(recon_ll, kl_total, config.gamma, c_schedule(step, config))
