"""Networks, Gaussian/Bernoulli VAE pieces, the gradient tape and Adam."""

from .autodiff import Node, Tape, backward
from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .networks import ArchitectureConfig, decoder_forward, encoder_forward, init_decoder, init_encoder
from .optim import AdamState, NonFiniteGradientError, adam_step
from .vae import (
    GaussianPosterior,
    VaeModel,
    decode,
    decode_logits,
    encode,
    kl_divergence,
    recon_log_likelihood,
    reparameterize,
)

__all__ = [
    "AdamState",
    "ArchitectureConfig",
    "CheckpointFormatError",
    "GaussianPosterior",
    "Node",
    "NonFiniteGradientError",
    "Tape",
    "VaeModel",
    "adam_step",
    "backward",
    "decode",
    "decode_logits",
    "decoder_forward",
    "encode",
    "encoder_forward",
    "init_decoder",
    "init_encoder",
    "kl_divergence",
    "load_checkpoint",
    "recon_log_likelihood",
    "reparameterize",
    "save_checkpoint",
]
