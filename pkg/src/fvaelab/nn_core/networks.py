"""Encoder/decoder networks over the tape, in two tiers (``mlp`` and ``conv4``)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad

__all__ = [
    "ArchitectureConfig",
    "decoder_forward",
    "encoder_forward",
    "init_decoder",
    "init_encoder",
]

_CONV_CH = 32
_CONV_DENSE = 256


@dataclass(frozen=True)
class ArchitectureConfig:
    """Network shape.

    ``kind="mlp"`` uses ``encoder_widths``/``decoder_widths`` as hidden layer
    sizes.  ``kind="conv4"`` uses four 32-channel 4x4 stride-2 convolutions
    and two 256-wide dense layers on each side (the widths are ignored).
    """

    input_shape: tuple[int, int] = (64, 64)
    encoder_widths: tuple[int, ...] = (1200,)
    decoder_widths: tuple[int, ...] = (1200,)
    latent_dim: int = 10
    nonlinearity: str = "relu"
    kind: str = "mlp"

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "encoder_widths", tuple(int(v) for v in self.encoder_widths))
        object.__setattr__(self, "decoder_widths", tuple(int(v) for v in self.decoder_widths))
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.nonlinearity not in ("relu", "tanh"):
            raise ValueError(f"nonlinearity must be relu or tanh, got {self.nonlinearity!r}")
        if self.kind not in ("mlp", "conv4"):
            raise ValueError(f"kind must be mlp or conv4, got {self.kind!r}")
        if self.kind == "conv4" and any(s % 16 for s in self.input_shape):
            raise ValueError("conv4 needs input sides divisible by 16")

    @property
    def n_pixels(self) -> int:
        return self.input_shape[0] * self.input_shape[1]

    def replace(self, **changes) -> "ArchitectureConfig":
        d = asdict(self)
        d.update(changes)
        return ArchitectureConfig(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ArchitectureConfig":
        return cls(**json.loads(text))


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _dense_params(params: dict, rng, prefix: str, n_in: int, n_out: int) -> None:
    params[f"{prefix}.W"] = _uniform(rng, (n_in, n_out), n_in)
    params[f"{prefix}.b"] = np.zeros(n_out)


def init_encoder(arch: ArchitectureConfig, rng: np.random.Generator, prefix: str = "encoder") -> dict:
    params: dict = {}
    if arch.kind == "mlp":
        n_in = arch.n_pixels
        for i, width in enumerate(arch.encoder_widths):
            _dense_params(params, rng, f"{prefix}.h{i}", n_in, width)
            n_in = width
    else:
        c_in = 1
        for i in range(4):
            params[f"{prefix}.conv{i}.W"] = _uniform(rng, (_CONV_CH, c_in, 4, 4), c_in * 16)
            params[f"{prefix}.conv{i}.b"] = np.zeros(_CONV_CH)
            c_in = _CONV_CH
        n_in = _CONV_CH * (arch.input_shape[0] // 16) * (arch.input_shape[1] // 16)
        for i in range(2):
            _dense_params(params, rng, f"{prefix}.h{i}", n_in, _CONV_DENSE)
            n_in = _CONV_DENSE
    _dense_params(params, rng, f"{prefix}.out", n_in, 2 * arch.latent_dim)
    return params


def init_decoder(arch: ArchitectureConfig, rng: np.random.Generator, n_in: int,
                 prefix: str = "decoder") -> dict:
    params: dict = {}
    if arch.kind == "mlp":
        for i, width in enumerate(arch.decoder_widths):
            _dense_params(params, rng, f"{prefix}.h{i}", n_in, width)
            n_in = width
        _dense_params(params, rng, f"{prefix}.out", n_in, arch.n_pixels)
    else:
        for i in range(2):
            _dense_params(params, rng, f"{prefix}.h{i}", n_in, _CONV_DENSE)
            n_in = _CONV_DENSE
        n_grid = _CONV_CH * (arch.input_shape[0] // 16) * (arch.input_shape[1] // 16)
        _dense_params(params, rng, f"{prefix}.grid", n_in, n_grid)
        for i in range(4):
            c_out = 1 if i == 3 else _CONV_CH
            params[f"{prefix}.deconv{i}.W"] = _uniform(rng, (_CONV_CH, c_out, 4, 4), _CONV_CH * 4)
            params[f"{prefix}.deconv{i}.b"] = np.zeros(c_out)
    return params


def _act(arch: ArchitectureConfig):
    return ad.relu if arch.nonlinearity == "relu" else ad.tanh


def _dense(tape: ad.Tape, x: ad.Node, prefix: str) -> ad.Node:
    return ad.dense(x, tape.var(f"{prefix}.W"), tape.var(f"{prefix}.b"))


def encoder_forward(tape: ad.Tape, arch: ArchitectureConfig, x: np.ndarray,
                    prefix: str = "encoder") -> tuple[ad.Node, ad.Node]:
    """Images ``(B, H, W)`` -> posterior ``(mu, logvar)`` nodes of shape ``(B, d)``."""
    act = _act(arch)
    b = x.shape[0]
    if arch.kind == "mlp":
        h = tape.const(x.reshape(b, -1))
        for i in range(len(arch.encoder_widths)):
            h = act(_dense(tape, h, f"{prefix}.h{i}"))
    else:
        h = tape.const(x.reshape(b, 1, *arch.input_shape))
        for i in range(4):
            h = act(ad.conv2d(h, tape.var(f"{prefix}.conv{i}.W"), tape.var(f"{prefix}.conv{i}.b")))
        h = ad.reshape(h, (b, -1))
        for i in range(2):
            h = act(_dense(tape, h, f"{prefix}.h{i}"))
    out = _dense(tape, h, f"{prefix}.out")
    mu, logvar = ad.split(out, (arch.latent_dim, arch.latent_dim), axis=1)
    return mu, logvar


def decoder_forward(tape: ad.Tape, arch: ArchitectureConfig, z: ad.Node,
                    prefix: str = "decoder") -> ad.Node:
    """Codes ``(B, n_in)`` -> pixel logits ``(B, H, W)``."""
    act = _act(arch)
    b = z.shape[0]
    h = z
    if arch.kind == "mlp":
        for i in range(len(arch.decoder_widths)):
            h = act(_dense(tape, h, f"{prefix}.h{i}"))
        out = _dense(tape, h, f"{prefix}.out")
    else:
        for i in range(2):
            h = act(_dense(tape, h, f"{prefix}.h{i}"))
        h = act(_dense(tape, h, f"{prefix}.grid"))
        h = ad.reshape(h, (b, _CONV_CH, arch.input_shape[0] // 16, arch.input_shape[1] // 16))
        for i in range(4):
            h = ad.conv_transpose2d(h, tape.var(f"{prefix}.deconv{i}.W"), tape.var(f"{prefix}.deconv{i}.b"))
            if i < 3:
                h = act(h)
        out = h
    return ad.reshape(out, (b, *arch.input_shape))
