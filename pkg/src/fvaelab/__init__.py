"""Disentanglement-experiment laboratory: procedural datasets, VAEs, FVAE and analyses."""

__version__ = "0.1.0"
