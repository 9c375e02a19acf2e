"""Built-in experiment configs, sized for a desktop CPU."""

from __future__ import annotations

__all__ = ["RECIPES", "recipe", "recipes"]

_SMALL_MLP = {"model.encoder_widths": (256,), "model.decoder_widths": (256,), "train.lr": 1e-3}
_TINY_MLP = {"model.encoder_widths": (128,), "model.decoder_widths": (128,), "train.lr": 1e-3}
_DSPRITES = {"dataset.source": "dsprites", "dataset.cardinalities": (3, 2, 4, 8, 8)}

RECIPES: dict[str, dict] = {
    # Latent projections of the translated rectangle, 45-degree variant.
    "fig1-projection": {
        "kind": "project", "dataset.source": "A3", "objective.beta": 50.0, "train.steps": 6000,
        "run.seeds": (0,), **_SMALL_MLP,
    },
    # Entropy and beta-VAE KL over the (theta, L) grid of single x-translations.
    "fig3-significance": {
        "kind": "entropy-grid", "entropy.train": True, "objective.beta": 8.0, "train.steps": 1500,
        "train.batch_size": 16, "run.seeds": (0, 1, 2), **_TINY_MLP,
    },
    # Final KL against beta on the dSprites-style subset.
    "fig5-thresholds": {
        "kind": "sweep", **_DSPRITES, "sweep.targets": ("posX", "scale", "orientation"),
        "sweep.betas": (2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 120.0), "train.steps": 1000, "run.seeds": (0,), **_SMALL_MLP,
    },
    # MIG of beta-VAE (beta 4) against the three-phase FVAE.
    "fig6-mig": {
        "kind": "mig", **_DSPRITES, "objective.beta": 4.0, "train.steps": 6000,
        "fvae.phase_steps": (2000, 2000, 2000), "run.seeds": (0, 1), **_SMALL_MLP, "train.lr": 5e-4,
    },
    # FVAE stages with a traversal grid after every phase.
    "fig7-stages": {
        "kind": "fvae-train", **_DSPRITES, "fvae.phase_steps": (1000, 1000, 1000), "run.seeds": (0,),
        **_SMALL_MLP,
    },
    # Ordered against random translations of the same rectangle.
    "draft-curves": {
        "kind": "curves", "curves.sequences": ("y", "random"), "train.steps": 1500,
        "train.batch_size": 16, "run.seeds": (0, 1, 2), **_TINY_MLP,
    },
    # Thresholds of the single-transformation suite.
    "draft-thresholds": {
        "kind": "sweep", "sweep.sequences": ("x", "y", "diagonal", "rotation"),
        "sweep.betas": (1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 60.0, 90.0), "train.steps": 1000,
        "train.batch_size": 16, "run.seeds": (0,), **_TINY_MLP,
    },
    # Per-action thresholds and MIG per method in one summary table.
    "dsprites-report": {
        "kind": "report", **_DSPRITES, "sweep.targets": ("posX", "scale", "orientation"),
        "sweep.betas": (2.0, 10.0, 40.0, 120.0), "objective.beta": 4.0, "train.steps": 1000,
        "fvae.phase_steps": (1000, 1000, 1000), "run.seeds": (0,), **_SMALL_MLP,
    },
}


def recipes() -> list[str]:
    """Recipe names in a fixed order."""
    return list(RECIPES)


def recipe(name: str) -> dict:
    try:
        return dict(RECIPES[name])
    except KeyError:
        raise KeyError(f"unknown recipe {name!r}; known: {', '.join(RECIPES)}") from None
