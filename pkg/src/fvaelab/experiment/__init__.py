"""Config-driven experiment runs and the ``fvaelab`` command line."""

from .config import DEFAULTS, KINDS, ConfigError, ExperimentConfig, defaults, parse_config, parse_text
from .recipes import RECIPES, recipe, recipes
from .runner import RunError, RunManifest, build_dataset, run

__all__ = [
    "DEFAULTS", "KINDS", "RECIPES", "ConfigError", "ExperimentConfig", "RunError", "RunManifest",
    "build_dataset", "defaults", "parse_config", "parse_text", "recipe", "recipes", "run",
]
