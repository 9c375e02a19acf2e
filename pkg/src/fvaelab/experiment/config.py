"""Flat ``key = value`` experiment configs with typed, fully-defaulted keys."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

__all__ = ["DEFAULTS", "KINDS", "ConfigError", "ExperimentConfig", "defaults", "parse_config", "parse_text", "validate"]

KINDS = (
    "gen-data", "train", "fvae-train", "sweep", "anneal", "traverse", "project", "mig",
    "entropy-grid", "curves", "report",
)

# key -> (type, default).  List types are written comma separated.
DEFAULTS: dict[str, tuple[str, object]] = {
    "kind": ("str", "train"),
    "run.seeds": ("ints", (0,)),
    "run.jobs": ("int", 1),
    "dataset.source": ("str", "A1"),
    "dataset.path": ("path", ""),
    "dataset.theta_deg": ("float", 90.0),
    "dataset.length": ("float", 52.0),
    "dataset.frames": ("int", 16),
    "dataset.seed": ("int", 0),
    "dataset.suite_kind": ("str", "y"),
    "dataset.suite_length": ("float", 32.0),
    "dataset.cardinalities": ("ints", (3, 2, 4, 8, 8)),
    "dataset.actions": ("str", "x:8:40;y:8:4"),
    "model.kind": ("str", "mlp"),
    "model.encoder_widths": ("ints", (1200,)),
    "model.decoder_widths": ("ints", (1200,)),
    "model.latent_dim": ("int", 10),
    "model.checkpoint": ("path", ""),
    "objective.kind": ("str", "beta_vae"),
    "objective.beta": ("float", 1.0),
    "objective.gamma": ("float", 100.0),
    "objective.c_start": ("float", 0.0),
    "objective.c_end": ("float", 25.0),
    "objective.ramp_steps": ("int", 10000),
    "train.steps": ("int", 30000),
    "train.batch_size": ("int", 64),
    "train.lr": ("float", 5e-4),
    "train.label_target": ("str", ""),
    "fvae.group_dims": ("ints", (2, 2, 6)),
    "fvae.betas": ("floats", (100.0, 40.0, 4.0)),
    "fvae.phase_steps": ("ints", (30000, 30000, 30000)),
    "fvae.active_lr": ("float", 5e-4),
    "fvae.learned_lr": ("float", 5e-5),
    "fvae.schedule": ("str", ""),
    "sweep.betas": ("floats", (1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 60.0, 90.0)),
    "sweep.eps_info": ("float", 0.1),
    "sweep.targets": ("strs", ()),
    "sweep.sequences": ("strs", ()),
    "anneal.high": ("float", 120.0),
    "anneal.low": ("float", 1.0),
    "anneal.levels": ("int", 12),
    "anneal.steps_per_level": ("int", 2500),
    "anneal.delta": ("float", 0.5),
    "traverse.steps": ("int", 7),
    "traverse.span": ("float", 3.0),
    "traverse.anchor": ("int", 0),
    "project.dims": ("ints", ()),
    "mig.bins": ("int", 20),
    "mig.samples": ("int", 0),
    "mig.methods": ("strs", ("beta_vae", "fvae")),
    "entropy.thetas_deg": ("floats", (0.0, 45.0, 90.0)),
    "entropy.lengths": ("floats", ()),
    "entropy.train": ("bool", False),
    "curves.sequences": ("strs", ("y", "random")),
    "output.png": ("bool", False),
}


class ConfigError(ValueError):
    """Bad config input; ``key`` and ``location`` say where."""

    def __init__(self, message: str, key: str | None = None, location: str | None = None):
        where = ", ".join(p for p in (f"key {key!r}" if key else "", location or "") if p)
        super().__init__(f"{message} ({where})" if where else message)
        self.key = key
        self.location = location


def _fmt_float(v: float) -> str:
    return repr(float(v))


def format_value(kind: str, value) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return _fmt_float(value)
    if kind == "floats":
        return ",".join(_fmt_float(v) for v in value)
    if kind in ("ints", "strs"):
        return ",".join(str(v) for v in value)
    return str(value)


def coerce(key: str, raw: str, location: str | None = None):
    """Parse text ``raw`` as the declared type of ``key``."""
    if key not in DEFAULTS:
        raise ConfigError("unknown key", key, location)
    kind = DEFAULTS[key][0]
    text = raw.strip()
    try:
        if kind in ("str", "path"):
            return text
        if kind == "int":
            return int(text)
        if kind == "float":
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(text)
            return v
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        items = [t.strip() for t in text.split(",") if t.strip()] if text else []
        if kind == "ints":
            return tuple(int(t) for t in items)
        if kind == "floats":
            return tuple(float(t) for t in items)
        return tuple(items)
    except ValueError:
        raise ConfigError(f"cannot read {raw.strip()!r} as {kind}", key, location) from None


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple  # sorted (key, value) pairs covering every key in DEFAULTS

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def get(self, key: str, default=None):
        return dict(self.values).get(key, default)

    @property
    def kind(self) -> str:
        return self["kind"]

    @property
    def seeds(self) -> tuple[int, ...]:
        return self["run.seeds"]

    def replace(self, **changes) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in changes.items():
            key = k.replace("__", ".")
            if key not in DEFAULTS:
                raise ConfigError("unknown key", key)
            vals[key] = v
        return ExperimentConfig(tuple(sorted(vals.items())))

    def to_text(self) -> str:
        """Every key with its value, one per line, sorted; re-parses to an equal config."""
        lines = [f"{k} = {format_value(DEFAULTS[k][0], v)}" for k, v in self.values]
        return "\n".join(lines) + "\n"

    def section(self, prefix: str) -> dict:
        p = prefix + "."
        return {k[len(p):]: v for k, v in self.values if k.startswith(p)}


def defaults() -> ExperimentConfig:
    return ExperimentConfig(tuple(sorted((k, v) for k, (_, v) in DEFAULTS.items())))


def _line_of(text: str, key: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.split("=", 1)[0].strip() == key:
            return lineno
    return None


def parse_text(text: str, source: str = "<text>", base: dict | None = None) -> dict:
    """``key = value`` lines (``#`` comments, blank lines ignored) into typed values."""
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), interpolation=None, strict=True)
    parser.optionxform = str  # keys are case sensitive
    # a synthetic section header, so line numbers shift by one
    try:
        parser.read_string("[config]\n" + text, source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", exc.option, f"{source}:{exc.lineno - 1}") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - 1 if exc.errors else None
        raise ConfigError("expected 'key = value'", None, f"{source}:{lineno}") from None
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc.message}", None, source) from None
    out = dict(base or {})
    for key, raw in parser.items("config"):
        out[key] = coerce(key, raw, f"{source}:{_line_of(text, key)}")
    return out


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Cross-field checks; raises :class:`ConfigError`."""
    if cfg.kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}", "kind")
    if not cfg.seeds:
        raise ConfigError("seed list must be non-empty", "run.seeds")
    if cfg["run.jobs"] < 1:
        raise ConfigError("must be >= 1", "run.jobs")
    for key in ("dataset.path", "model.checkpoint"):
        path = cfg[key]
        if path and not Path(path).is_file():
            raise ConfigError(f"path does not exist: {path}", key)
    if cfg["dataset.source"] == "file" and not cfg["dataset.path"]:
        raise ConfigError("dataset.source = file needs dataset.path", "dataset.path")
    for key in ("train.steps", "train.batch_size", "model.latent_dim", "anneal.levels",
                "anneal.steps_per_level", "traverse.steps", "mig.bins"):
        if cfg[key] < (0 if key == "train.steps" else 1):
            raise ConfigError("value out of range", key)
    if cfg["traverse.steps"] < 2:
        raise ConfigError("must be >= 2", "traverse.steps")
    if cfg["mig.bins"] < 2:
        raise ConfigError("must be >= 2", "mig.bins")
    if cfg["model.kind"] not in ("mlp", "conv4"):
        raise ConfigError("must be mlp or conv4", "model.kind")
    if cfg["objective.kind"] not in ("vae", "beta_vae", "annealed_vae"):
        raise ConfigError("must be vae, beta_vae or annealed_vae", "objective.kind")
    if sum(cfg["fvae.group_dims"]) < 1 or min(cfg["fvae.group_dims"], default=0) < 1:
        raise ConfigError("group dims must be positive", "fvae.group_dims")
    if not cfg["fvae.schedule"]:
        n = len(cfg["fvae.group_dims"])
        if len(cfg["fvae.betas"]) != n:
            raise ConfigError(f"need {n} betas, one per group", "fvae.betas")
        if len(cfg["fvae.phase_steps"]) != n:
            raise ConfigError(f"need {n} step counts, one per group", "fvae.phase_steps")
    if len(set(cfg["sweep.betas"])) != len(cfg["sweep.betas"]):
        raise ConfigError("duplicate beta values", "sweep.betas")
    if list(cfg["sweep.betas"]) != sorted(cfg["sweep.betas"]):
        raise ConfigError("betas must be increasing", "sweep.betas")
    if cfg["project.dims"] and len(cfg["project.dims"]) != 2:
        raise ConfigError("need exactly two dims", "project.dims")
    return cfg


def parse_config(path=None, overrides=(), base: dict | None = None) -> ExperimentConfig:
    """Defaults, then ``base`` (e.g. a recipe), then the file, then ``key=value`` overrides."""
    vals = {k: v for k, (_, v) in DEFAULTS.items()}
    for k, v in (base or {}).items():
        if k not in DEFAULTS:
            raise ConfigError("unknown key", k, "recipe")
        vals[k] = coerce(k, v) if isinstance(v, str) and DEFAULTS[k][0] not in ("str", "path") else v
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        vals = parse_text(p.read_text(encoding="utf-8"), str(p), vals)
    for i, item in enumerate(overrides, 1):
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", None, f"--set #{i}")
        key, raw = item.split("=", 1)
        vals[key.strip()] = coerce(key.strip(), raw, f"--set #{i}")
    return validate(ExperimentConfig(tuple(sorted(vals.items()))))
