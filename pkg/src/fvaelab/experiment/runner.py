"""Dispatch an :class:`ExperimentConfig` to the library and persist its outputs.

Everything is written under ``<out>.partial`` and renamed to ``<out>`` only
once the run (manifest included) has completed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .. import analysis as an
from ..datasets import (
    ImageDataset,
    a4_max_length,
    gen_a4,
    gen_action_grid,
    gen_dsprites,
    gen_transformation_suite,
    named_dataset,
    read_dataset,
    write_dataset,
)
from ..fvae import FvaeModel, FvaeTrainer, LabelMixConfig, PhaseSchedule, mix_labels
from ..nn_core import ArchitectureConfig, VaeModel, load_checkpoint, save_checkpoint
from ..objectives import ObjectiveConfig
from ..training import TrainConfig, VaeTrainer, evaluate, posterior_means
from .config import ExperimentConfig

__all__ = ["RunError", "RunManifest", "build_dataset", "run"]


class RunError(RuntimeError):
    def __init__(self, kind: str, seed, cause: BaseException):
        where = f"{kind}" + ("" if seed is None else f", seed {seed}")
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")
        self.kind = kind
        self.seed = seed


@dataclass
class RunManifest:
    config: str
    version: str
    seeds: list
    started: str
    finished: str = ""
    artifacts: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


# -- building blocks ---------------------------------------------------------

def build_dataset(cfg: ExperimentConfig) -> ImageDataset:
    src = cfg["dataset.source"]
    if src in ("A1", "A2", "A3"):
        return named_dataset(src)
    if src == "a4":
        return gen_a4(math.radians(cfg["dataset.theta_deg"]), cfg["dataset.length"], cfg["dataset.frames"])
    if src == "dsprites":
        return gen_dsprites(cfg["dataset.cardinalities"])
    if src == "suite":
        return _suite(cfg, cfg["dataset.suite_kind"])
    if src == "actions":
        return gen_action_grid(parse_actions(cfg["dataset.actions"]))
    if src == "file":
        return read_dataset(cfg["dataset.path"])
    raise ValueError(f"unknown dataset.source {src!r}")


def _suite(cfg: ExperimentConfig, kind: str) -> ImageDataset:
    return gen_transformation_suite(kind, cfg["dataset.frames"], seed=cfg["dataset.seed"],
                                    length=cfg["dataset.suite_length"])


def parse_actions(text: str) -> list[tuple[str, int, float]]:
    """``kind:count:extent`` items separated by ``;``; rotation extents are degrees."""
    out = []
    for item in filter(None, (t.strip() for t in text.split(";"))):
        kind, count, extent = item.split(":")
        ext = float(extent)
        out.append((kind, int(count), math.radians(ext) if kind == "rotation" else ext))
    return out


def arch_of(cfg: ExperimentConfig, dataset: ImageDataset) -> ArchitectureConfig:
    return ArchitectureConfig(
        input_shape=(dataset.height, dataset.width),
        encoder_widths=tuple(cfg["model.encoder_widths"]),
        decoder_widths=tuple(cfg["model.decoder_widths"]),
        latent_dim=cfg["model.latent_dim"],
        kind=cfg["model.kind"],
    )


def objective_of(cfg: ExperimentConfig) -> ObjectiveConfig:
    o = cfg.section("objective")
    return ObjectiveConfig(kind=o["kind"], beta=o["beta"], gamma=o["gamma"], c_start=o["c_start"],
                           c_end=o["c_end"], ramp_steps=o["ramp_steps"])


def train_config_of(cfg: ExperimentConfig, label_target: str | None = None) -> TrainConfig:
    target = label_target if label_target is not None else (cfg["train.label_target"] or None)
    return TrainConfig(steps=cfg["train.steps"], batch_size=cfg["train.batch_size"], lr=cfg["train.lr"],
                       objective=objective_of(cfg), label_target=target)


def schedule_of(cfg: ExperimentConfig) -> PhaseSchedule:
    if cfg["fvae.schedule"]:
        return PhaseSchedule.from_text(cfg["fvae.schedule"])
    return PhaseSchedule.staged(cfg["fvae.betas"], cfg["fvae.phase_steps"], cfg["fvae.active_lr"],
                                cfg["fvae.learned_lr"])


def model_record(model) -> dict:
    rec = {"arch": json.loads(model.arch.to_json()), "cond_dim": model.cond_dim}
    if isinstance(model, FvaeModel):
        rec.update(type="fvae", group_dims=list(model.group_dims))
    else:
        rec["type"] = "vae"
    return rec


def load_model(path):
    config, params, _ = load_checkpoint(path)
    arch = ArchitectureConfig.from_json(json.dumps(config["arch"]))
    if config.get("type") == "fvae":
        return FvaeModel(arch, config["group_dims"], params, config.get("cond_dim", 0))
    return VaeModel(arch, params, config.get("cond_dim", 0))


class _Out:
    """Artifact writer rooted at the partial output directory."""

    def __init__(self, root: Path, png: bool):
        self.root = root
        self.png = png
        self.artifacts: list[str] = []

    def path(self, rel: str) -> Path:
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.append(rel)
        return p

    def csv(self, rel: str, header, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        self.path(rel).write_text(buf.getvalue(), encoding="utf-8")

    def image(self, rel: str, img) -> None:
        an.write_pgm(self.path(rel + ".pgm"), img)
        if self.png:
            an.write_png(self.path(rel + ".png"), img)

    def checkpoint(self, rel: str, model, phase: int = -1) -> None:
        save_checkpoint(self.path(rel), model_record(model), model.params, phase)


def _trace_rows(trace, start: int = 0):
    for i, (loss, rec, kl, beta) in enumerate(zip(trace.loss, trace.recon_ll, trace.kl_total, trace.beta)):
        yield start + i, loss, rec, kl, beta


def _train_vae(cfg, dataset, seed, label_target=None):
    if cfg["model.checkpoint"]:
        return load_model(cfg["model.checkpoint"]), None
    trainer = VaeTrainer(dataset, arch_of(cfg, dataset), train_config_of(cfg, label_target), seed)
    trainer.run(cfg["train.steps"])
    return trainer.model, trainer.trace


def _traversal_grid(model, anchor, dims, steps, span, base_code=None) -> np.ndarray:
    post = model.encode(anchor)
    z0 = post.mean if base_code is None else base_code
    rows = []
    for d in dims:
        z = np.repeat(z0[None], steps, axis=0)
        z[:, d] += np.linspace(-span, span, steps)
        rows.append(model.decode(z))
    return an.tile(np.stack(rows))


def _dims_by_kl(model, dataset) -> list[int]:
    mu, lv = posterior_means(model, dataset)
    kl = (0.5 * (mu**2 + np.exp(lv) - 1 - lv)).mean(axis=0)
    return [int(j) for j in np.argsort(-kl, kind="stable")]


# -- kinds -------------------------------------------------------------------

def _gen_data(cfg, out: _Out, seeds):
    ds = build_dataset(cfg)
    write_dataset(out.path("dataset.dseq"), ds)
    out.image("preview", an.tile(ds.as_float()[: min(len(ds), 16)], cols=8))
    return {"n_images": len(ds), "factors": ds.spec.names, "cardinalities": list(ds.spec.cardinalities)}


def _train(cfg, out: _Out, seeds, seed_ctx):
    ds = build_dataset(cfg)
    metrics = {}
    for s in seeds:
        seed_ctx[0] = s
        model, trace = _train_vae(cfg, ds, s)
        out.checkpoint(f"seed{s}/model.vckp", model)
        if trace is not None:
            out.csv(f"seed{s}/trace.csv", ["iter", "loss", "recon_ll", "kl_nats", "beta"], _trace_rows(trace))
        ev = evaluate(model, ds, cfg["train.label_target"] or None)
        out.csv(f"seed{s}/kl_per_dim.csv", ["dim", "kl_nats"], enumerate(ev["kl_per_dim"].tolist()))
        metrics[str(s)] = {"kl_nats": ev["kl_total"], "recon_ll": ev["recon_ll"],
                           "active_units": an.active_units(model, ds)}
    return metrics


def _phase_code(model: FvaeModel, anchor, phase: int) -> np.ndarray:
    """Posterior mean for learned groups, prior mean (0) for the rest."""
    z = model.encode(anchor).mean.copy()
    z[sum(model.group_dims[:phase]):] = 0.0
    return z


def _fvae_train(cfg, out: _Out, seeds, seed_ctx):
    ds = build_dataset(cfg)
    schedule = schedule_of(cfg)
    metrics = {}
    anchor = ds.as_float()[cfg["traverse.anchor"] % len(ds)]
    for s in seeds:
        seed_ctx[0] = s
        trainer = FvaeTrainer(ds, arch_of(cfg, ds), cfg["fvae.group_dims"], s, cfg["train.batch_size"],
                              cfg["train.label_target"] or None)

        def on_phase_end(p, tr, s=s):
            m = tr.model
            learned = range(sum(m.group_dims[:p]))
            grid = _traversal_grid(m, anchor, learned, cfg["traverse.steps"], cfg["traverse.span"],
                                   _phase_code(m, anchor, p))
            out.image(f"seed{s}/phase{p}_traversal", grid)
            out.checkpoint(f"seed{s}/phase{p}.vckp", m, phase=p)

        traces = trainer.run(schedule, on_phase_end)
        rows, start = [], 0
        for tr in traces:
            rows.extend((tr.phase, *r) for r in _trace_rows(tr, start))
            start += len(tr)
        out.csv(f"seed{s}/trace.csv", ["phase", "iter", "loss", "recon_ll", "kl_nats", "beta"], rows)
        m = trainer.model
        gkl = [tr.group_kl[-1] if tr.group_kl else [0.0] * m.n_groups for tr in traces]
        out.csv(f"seed{s}/group_kl.csv", ["phase"] + [f"group{g + 1}" for g in range(m.n_groups)],
                ([p + 1, *g] for p, g in enumerate(gkl)))
        entry = {"final_group_kl": gkl[-1]}
        if len(ds.spec) > 1 or len(ds.spec.factors[0]) > 1:
            entry["mig"] = an.mig(m, ds, cfg["mig.bins"], cfg["mig.samples"] or None, s).score
        metrics[str(s)] = entry
    return metrics


def _sweep_jobs(cfg):
    """``(name, dataset, label_target)`` per threshold being estimated."""
    if cfg["sweep.sequences"]:
        return [(k, _suite(cfg, k), None) for k in cfg["sweep.sequences"]]
    ds = build_dataset(cfg)
    if cfg["sweep.targets"]:
        return [(t, ds, t) for t in cfg["sweep.targets"]]
    return [("all", ds, cfg["train.label_target"] or None)]


def _sweep(cfg, out: _Out, seeds, seed_ctx):
    rows, by_seed, report = [], [], {}
    for name, ds, target in _sweep_jobs(cfg):
        res = an.beta_sweep(ds, cfg["sweep.betas"], arch_of(cfg, ds), train_config_of(cfg, target), seeds,
                            jobs=cfg["run.jobs"])
        rows.extend((name, *r) for r in res.rows())
        report[name] = an.estimate_threshold(res, cfg["sweep.eps_info"])
        for s in seeds:
            by_seed.append((name, s, str(an.estimate_threshold(res.for_seed(s), cfg["sweep.eps_info"]))))
    out.csv("sweep.csv", ["name", "beta", "seed", "kl_nats", "recon_ll"], rows)
    out.csv("thresholds.csv", ["name", "threshold", "eps_info", "grid"], an.ThresholdReport(report).rows())
    out.csv("thresholds_by_seed.csv", ["name", "seed", "threshold"], by_seed)
    return {name: str(th) for name, th in report.items()}


def _anneal(cfg, out: _Out, seeds, seed_ctx):
    ds = build_dataset(cfg)
    betas = an.geometric_schedule(cfg["anneal.high"], cfg["anneal.low"], cfg["anneal.levels"])
    metrics = {}
    for s in seeds:
        seed_ctx[0] = s
        tr = an.annealing_test(ds, betas, cfg["anneal.steps_per_level"], arch_of(cfg, ds),
                               train_config_of(cfg), s, cfg["anneal.delta"])
        out.csv(f"seed{s}/annealing.csv", ["iter", "beta", "kl_nats"], tr.steps)
        out.csv(f"seed{s}/levels.csv", ["beta", "kl_nats"], tr.levels)
        out.csv(f"seed{s}/critical.csv", ["beta", "jump_nats"], tr.critical_points)
        metrics[str(s)] = {"critical_betas": [b for b, _ in tr.critical_points]}
    return metrics


def _traverse(cfg, out: _Out, seeds, seed_ctx):
    ds = build_dataset(cfg)
    anchor = ds.as_float()[cfg["traverse.anchor"] % len(ds)]
    metrics = {}
    for s in seeds:
        seed_ctx[0] = s
        model, _ = _train_vae(cfg, ds, s)
        if isinstance(model, FvaeModel):
            dims = list(range(model.latent_dim))
        else:
            dims = _dims_by_kl(model, ds)
        out.image(f"seed{s}/traversal", _traversal_grid(model, anchor, dims, cfg["traverse.steps"],
                                                        cfg["traverse.span"]))
        out.csv(f"seed{s}/traversal_dims.csv", ["row", "dim"], enumerate(dims))
        metrics[str(s)] = {"active_units": an.active_units(model, ds)}
    return metrics


def _draw_projection(proj: an.Projection, size: int = 256) -> np.ndarray:
    from PIL import Image, ImageDraw

    pts = proj.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    xy = 8 + (pts - lo) / span * (size - 16)
    img = Image.new("L", (size, size), 255)
    draw = ImageDraw.Draw(img)
    for shade, lines in zip((160, 90, 40), proj.lines.values()):
        for rows in lines:
            draw.line([tuple(xy[r]) for r in rows], fill=shade)
    for x, y in xy:
        draw.point((x, y), fill=0)
    return np.asarray(img, dtype=np.uint8)


def _project(cfg, out: _Out, seeds, seed_ctx):
    ds = build_dataset(cfg)
    metrics = {}
    for s in seeds:
        seed_ctx[0] = s
        model, _ = _train_vae(cfg, ds, s)
        dims = tuple(cfg["project.dims"]) or tuple(_dims_by_kl(model, ds)[:2])
        proj = an.latent_projection(model, ds, dims)
        out.csv(f"seed{s}/projection.csv", ["mu_i", "mu_j", *proj.factor_names], proj.rows())
        out.image(f"seed{s}/projection", _draw_projection(proj))
        entry = {"dims": list(dims)}
        centers = ds.meta.get("centers")
        if centers is not None and len(centers) == len(ds):
            deg, fit = an.best_fit_frame(proj.points, centers)
            out.csv(f"seed{s}/alignment.csv", ["frame_deg", "r2_u", "r2_v"], [(deg, *fit.r2)])
            entry["frame_deg"] = deg
        metrics[str(s)] = entry
    return metrics


def _mig_model(cfg, ds, method, seed):
    if method == "beta_vae":
        model, _ = _train_vae(cfg, ds, seed)
        return model
    if method == "fvae":
        trainer = FvaeTrainer(ds, arch_of(cfg, ds), cfg["fvae.group_dims"], seed, cfg["train.batch_size"])
        trainer.run(schedule_of(cfg))
        return trainer.model
    raise ValueError(f"unknown MIG method {method!r}")


def _mig(cfg, out: _Out, seeds, seed_ctx, prefix: str = ""):
    ds = build_dataset(cfg)
    scores, metrics = [], {}
    for method in cfg["mig.methods"]:
        vals = []
        for s in seeds:
            seed_ctx[0] = s
            model = _mig_model(cfg, ds, method, s)
            rep = an.mig(model, ds, cfg["mig.bins"], cfg["mig.samples"] or None, s)
            out.csv(f"{prefix}seed{s}/mig_{method}.csv", ["factor", "mi_top", "mi_second", "entropy", "gap"],
                    rep.rows())
            scores.append((method, s, rep.score))
            vals.append(rep.score)
        metrics[method] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
    out.csv(f"{prefix}mig_scores.csv", ["method", "seed", "score"], scores)
    return metrics


def a4_lengths(cfg) -> list[float]:
    if cfg["entropy.lengths"]:
        return list(cfg["entropy.lengths"])
    top = math.floor(a4_max_length([math.radians(t) for t in cfg["entropy.thetas_deg"]]))
    return [float(v) for v in np.linspace(4.0, top, 6)]


def _entropy_grid(cfg, out: _Out, seeds, seed_ctx):
    lengths = a4_lengths(cfg)
    ent_rows, kl_rows, cells = [], [], []
    for t in cfg["entropy.thetas_deg"]:
        for L in lengths:
            ds = gen_a4(math.radians(t), L, cfg["dataset.frames"])
            ent_rows.append((t, L, an.sequence_entropy(ds.images)))
            cells.append((t, L, ds))
    out.csv("entropy.csv", ["theta_deg", "length", "entropy_nats"], ent_rows)
    best = max(ent_rows, key=lambda r: r[2])
    metrics = {"entropy_argmax": [best[0], best[1]]}
    if cfg["entropy.train"]:
        mean_kl = []
        for t, L, ds in cells:
            res = an.beta_sweep(ds, [cfg["objective.beta"]], arch_of(cfg, ds), train_config_of(cfg), seeds,
                                jobs=cfg["run.jobs"])
            kl_rows.extend((t, L, s, kl) for (_, s, kl, _) in res.rows())
            mean_kl.append(res.points[0].kl)
        out.csv("kl.csv", ["theta_deg", "length", "seed", "kl_nats"], kl_rows)
        metrics["spearman_entropy_kl"] = _spearman([r[2] for r in ent_rows], mean_kl)
    return metrics


def _spearman(a, b) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(a, b).statistic)


def _curves(cfg, out: _Out, seeds, seed_ctx):
    seqs = [(k, _suite(cfg, k)) for k in cfg["curves.sequences"]]
    ds0 = seqs[0][1]
    cs = an.learning_curve_compare(seqs, arch_of(cfg, ds0), train_config_of(cfg), seeds, cfg["run.jobs"])
    out.csv("curves.csv", ["name", "seed", "iter", "loss"], cs.rows())
    reach = an.reach_table(cs, cs.names[0])
    out.csv("reach.csv", ["name", "seed", "iterations"],
            ((n, s, -1 if it is None else it) for n, per in reach.items() for s, it in per.items()))
    return {n: {str(s): it for s, it in per.items()} for n, per in reach.items()}


def _report(cfg, out: _Out, seeds, seed_ctx):
    th = _sweep(cfg, out, seeds, seed_ctx)
    migs = _mig(cfg, out, seeds, seed_ctx)
    rows = [("threshold", name, value, "") for name, value in th.items()]
    rows += [("mig", m, v["mean"], v["std"]) for m, v in migs.items()]
    out.csv("summary.csv", ["metric", "name", "value", "std"], rows)
    return {"thresholds": th, "mig": migs}


_HANDLERS = {
    "gen-data": lambda cfg, out, seeds, ctx: _gen_data(cfg, out, seeds),
    "train": _train,
    "fvae-train": _fvae_train,
    "sweep": _sweep,
    "anneal": _anneal,
    "traverse": _traverse,
    "project": _project,
    "mig": _mig,
    "entropy-grid": _entropy_grid,
    "curves": _curves,
    "report": _report,
}


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def run(cfg: ExperimentConfig, out_dir) -> RunManifest:
    """Run ``cfg`` into ``out_dir``; on failure the partial directory is kept and RunError raised."""
    out_dir = Path(out_dir)
    partial = out_dir.with_name(out_dir.name + ".partial")
    if partial.exists():
        shutil.rmtree(partial)
    partial.mkdir(parents=True)
    seeds = list(cfg.seeds)
    manifest = RunManifest(cfg.to_text(), __version__, seeds, _now())
    out = _Out(partial, cfg["output.png"])
    (partial / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    out.artifacts.append("config.txt")
    seed_ctx = [None]
    try:
        manifest.metrics = _HANDLERS[cfg.kind](cfg, out, seeds, seed_ctx)
    except Exception as exc:
        raise RunError(cfg.kind, seed_ctx[0], exc) from exc
    manifest.finished = _now()
    manifest.artifacts = sorted(set(out.artifacts))
    tmp = partial / "manifest.json.tmp"
    tmp.write_text(manifest.to_json(), encoding="utf-8")
    os.replace(tmp, partial / "manifest.json")
    if out_dir.exists():
        shutil.rmtree(out_dir)
    os.replace(partial, out_dir)
    return manifest
