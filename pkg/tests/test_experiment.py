import json

import numpy as np
import pytest

from fvaelab.experiment import (
    DEFAULTS,
    ConfigError,
    RunError,
    defaults,
    parse_config,
    parse_text,
    recipe,
    recipes,
    run,
)
from fvaelab.experiment.cli import main
from fvaelab.datasets import read_dataset

TINY = [
    "train.steps=3", "model.encoder_widths=8", "model.decoder_widths=8", "fvae.phase_steps=2,2,2",
    "train.batch_size=16",
]


def test_empty_file_gives_defaults_and_full_echo(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("")
    cfg = parse_config(p)
    assert cfg == defaults()
    echo = cfg.to_text()
    assert len(echo.strip().splitlines()) == len(DEFAULTS)


def test_echo_is_closed(tmp_path):
    cfg = parse_config(None, ["objective.beta=0.1", "sweep.betas=1,2.5,7", "run.seeds=3,4"])
    p = tmp_path / "echo.txt"
    p.write_text(cfg.to_text())
    assert parse_config(p) == cfg


def test_unknown_key_named_with_location(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\n\ntrain.stpes = 5\n")
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert err.value.key == "train.stpes" and err.value.location.endswith(":3")


def test_type_mismatch_and_duplicates():
    with pytest.raises(ConfigError, match="train.steps"):
        parse_text("train.steps = many")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_text("train.steps = 1\ntrain.steps = 2")
    with pytest.raises(ConfigError, match="run.seeds"):
        parse_config(None, ["run.seeds="])


def test_flag_overrides_file(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("objective.beta = 4\n")
    cfg = parse_config(p, ["objective.beta=8"])
    assert cfg["objective.beta"] == 8.0
    assert "objective.beta = 8.0" in cfg.to_text()


def test_unresolvable_path():
    with pytest.raises(ConfigError, match="dataset.path"):
        parse_config(None, ["dataset.source=file", "dataset.path=/nonexistent/x.dseq"])


def test_sweep_grid_validation():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(None, ["sweep.betas=1,1"])


def test_recipes_stable_and_valid():
    names = recipes()
    assert names and names == recipes()
    for n in ("fig1-projection", "fig3-significance", "fig5-thresholds", "fig6-mig", "fig7-stages",
              "draft-curves", "draft-thresholds"):
        assert n in names
        parse_config(None, [], recipe(n))
    with pytest.raises(KeyError):
        recipe("fig99")


def test_gen_data_a1(tmp_path):
    out = tmp_path / "gen"
    man = run(parse_config(None, ["kind=gen-data", "dataset.source=A1"]), out)
    ds = read_dataset(out / "dataset.dseq")
    assert len(ds) == 1600 and len(ds.spec) == 2
    assert man.metrics["n_images"] == 1600
    assert sorted(p.name for p in out.glob("manifest*")) == ["manifest.json"]
    listed = json.loads((out / "manifest.json").read_text())["artifacts"]
    assert all((out / a).exists() for a in listed)
    assert not (tmp_path / "gen.partial").exists()


def test_failed_run_leaves_partial(tmp_path):
    cfg = parse_config(None, ["kind=train", "dataset.source=nowhere"] + TINY)
    with pytest.raises(RunError, match="train"):
        run(cfg, tmp_path / "bad")
    assert (tmp_path / "bad.partial").is_dir() and not (tmp_path / "bad").exists()


def test_train_twice_is_byte_identical(tmp_path):
    cfg = parse_config(None, ["kind=train", "dataset.source=suite", "run.seeds=0,1"] + TINY)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for rel in ("seed0/trace.csv", "seed1/kl_per_dim.csv", "seed1/model.vckp"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_fvae_stages_emit_traversals(tmp_path):
    cfg = parse_config(None, ["kind=fvae-train", "dataset.source=actions", "fvae.group_dims=1,1,2"] + TINY)
    man = run(cfg, tmp_path / "f")
    for p in (1, 2, 3):
        assert f"seed0/phase{p}_traversal.pgm" in man.artifacts
    head = (tmp_path / "f" / "seed0/trace.csv").read_text().splitlines()[0]
    assert head == "phase,iter,loss,recon_ll,kl_nats,beta"


def test_sweep_csv_columns(tmp_path):
    cfg = parse_config(None, ["kind=sweep", "dataset.source=suite", "sweep.betas=1,50",
                              "sweep.sequences=x,rotation"] + TINY)
    run(cfg, tmp_path / "s")
    lines = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "name,beta,seed,kl_nats,recon_ll" and len(lines) == 5
    th = (tmp_path / "s" / "thresholds.csv").read_text().splitlines()
    assert th[0] == "name,threshold,eps_info,grid"


def test_anneal_and_mig_and_curves_outputs(tmp_path):
    base = TINY + ["anneal.levels=3", "anneal.steps_per_level=2"]
    run(parse_config(None, ["kind=anneal", "dataset.source=actions"] + base), tmp_path / "an")
    assert (tmp_path / "an/seed0/annealing.csv").read_text().startswith("iter,beta,kl_nats\n")
    run(parse_config(None, ["kind=mig", "dataset.source=actions", "fvae.group_dims=1,1,2"] + base), tmp_path / "m")
    assert (tmp_path / "m/seed0/mig_fvae.csv").read_text().startswith("factor,mi_top,mi_second,entropy,gap\n")
    run(parse_config(None, ["kind=curves"] + base), tmp_path / "c")
    assert (tmp_path / "c/curves.csv").read_text().startswith("name,seed,iter,loss\n")


def test_entropy_grid_recipe_outputs(tmp_path):
    cfg = parse_config(None, TINY + ["entropy.train=true", "entropy.lengths=4,30"], recipe("fig3-significance"))
    man = run(cfg.replace(**{"run.seeds": (0,)}), tmp_path / "e")
    assert {"entropy.csv", "kl.csv"} <= set(man.artifacts)
    rows = (tmp_path / "e/entropy.csv").read_text().splitlines()
    assert rows[0] == "theta_deg,length,entropy_nats" and len(rows) == 7


def test_report_summary(tmp_path):
    cfg = parse_config(None, TINY + ["dataset.source=actions", "sweep.targets=posX,posY", "sweep.betas=1,80",
                                     "fvae.group_dims=1,1,2"], {"kind": "report"})
    run(cfg, tmp_path / "r")
    rows = (tmp_path / "r/summary.csv").read_text().splitlines()
    assert rows[0] == "metric,name,value,std"
    assert {r.split(",")[0] for r in rows[1:]} == {"threshold", "mig"}


def test_project_and_traverse(tmp_path):
    man = run(parse_config(None, ["kind=project", "dataset.source=actions"] + TINY), tmp_path / "p")
    assert "seed0/projection.csv" in man.artifacts and "seed0/alignment.csv" in man.artifacts
    man = run(parse_config(None, ["kind=traverse", "dataset.source=suite", "output.png=true"] + TINY),
              tmp_path / "t")
    assert "seed0/traversal.png" in man.artifacts


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["train", "--set", "nope=1", "--out", str(tmp_path / "x")]) == 1
    assert main(["train", "--echo", "--set", "objective.beta=2"]) == 0
    assert "objective.beta = 2.0" in capsys.readouterr().out
    assert main(["recipes"]) == 0
    args = ["train", "--set", "dataset.source=bogus", "--out", str(tmp_path / "y")]
    for kv in TINY:
        args += ["--set", kv]
    assert main(args) == 2
    ok = ["gen-data", "--set", "dataset.source=suite", "--out", str(tmp_path / "z"), "--seeds", "0,1"]
    assert main(ok) == 0
    assert main(["gen-data", "--seeds", "a,b", "--out", str(tmp_path / "w")]) == 1
