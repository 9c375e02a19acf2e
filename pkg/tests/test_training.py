import numpy as np
import pytest

from fvaelab.nn_core import ArchitectureConfig, VaeModel, decode, encode, kl_divergence, recon_log_likelihood
from fvaelab.objectives import ObjectiveConfig
from fvaelab.rng import stream
from fvaelab.training import BatchSampler, TrainConfig, TrainingError, VaeTrainer, evaluate, train_vae

ARCH = ArchitectureConfig(input_shape=(6, 6), encoder_widths=(8,), decoder_widths=(8,), latent_dim=2)


def test_sampler_covers_epoch():
    s = BatchSampler(10, 4, stream(0, "batch"))
    rows = np.concatenate([s.next() for _ in range(5)])
    assert sorted(rows[:10].tolist()) == list(range(10))
    small = BatchSampler(3, 8, stream(0, "batch"))
    assert small.next().tolist() == [0, 1, 2]
    with pytest.raises(TrainingError):
        BatchSampler(0, 4, stream(0, "batch"))


def test_training_is_deterministic(tiny_dataset):
    cfg = TrainConfig(steps=6, batch_size=2, lr=1e-3, objective=ObjectiveConfig(beta=2.0))
    m1, t1 = train_vae(tiny_dataset, ARCH, cfg, seed=1)
    m2, t2 = train_vae(tiny_dataset, ARCH, cfg, seed=1)
    _, t3 = train_vae(tiny_dataset, ARCH, cfg, seed=2)
    assert t1.loss == t2.loss and t1.loss != t3.loss
    assert all(np.array_equal(m1.params[k], m2.params[k]) for k in m1.params)


def test_loss_decreases(tiny_dataset):
    cfg = TrainConfig(steps=300, batch_size=4, lr=3e-3, objective=ObjectiveConfig(beta=1.0))
    _, trace = train_vae(tiny_dataset, ARCH, cfg, seed=0)
    assert np.mean(trace.loss[-20:]) < 0.5 * np.mean(trace.loss[:20])


def test_trace_components_sum_to_loss(tiny_dataset):
    beta = 3.0
    cfg = TrainConfig(steps=5, batch_size=4, objective=ObjectiveConfig(beta=beta))
    _, trace = train_vae(tiny_dataset, ARCH, cfg, seed=0)
    for loss, rec, kl, kd in zip(trace.loss, trace.recon_ll, trace.kl_total, trace.kl_per_dim):
        assert loss == pytest.approx(-rec + beta * kl, rel=1e-12)
        assert kd.sum() == pytest.approx(kl, rel=1e-12)


def test_evaluate_matches_direct_computation(tiny_dataset):
    model = VaeModel.init(ARCH, stream(0, "init"))
    ev = evaluate(model, tiny_dataset)
    x = tiny_dataset.as_float()
    post = encode(model, x)
    per_dim, total = kl_divergence(post)
    assert ev["kl_total"] == pytest.approx(total.mean(), rel=1e-10)
    assert np.allclose(ev["kl_per_dim"], per_dim.mean(axis=0))
    assert ev["recon_ll"] == pytest.approx(recon_log_likelihood(x, decode(model, post.mean)).mean(), rel=1e-8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_diverging_run_raises(tiny_dataset):
    cfg = TrainConfig(steps=50, batch_size=4, lr=1e12, objective=ObjectiveConfig(beta=1.0))
    with pytest.raises(TrainingError):
        train_vae(tiny_dataset, ARCH, cfg, seed=0)


def test_resumed_run_equals_single_run(tiny_dataset):
    cfg = TrainConfig(steps=8, batch_size=2)
    a = VaeTrainer(tiny_dataset, ARCH, cfg, 3)
    a.run(8)
    b = VaeTrainer(tiny_dataset, ARCH, cfg, 3)
    b.run(3)
    b.run(5)
    assert a.trace.loss == b.trace.loss


def test_label_target_conditions_decoder(tiny_dataset):
    cfg = TrainConfig(steps=2, batch_size=4, label_target="a")
    tr = VaeTrainer(tiny_dataset, ARCH, cfg, 0)
    assert tr.model.cond_dim == 2
    tr.run(2)
    assert "kl_total" in evaluate(tr.model, tiny_dataset, "a")
