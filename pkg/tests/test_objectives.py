import pytest
from hypothesis import given
from hypothesis import strategies as st

from fvaelab.objectives import (
    ObjectiveConfig,
    annealed_vae_loss,
    beta_vae_loss,
    c_schedule,
    objective_loss,
    vae_loss,
)

finite = st.floats(-1e4, 1e4)
nonneg = st.floats(0, 1e4)


def test_identities():
    assert vae_loss(0.0, 0.0) == 0.0
    assert beta_vae_loss(-10.0, 3.0, 1.0) == vae_loss(-10.0, 3.0)
    assert beta_vae_loss(-10.0, 3.0, 0.0) == 10.0
    assert annealed_vae_loss(-10.0, 3.0, 1.0, 0.0) == vae_loss(-10.0, 3.0)
    assert annealed_vae_loss(-1.0, 5.0, 100.0, 3.0) == pytest.approx(201.0)
    assert annealed_vae_loss(-1.0, 5.0, 100.0, 5.0) == pytest.approx(1.0)


@given(finite, nonneg, nonneg, nonneg)
def test_beta_loss_monotone_in_kl(recon, kl, extra, beta):
    assert beta_vae_loss(recon, kl + extra, beta) >= beta_vae_loss(recon, kl, beta)


@given(finite, nonneg, nonneg, nonneg)
def test_annealed_minimum_at_capacity(recon, kl, c, gamma):
    assert annealed_vae_loss(recon, kl, gamma, c) >= annealed_vae_loss(recon, c, gamma, c)


def test_c_schedule_ramp():
    cfg = ObjectiveConfig(kind="annealed_vae", c_start=2.0, c_end=12.0, ramp_steps=100)
    assert c_schedule(0, cfg) == 2.0
    assert c_schedule(50, cfg) == pytest.approx(7.0)
    assert c_schedule(100, cfg) == 12.0 and c_schedule(10**6, cfg) == 12.0
    with pytest.raises(ValueError):
        c_schedule(-1, cfg)


def test_objective_dispatch():
    assert objective_loss(ObjectiveConfig(kind="vae", beta=9.0), -1.0, 2.0) == 3.0
    assert objective_loss(ObjectiveConfig(beta=4.0), -1.0, 2.0) == 9.0
    cfg = ObjectiveConfig(kind="annealed_vae", gamma=10.0, c_start=0.0, c_end=4.0, ramp_steps=4)
    assert objective_loss(cfg, -1.0, 2.0, step=2) == pytest.approx(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ObjectiveConfig(kind="info_vae")
    with pytest.raises(ValueError):
        ObjectiveConfig(beta=-1.0)
    with pytest.raises(ValueError):
        ObjectiveConfig(c_start=5.0, c_end=1.0)
