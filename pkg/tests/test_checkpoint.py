import numpy as np
import pytest

from fvaelab.nn_core import ArchitectureConfig, CheckpointFormatError, VaeModel, load_checkpoint, save_checkpoint
from fvaelab.rng import stream


def test_roundtrip(tmp_path):
    arch = ArchitectureConfig(input_shape=(6, 6), encoder_widths=(4,), decoder_widths=(4,), latent_dim=2)
    model = VaeModel.init(arch, stream(0, "init"))
    p = tmp_path / "m.vckp"
    save_checkpoint(p, {"arch": arch.to_json()}, model.params, phase=2)
    cfg, params, phase = load_checkpoint(p)
    assert phase == 2 and ArchitectureConfig.from_json(cfg["arch"]) == arch
    assert set(params) == set(model.params)
    assert all(np.array_equal(params[k], model.params[k]) for k in params)


def test_corrupt_files(tmp_path):
    p = tmp_path / "m.vckp"
    save_checkpoint(p, {}, {"w": np.arange(6.0).reshape(2, 3)})
    raw = p.read_bytes()
    p.write_bytes(raw[:-1])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(p)
    p.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(p)
