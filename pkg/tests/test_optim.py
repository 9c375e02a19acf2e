import numpy as np
import pytest

from fvaelab.nn_core import AdamState, NonFiniteGradientError, adam_step


def reference_adam(p, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t, g in enumerate(grads, 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return p


def test_matches_reference():
    rng = np.random.default_rng(0)
    p0 = rng.normal(size=(4, 3))
    grads = [rng.normal(size=(4, 3)) for _ in range(5)]
    params, state = {"w": p0.copy()}, AdamState()
    for g in grads:
        adam_step(params, {"w": g}, state, 1e-2)
    assert np.allclose(params["w"], reference_adam(p0, grads, 1e-2), atol=1e-14)
    assert state.t["w"] == 5


def test_first_step_moves_by_lr():
    params, state = {"w": np.zeros(3)}, AdamState()
    adam_step(params, {"w": np.array([2.0, -3.0, 0.5])}, state, 0.1)
    assert np.allclose(params["w"], [-0.1, 0.1, -0.1], atol=1e-6)


def test_zero_rate_freezes_block_and_moments():
    params = {"a": np.ones(3), "b": np.ones(3)}
    state = AdamState()
    adam_step(params, {"a": np.ones(3), "b": np.ones(3)}, state, lambda n: 0.0 if n == "b" else 0.1)
    assert np.array_equal(params["b"], np.ones(3))
    assert "b" not in state.m and "b" not in state.t
    assert not np.array_equal(params["a"], np.ones(3))


def test_non_finite_gradient_names_block_and_leaves_params():
    params = {"a": np.ones(2), "b": np.ones(2)}
    with pytest.raises(NonFiniteGradientError, match="'b'.*iteration 7"):
        adam_step(params, {"a": np.ones(2), "b": np.array([1.0, np.nan])}, AdamState(), 0.1, iteration=7)
    assert np.array_equal(params["a"], np.ones(2))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step({"a": np.ones(2)}, {"a": np.ones(3)}, AdamState(), 0.1)
