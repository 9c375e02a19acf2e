"""Independent reference computations shared by the tests."""

import numpy as np

from fvaelab.nn_core import autodiff as ad
from fvaelab.training import vae_batch_loss


def finite_difference_grads(loss_fn, params, step=1e-5):
    """Central differences of ``loss_fn()`` for every entry of every block."""
    out = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = loss_fn()
            flat[i] = old - step
            down = loss_fn()
            flat[i] = old
            gflat[i] = (up - down) / (2 * step)
        out[name] = g
    return out


def relative_error(a, b, floor=1e-8):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def vae_loss_and_grads(model, x, noise, objective):
    tape = ad.Tape(model.params)
    loss, *_ = vae_batch_loss(tape, model, x, noise, objective)
    return float(loss.value), ad.backward(tape, loss)


def mlp_forward(params, x, prefix, widths, act=lambda h: np.maximum(h, 0)):
    """Plain numpy MLP mirroring the dense stack: hidden layers then an output layer."""
    h = x.reshape(len(x), -1)
    for i in range(len(widths)):
        h = act(h @ params[f"{prefix}.h{i}.W"] + params[f"{prefix}.h{i}.b"])
    return h @ params[f"{prefix}.out.W"] + params[f"{prefix}.out.b"]


def sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))
