"""Adam with per-block state, so parameter groups can run at their own rates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = ["AdamState", "NonFiniteGradientError", "adam_step"]


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, block: str, iteration: int | None = None):
        where = f" at iteration {iteration}" if iteration is not None else ""
        super().__init__(f"non-finite gradient in parameter block {block!r}{where}")
        self.block = block
        self.iteration = iteration


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: dict = field(default_factory=dict)


@numba.njit(cache=True, error_model="numpy")
def _adam_kernel(p, g, m, v, rate, beta1, beta2, eps, bc1, bc2):
    # elementwise standard Adam, one pass over flat float64 arrays
    for i in range(p.size):
        gi = g[i]
        mi = beta1 * m[i] + (1.0 - beta1) * gi
        vi = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        m[i] = mi
        v[i] = vi
        p[i] -= rate * (mi / bc1) / (np.sqrt(vi / bc2) + eps)


def adam_step(params: dict, grads: dict, state: AdamState, lr, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8, iteration: int | None = None) -> None:
    """One in-place Adam update of every block in ``grads``.

    ``lr`` is a float or a callable ``name -> float``.  A block whose rate is
    exactly 0 is left untouched, moments included.
    """
    for name in grads:
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteGradientError(name, iteration)
    for name, g in grads.items():
        rate = lr(name) if callable(lr) else lr
        if rate == 0:
            continue
        p = params[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
        t = state.t.get(name, 0) + 1
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        if not (p.flags.c_contiguous and p.dtype == np.float64):
            raise TypeError(f"parameter {name!r} must be a contiguous float64 array")
        g = np.ascontiguousarray(g, dtype=np.float64)
        _adam_kernel(p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1), float(rate),
                     beta1, beta2, eps, 1.0 - beta1**t, 1.0 - beta2**t)
        state.m[name], state.v[name], state.t[name] = m, v, t
