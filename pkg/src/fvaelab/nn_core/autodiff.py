"""A small reverse-mode tape over numpy arrays.

The tape records every node in creation order, which is already a
topological order, so :func:`backward` is a single reverse sweep.  Only the
operations the encoder/decoder networks and objectives need are provided.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Node",
    "Tape",
    "backward",
    "bernoulli_log_likelihood",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "dense",
    "gaussian_kl",
    "relu",
    "reparameterize",
    "reshape",
    "split",
    "tanh",
]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Node:
    """A recorded value; ``grad_fn`` maps the output gradient to parent gradients."""

    __slots__ = ("tape", "value", "parents", "grad_fn", "requires_grad", "__weakref__")

    def __init__(self, tape: "Tape", value, parents=(), grad_fn=None, requires_grad=None):
        self.tape = tape
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in parents)
        self.requires_grad = requires_grad
        self.grad_fn = grad_fn if requires_grad else None
        if requires_grad:
            tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def _lift(self, other) -> "Node":
        return other if isinstance(other, Node) else self.tape.const(other)

    def __add__(self, other):
        other = self._lift(other)
        a, b = self.shape, other.shape
        return Node(self.tape, self.value + other.value, (self, other),
                    lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)))

    __radd__ = __add__

    def __neg__(self):
        return Node(self.tape, -self.value, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        a, b = self.shape, other.shape
        x, y = self.value, other.value
        return Node(self.tape, x * y, (self, other),
                    lambda g: (_unbroadcast(g * y, a), _unbroadcast(g * x, b)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Node):
            raise TypeError("division by a recorded node is not supported")
        return self * (1.0 / other)

    def __matmul__(self, other):
        other = self._lift(other)
        x, y = self.value, other.value
        return Node(self.tape, x @ y, (self, other), lambda g: (g @ y.T, x.T @ g))

    def __abs__(self):
        s = np.sign(self.value)
        return Node(self.tape, np.abs(self.value), (self,), lambda g: (g * s,))

    def __float__(self):
        return float(self.value)

    def sum(self, axis=None):
        shape = self.shape
        out = self.value.sum(axis=axis)

        def grad_fn(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Node(self.tape, out, (self,), grad_fn)

    def mean(self, axis=None):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis) * (1.0 / n)

    def __repr__(self):
        return f"Node(shape={self.shape})"


class Tape:
    """Records computation over a named parameter set.

    ``var(name)`` returns the leaf node for a parameter (one per name).
    """

    def __init__(self, params: dict):
        self.params = params
        self.nodes: list[Node] = []
        self.leaves: dict[str, Node] = {}

    def var(self, name: str) -> Node:
        node = self.leaves.get(name)
        if node is None:
            node = Node(self, self.params[name], requires_grad=True)
            self.leaves[name] = node
        return node

    def const(self, value) -> Node:
        return Node(self, value, requires_grad=False)


def backward(tape: Tape, loss: Node) -> dict:
    """Gradients of scalar ``loss`` for every parameter of the tape.

    Parameters the loss does not depend on (including ones never read) get
    zero gradients.
    """
    if loss.value.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.shape}")
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node), None)
        if g is None or node.grad_fn is None:
            if g is not None:
                grads[id(node)] = g  # leaf: keep
            continue
        for parent, pg in zip(node.parents, node.grad_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    out = {}
    for name, value in tape.params.items():
        leaf = tape.leaves.get(name)
        g = grads.get(id(leaf)) if leaf is not None else None
        out[name] = np.zeros_like(value) if g is None else np.asarray(g, dtype=np.float64).reshape(value.shape)
    return out


# -- fused layer ops -------------------------------------------------------

def dense(x: Node, w: Node, b: Node) -> Node:
    xv, wv = x.value, w.value
    need_x = x.requires_grad
    return Node(x.tape, xv @ wv + b.value, (x, w, b),
                lambda g: (g @ wv.T if need_x else None, xv.T @ g, g.sum(axis=0)))


def relu(x: Node) -> Node:
    mask = x.value > 0
    return Node(x.tape, x.value * mask, (x,), lambda g: (g * mask,))


def tanh(x: Node) -> Node:
    y = np.tanh(x.value)
    return Node(x.tape, y, (x,), lambda g: (g * (1.0 - y * y),))


def reshape(x: Node, shape) -> Node:
    old = x.shape
    return Node(x.tape, x.value.reshape(shape), (x,), lambda g: (g.reshape(old),))


def split(x: Node, sizes, axis: int = -1) -> list[Node]:
    """Split along ``axis`` into consecutive pieces of the given sizes."""
    out, start = [], 0
    axis = axis % x.value.ndim
    for size in sizes:
        sl = [slice(None)] * x.value.ndim
        sl[axis] = slice(start, start + size)
        sl = tuple(sl)

        def grad_fn(g, sl=sl, shape=x.shape):
            full = np.zeros(shape)
            full[sl] = g
            return (full,)

        out.append(Node(x.tape, x.value[sl], (x,), grad_fn))
        start += size
    return out


def concat(nodes, axis: int = -1) -> Node:
    nodes = list(nodes)
    tape = nodes[0].tape
    sizes = [n.shape[axis] for n in nodes]
    bounds = np.cumsum([0] + sizes)

    def grad_fn(g):
        return tuple(np.take(g, range(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(nodes)))

    return Node(tape, np.concatenate([n.value for n in nodes], axis=axis), tuple(nodes), grad_fn)


def reparameterize(mu: Node, logvar: Node, noise: np.ndarray) -> Node:
    """``z = mu + exp(logvar / 2) * noise``."""
    std = np.exp(0.5 * logvar.value)
    return Node(mu.tape, mu.value + std * noise, (mu, logvar),
                lambda g: (g, g * noise * std * 0.5))


def bernoulli_log_likelihood(logits: Node, x: np.ndarray) -> Node:
    """Per-example ``sum_pixels x log p + (1 - x) log(1 - p)`` with ``p = sigmoid(logits)``."""
    lv = logits.value
    # x*l - softplus(l), computed stably
    ll = x * lv - (np.maximum(lv, 0.0) + np.log1p(np.exp(-np.abs(lv))))
    axes = tuple(range(1, lv.ndim))
    p = 0.5 * (1.0 + np.tanh(0.5 * lv))

    def grad_fn(g):
        return ((x - p) * g.reshape(g.shape + (1,) * len(axes)),)

    return Node(logits.tape, ll.sum(axis=axes), (logits,), grad_fn)


def gaussian_kl(mu: Node, logvar: Node) -> Node:
    """Elementwise ``KL(N(mu, exp(logvar)) || N(0, 1))``."""
    m, lv = mu.value, logvar.value
    var = np.exp(lv)
    return Node(mu.tape, 0.5 * (m * m + var - 1.0 - lv), (mu, logvar),
                lambda g: (g * m, g * 0.5 * (var - 1.0)))


# -- convolutions: 4x4 kernels, stride 2, padding 1 -------------------------

_K, _S, _P = 4, 2, 1


def _im2col(xp: np.ndarray, ho: int, wo: int) -> np.ndarray:
    b, c = xp.shape[:2]
    cols = np.empty((b, ho, wo, c, _K, _K))
    for i in range(_K):
        for j in range(_K):
            cols[:, :, :, :, i, j] = xp[:, :, i : i + _S * ho : _S, j : j + _S * wo : _S].transpose(0, 2, 3, 1)
    return cols.reshape(b * ho * wo, c * _K * _K)


def _col2im(cols: np.ndarray, b: int, c: int, ho: int, wo: int, hp: int, wp: int) -> np.ndarray:
    cols = cols.reshape(b, ho, wo, c, _K, _K)
    xp = np.zeros((b, c, hp, wp))
    for i in range(_K):
        for j in range(_K):
            xp[:, :, i : i + _S * ho : _S, j : j + _S * wo : _S] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return xp


def conv2d(x: Node, w: Node, b: Node) -> Node:
    """``x``: (B, C, H, W); ``w``: (Cout, C, 4, 4) -> (B, Cout, H/2, W/2)."""
    xv, wv = x.value, w.value
    bsz, c, h, wd = xv.shape
    cout = wv.shape[0]
    ho, wo = h // _S, wd // _S
    xp = np.pad(xv, ((0, 0), (0, 0), (_P, _P), (_P, _P)))
    cols = _im2col(xp, ho, wo)
    wm = wv.reshape(cout, -1)
    out = (cols @ wm.T + b.value).reshape(bsz, ho, wo, cout).transpose(0, 3, 1, 2)

    need_x = x.requires_grad

    def grad_fn(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(-1, cout)
        dw = (g2.T @ cols).reshape(wv.shape)
        if not need_x:
            return None, dw, g2.sum(axis=0)
        dxp = _col2im(g2 @ wm, bsz, c, ho, wo, h + 2 * _P, wd + 2 * _P)
        return dxp[:, :, _P : _P + h, _P : _P + wd], dw, g2.sum(axis=0)

    return Node(x.tape, out, (x, w, b), grad_fn)


def conv_transpose2d(x: Node, w: Node, b: Node) -> Node:
    """Adjoint of :func:`conv2d`: ``x`` (B, Cin, H, W); ``w`` (Cin, Cout, 4, 4) -> (B, Cout, 2H, 2W)."""
    xv, wv = x.value, w.value
    bsz, cin, h, wd = xv.shape
    cout = wv.shape[1]
    ho, wo = 2 * h, 2 * wd
    wm = wv.reshape(cin, -1)
    xm = xv.transpose(0, 2, 3, 1).reshape(-1, cin)
    yp = _col2im(xm @ wm, bsz, cout, h, wd, ho + 2 * _P, wo + 2 * _P)
    out = yp[:, :, _P : _P + ho, _P : _P + wo] + b.value.reshape(1, -1, 1, 1)

    def grad_fn(g):
        gp = np.pad(g, ((0, 0), (0, 0), (_P, _P), (_P, _P)))
        cols = _im2col(gp, h, wd)
        dx = (cols @ wm.T).reshape(bsz, h, wd, cin).transpose(0, 3, 1, 2)
        dw = (xm.T @ cols).reshape(wv.shape)
        return dx, dw, g.sum(axis=(0, 2, 3))

    return Node(x.tape, out, (x, w, b), grad_fn)
