"""Tiny reverse-mode autodiff over float64 numpy arrays."""

from __future__ import annotations

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

EPS_LOG = 1e-12


class Tensor:
    """A node in the computation graph wrapping a float64 ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False,
                 parents: Tuple["Tensor", ...] = (),
                 backward: Optional[Callable[[np.ndarray], None]] = None,
                 name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() starts from a scalar loss")
        topo: List[Tensor] = []
        seen = set()

        def visit(node: Tensor) -> None:
            stack = [(node, False)]
            while stack:
                cur, done = stack.pop()
                if done:
                    topo.append(cur)
                    continue
                if id(cur) in seen:
                    continue
                seen.add(id(cur))
                stack.append((cur, True))
                for p in cur._parents:
                    stack.append((p, False))

        visit(self)
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return "Tensor(shape=%s, requires_grad=%s)" % (self.data.shape, self.requires_grad)

    # convenience operator forms
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unary(x: Tensor, out_data: np.ndarray, grad_fn: Callable[[np.ndarray], np.ndarray]) -> Tensor:
    out = Tensor(out_data, parents=(x,))
    out._backward = lambda g: x._accumulate(grad_fn(g))
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError("add shape mismatch: %s vs %s" % (a.shape, b.shape))
    out = Tensor(a.data + b.data, parents=(a, b))

    def bwd(g):
        a._accumulate(g)
        b._accumulate(g)

    out._backward = bwd
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError("mul shape mismatch: %s vs %s" % (a.shape, b.shape))
    out = Tensor(a.data * b.data, parents=(a, b))

    def bwd(g):
        a._accumulate(g * b.data)
        b._accumulate(g * a.data)

    out._backward = bwd
    return out


def scale(x: Tensor, c: float) -> Tensor:
    x = as_tensor(x)
    return _unary(x, x.data * c, lambda g: g * c)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data, parents=(a, b))
    an, bn = a.data.ndim, b.data.ndim

    def bwd(g):
        if an == 1 and bn == 1:
            ga, gb = float(g) * b.data, float(g) * a.data
        elif an == 2 and bn == 2:
            ga, gb = g @ b.data.T, a.data.T @ g
        elif an == 2 and bn == 1:
            ga, gb = np.outer(g, b.data), a.data.T @ g
        else:  # an == 1, bn == 2
            ga, gb = g @ b.data.T, np.outer(a.data, g)
        a._accumulate(ga)
        b._accumulate(gb)

    out._backward = bwd
    return out


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    mask = (x.data > 0).astype(np.float64)
    return _unary(x, x.data * mask, lambda g: g * mask)


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _unary(x, y, lambda g: g * (1.0 - y * y))


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    y = 1.0 / (1.0 + np.exp(-x.data))
    return _unary(x, y, lambda g: g * y * (1.0 - y))


def reshape(x: Tensor, shape) -> Tensor:
    x = as_tensor(x)
    return _unary(x, x.data.reshape(shape), lambda g: g.reshape(x.shape))


def transpose(x: Tensor, axes) -> Tensor:
    x = as_tensor(x)
    inv = np.argsort(axes)
    return _unary(x, x.data.transpose(axes), lambda g: g.transpose(inv))


def take(x: Tensor, flat_indices: np.ndarray) -> Tensor:
    """Gather from the flattened input; backward scatters with accumulation."""
    x = as_tensor(x)
    idx = np.asarray(flat_indices)
    out_data = x.data.reshape(-1)[idx]

    def grad_fn(g):
        gx = np.zeros(x.data.size)
        np.add.at(gx, idx.reshape(-1), g.reshape(-1))
        return gx.reshape(x.shape)

    return _unary(x, out_data, grad_fn)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis), parents=tuple(parts))
    sizes = [p.data.shape[axis] for p in parts]

    def bwd(g):
        offset = 0
        for p, s in zip(parts, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + s)
            p._accumulate(g[tuple(sl)])
            offset += s

    out._backward = bwd
    return out


def max_along(x: Tensor, axis: int) -> Tensor:
    """Max reduction; gradient flows to the first argmax along the axis."""
    x = as_tensor(x)
    out_data = x.data.max(axis=axis)
    arg = np.expand_dims(x.data.argmax(axis=axis), axis)

    def grad_fn(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, arg, np.expand_dims(g, axis), axis)
        return gx

    return _unary(x, out_data, grad_fn)


def sum_all(x: Tensor) -> Tensor:
    x = as_tensor(x)
    return _unary(x, np.array(x.data.sum()), lambda g: np.full(x.shape, float(g)))


def softmax(x: Tensor) -> Tensor:
    """Numerically stable softmax over a 1-D tensor."""
    x = as_tensor(x)
    z = x.data - x.data.max()
    e = np.exp(z)
    y = e / e.sum()

    def grad_fn(g):
        return y * (g - float(np.dot(g, y)))

    return _unary(x, y, grad_fn)


def cross_entropy(y: Tensor, target: np.ndarray) -> Tensor:
    """-sum(t * ln y) over a probability vector; zero probabilities are
    clamped at 1e-12 (the `clamped` attribute-free flag is the return's name)."""
    y = as_tensor(y)
    t = np.asarray(target, dtype=np.float64)
    clamped = np.maximum(y.data, EPS_LOG)
    loss = -float(np.sum(t * np.log(clamped)))

    def grad_fn(g):
        gy = np.where(y.data >= EPS_LOG, -t / clamped, 0.0)
        return float(g) * gy

    out = _unary(y, np.array(loss), grad_fn)
    out.name = "cross-entropy(clamped)" if (y.data < EPS_LOG).any() and (t > 0).any() else "cross-entropy"
    return out
