"""Parameterized layers built on the autograd core."""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from . import autograd as ag
from .autograd import Tensor


def _uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    def parameters(self) -> List[Tuple[str, Tensor]]:
        raise NotImplementedError


class Linear(Layer):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str = "linear"):
        self.name = name
        self.w = Tensor(_uniform_init(rng, (out_dim, in_dim), in_dim), requires_grad=True, name=name + ".w")
        self.b = Tensor(_uniform_init(rng, (out_dim,), in_dim), requires_grad=True, name=name + ".b")

    def __call__(self, x: Tensor) -> Tensor:
        return ag.add(ag.matmul(self.w, x), self.b)

    def parameters(self):
        return [(self.w.name, self.w), (self.b.name, self.b)]


class RnnCell(Layer):
    """h' = f(W_ih x + b_ih + W_hh h + b_hh); two bias vectors by convention."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator,
                 nonlinearity: str = "identity", name: str = "rnn"):
        if nonlinearity not in ("identity", "relu"):
            raise ValueError("unsupported nonlinearity %r" % nonlinearity)
        self.name = name
        self.hidden = hidden
        self.nonlinearity = nonlinearity
        self.w_ih = Tensor(_uniform_init(rng, (hidden, in_dim), in_dim), requires_grad=True, name=name + ".w_ih")
        self.b_ih = Tensor(_uniform_init(rng, (hidden,), in_dim), requires_grad=True, name=name + ".b_ih")
        self.w_hh = Tensor(_uniform_init(rng, (hidden, hidden), hidden), requires_grad=True, name=name + ".w_hh")
        self.b_hh = Tensor(_uniform_init(rng, (hidden,), hidden), requires_grad=True, name=name + ".b_hh")

    def __call__(self, x: Tensor, h_prev: Tensor) -> Tensor:
        pre = ag.add(ag.add(ag.matmul(self.w_ih, x), self.b_ih),
                     ag.add(ag.matmul(self.w_hh, h_prev), self.b_hh))
        if self.nonlinearity == "relu":
            return ag.relu(pre)
        return pre

    def initial_state(self) -> Tensor:
        return Tensor(np.zeros(self.hidden))

    def parameters(self):
        return [(t.name, t) for t in (self.w_ih, self.b_ih, self.w_hh, self.b_hh)]


class LstmCell(Layer):
    """Standard LSTM with the 4h preactivation split in gate order (i, f, g, o)."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, name: str = "lstm"):
        self.name = name
        self.hidden = hidden
        self.w_ih = Tensor(_uniform_init(rng, (4 * hidden, in_dim), in_dim), requires_grad=True, name=name + ".w_ih")
        self.b_ih = Tensor(_uniform_init(rng, (4 * hidden,), in_dim), requires_grad=True, name=name + ".b_ih")
        self.w_hh = Tensor(_uniform_init(rng, (4 * hidden, hidden), hidden), requires_grad=True, name=name + ".w_hh")
        self.b_hh = Tensor(_uniform_init(rng, (4 * hidden,), hidden), requires_grad=True, name=name + ".b_hh")

    def __call__(self, x: Tensor, state: Tuple[Tensor, Tensor]) -> Tuple[Tensor, Tensor]:
        h_prev, c_prev = state
        pre = ag.add(ag.add(ag.matmul(self.w_ih, x), self.b_ih),
                     ag.add(ag.matmul(self.w_hh, h_prev), self.b_hh))
        hh = self.hidden
        idx = np.arange(4 * hh)
        i = ag.sigmoid(ag.take(pre, idx[0 * hh:1 * hh]))
        f = ag.sigmoid(ag.take(pre, idx[1 * hh:2 * hh]))
        g = ag.tanh(ag.take(pre, idx[2 * hh:3 * hh]))
        o = ag.sigmoid(ag.take(pre, idx[3 * hh:4 * hh]))
        c = ag.add(ag.mul(f, c_prev), ag.mul(i, g))
        h = ag.mul(o, ag.tanh(c))
        return h, c

    def initial_state(self) -> Tuple[Tensor, Tensor]:
        return Tensor(np.zeros(self.hidden)), Tensor(np.zeros(self.hidden))

    def parameters(self):
        return [(t.name, t) for t in (self.w_ih, self.b_ih, self.w_hh, self.b_hh)]


def _patch_indices(in_shape, kh: int, kw: int) -> Tuple[np.ndarray, int, int]:
    """Flat gather indices turning a (C,H,W) input into im2col patches."""
    c, h, w = in_shape
    oh, ow = h - kh + 1, w - kw + 1
    if oh < 1 or ow < 1:
        raise ValueError("kernel %dx%d larger than input %dx%d" % (kh, kw, h, w))
    rows = []
    for y in range(oh):
        for x in range(ow):
            patch = []
            for ci in range(c):
                for dy in range(kh):
                    for dx in range(kw):
                        patch.append(ci * h * w + (y + dy) * w + (x + dx))
            rows.append(patch)
    return np.array(rows), oh, ow


class Conv2d(Layer):
    """Cross-correlation, valid padding, stride 1, via im2col gather + matmul."""

    def __init__(self, in_ch: int, out_ch: int, kh: int, kw: int,
                 rng: np.random.Generator, name: str = "conv2d"):
        self.name = name
        self.in_ch, self.out_ch, self.kh, self.kw = in_ch, out_ch, kh, kw
        fan_in = in_ch * kh * kw
        self.k = Tensor(_uniform_init(rng, (out_ch, fan_in), fan_in), requires_grad=True, name=name + ".k")
        self.b = Tensor(_uniform_init(rng, (out_ch,), fan_in), requires_grad=True, name=name + ".b")
        self._idx_cache = {}

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[0] != self.in_ch:
            raise ValueError("expected %d input channels, got %d" % (self.in_ch, x.shape[0]))
        key = x.shape
        if key not in self._idx_cache:
            self._idx_cache[key] = _patch_indices(x.shape, self.kh, self.kw)
        idx, oh, ow = self._idx_cache[key]
        patches = ag.take(x, idx)                      # (oh*ow, fan_in)
        out = ag.matmul(patches, ag.transpose(self.k, (1, 0)))  # (oh*ow, out_ch)
        bias = ag.reshape(self.b, (1, self.out_ch))
        out = ag.add(out, _broadcast_rows(bias, oh * ow))
        out = ag.transpose(ag.reshape(out, (oh, ow, self.out_ch)), (2, 0, 1))
        return out                                     # (out_ch, oh, ow)

    def parameters(self):
        return [(self.k.name, self.k), (self.b.name, self.b)]


class Conv1d(Layer):
    """1-D cross-correlation over (channels, length), valid padding, stride 1."""

    def __init__(self, in_ch: int, out_ch: int, k: int,
                 rng: np.random.Generator, name: str = "conv1d"):
        self.name = name
        self.in_ch, self.out_ch, self.ksz = in_ch, out_ch, k
        fan_in = in_ch * k
        self.k = Tensor(_uniform_init(rng, (out_ch, fan_in), fan_in), requires_grad=True, name=name + ".k")
        self.b = Tensor(_uniform_init(rng, (out_ch,), fan_in), requires_grad=True, name=name + ".b")
        self._idx_cache = {}

    def __call__(self, x: Tensor) -> Tensor:
        c, length = x.shape
        if c != self.in_ch:
            raise ValueError("expected %d input channels, got %d" % (self.in_ch, c))
        ol = length - self.ksz + 1
        if ol < 1:
            raise ValueError("kernel %d larger than input length %d" % (self.ksz, length))
        if x.shape not in self._idx_cache:
            rows = []
            for pos in range(ol):
                patch = []
                for ci in range(c):
                    for d in range(self.ksz):
                        patch.append(ci * length + pos + d)
                rows.append(patch)
            self._idx_cache[x.shape] = np.array(rows)
        idx = self._idx_cache[x.shape]
        patches = ag.take(x, idx)                      # (ol, fan_in)
        out = ag.matmul(patches, ag.transpose(self.k, (1, 0)))
        bias = ag.reshape(self.b, (1, self.out_ch))
        out = ag.add(out, _broadcast_rows(bias, ol))
        return ag.transpose(out, (1, 0))               # (out_ch, ol)

    def parameters(self):
        return [(self.k.name, self.k), (self.b.name, self.b)]


def _broadcast_rows(row: Tensor, n: int) -> Tensor:
    """Repeat a (1, d) tensor to (n, d) with gradient summing back."""
    d = row.shape[1]
    idx = np.tile(np.arange(d), (n, 1))
    return ag.take(row, idx)


def max_over_time(feature_map: Tensor, time_axis: int = 1) -> Tensor:
    return ag.max_along(feature_map, axis=time_axis)
