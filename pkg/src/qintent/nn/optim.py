"""SGD with classical momentum."""

from __future__ import annotations

from typing import Iterable, List, Tuple

import numpy as np

from .autograd import Tensor


class DivergenceError(RuntimeError):
    """Raised when a gradient goes non-finite during optimization."""


class SGD:
    """v <- mu * v + g; theta <- theta - lr * v."""

    def __init__(self, params: Iterable[Tuple[str, Tensor]], lr: float = 0.01, momentum: float = 0.9):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 <= momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        self.lr = lr
        self.momentum = momentum
        self.params: List[Tuple[str, Tensor]] = list(params)
        self.velocity = {name: np.zeros_like(p.data) for name, p in self.params}

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.zero_grad()

    def step(self) -> None:
        for name, p in self.params:
            g = p.grad
            if g is None:
                continue
            if not np.isfinite(g).all():
                raise DivergenceError("non-finite gradient in %s (|g|max=%s)" % (name, np.abs(g).max()))
            v = self.velocity[name]
            v *= self.momentum
            v += g
            p.data -= self.lr * v
