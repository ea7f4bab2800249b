"""The four classifier architectures assembled from the nn primitives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import nn
from .corpus import TokenizedQuery
from .embedding import EmbeddingTable
from .nn import autograd as ag
from .nn.autograd import Tensor

ARCHS = ("rnn1", "rnn2", "rnn3", "cnn1")

RNN1_HIDDEN = 101
RNN2_HIDDEN = 100
RNN3_HIDDEN = 100
CNN_KERNEL_HEIGHTS = (1, 2, 3, 4)
CNN_KERNEL_WIDTH = 3
CNN_MAPS = 100
CNN_SEQ_LEN = 4
CNN_CONV1D_OUT = 10
CNN_FC_HIDDEN = 50
N_CLASSES = 3


@dataclass(frozen=True)
class ModelSpec:
    arch: str
    input_dim: int
    seed: int = 0

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError("unknown arch %r" % self.arch)
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.arch == "cnn1" and self.input_dim < CNN_KERNEL_WIDTH:
            raise ValueError("cnn1 needs input_dim >= %d" % CNN_KERNEL_WIDTH)


def param_shapes(spec: ModelSpec) -> List[Tuple[str, Tuple[int, ...]]]:
    """Named parameter shapes per architecture; count_params and build agree."""
    e = spec.input_dim
    if spec.arch == "rnn1":
        h = RNN1_HIDDEN
        return [
            ("cell.w_ih", (h, e)), ("cell.b_ih", (h,)),
            ("cell.w_hh", (h, h)), ("cell.b_hh", (h,)),
            ("out.w", (N_CLASSES, h)), ("out.b", (N_CLASSES,)),
        ]
    if spec.arch == "rnn2":
        h = RNN2_HIDDEN
        return [
            ("cell.w_ih", (h, e)), ("cell.b_ih", (h,)),
            ("cell.w_hh", (h, h)), ("cell.b_hh", (h,)),
            ("fc1.w", (h, h)), ("fc1.b", (h,)),
            ("out.w", (N_CLASSES, h)), ("out.b", (N_CLASSES,)),
        ]
    if spec.arch == "rnn3":
        h = RNN3_HIDDEN
        return [
            ("lstm1.w_ih", (4 * h, e)), ("lstm1.b_ih", (4 * h,)),
            ("lstm1.w_hh", (4 * h, h)), ("lstm1.b_hh", (4 * h,)),
            ("lstm2.w_ih", (4 * h, h)), ("lstm2.b_ih", (4 * h,)),
            ("lstm2.w_hh", (4 * h, h)), ("lstm2.b_hh", (4 * h,)),
            ("fc1.w", (h, h)), ("fc1.b", (h,)),
            ("fc2.w", (h, h)), ("fc2.b", (h,)),
            ("out.w", (N_CLASSES, h)), ("out.b", (N_CLASSES,)),
        ]
    # cnn1
    shapes: List[Tuple[str, Tuple[int, ...]]] = []
    for kh in CNN_KERNEL_HEIGHTS:
        shapes.append(("conv%dx%d.k" % (kh, CNN_KERNEL_WIDTH), (CNN_MAPS, kh * CNN_KERNEL_WIDTH)))
        shapes.append(("conv%dx%d.b" % (kh, CNN_KERNEL_WIDTH), (CNN_MAPS,)))
    shapes.append(("conv1d.k", (CNN_CONV1D_OUT, CNN_MAPS)))
    shapes.append(("conv1d.b", (CNN_CONV1D_OUT,)))
    flat = CNN_CONV1D_OUT * (e - CNN_KERNEL_WIDTH + 1)
    shapes.append(("fc1.w", (CNN_FC_HIDDEN, flat)))
    shapes.append(("fc1.b", (CNN_FC_HIDDEN,)))
    shapes.append(("out.w", (N_CLASSES, CNN_FC_HIDDEN)))
    shapes.append(("out.b", (N_CLASSES,)))
    return shapes


def count_params(spec: ModelSpec) -> int:
    return sum(int(np.prod(shape)) for _, shape in param_shapes(spec))


class Model:
    """A built network graph: owns parameters and runs per-query forwards."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        e = spec.input_dim
        if spec.arch == "rnn1":
            self.cell = nn.RnnCell(e, RNN1_HIDDEN, rng, nonlinearity="identity", name="cell")
            self.out = nn.Linear(RNN1_HIDDEN, N_CLASSES, rng, name="out")
            self._layers = [self.cell, self.out]
        elif spec.arch == "rnn2":
            self.cell = nn.RnnCell(e, RNN2_HIDDEN, rng, nonlinearity="identity", name="cell")
            self.fc1 = nn.Linear(RNN2_HIDDEN, RNN2_HIDDEN, rng, name="fc1")
            self.out = nn.Linear(RNN2_HIDDEN, N_CLASSES, rng, name="out")
            self._layers = [self.cell, self.fc1, self.out]
        elif spec.arch == "rnn3":
            self.lstm1 = nn.LstmCell(e, RNN3_HIDDEN, rng, name="lstm1")
            self.lstm2 = nn.LstmCell(RNN3_HIDDEN, RNN3_HIDDEN, rng, name="lstm2")
            self.fc1 = nn.Linear(RNN3_HIDDEN, RNN3_HIDDEN, rng, name="fc1")
            self.fc2 = nn.Linear(RNN3_HIDDEN, RNN3_HIDDEN, rng, name="fc2")
            self.out = nn.Linear(RNN3_HIDDEN, N_CLASSES, rng, name="out")
            self._layers = [self.lstm1, self.lstm2, self.fc1, self.fc2, self.out]
        else:
            self.convs = [nn.Conv2d(1, CNN_MAPS, kh, CNN_KERNEL_WIDTH, rng,
                                    name="conv%dx%d" % (kh, CNN_KERNEL_WIDTH))
                          for kh in CNN_KERNEL_HEIGHTS]
            self.conv1d = nn.Conv1d(CNN_MAPS, CNN_CONV1D_OUT, 1, rng, name="conv1d")
            flat = CNN_CONV1D_OUT * (e - CNN_KERNEL_WIDTH + 1)
            self.fc1 = nn.Linear(flat, CNN_FC_HIDDEN, rng, name="fc1")
            self.out = nn.Linear(CNN_FC_HIDDEN, N_CLASSES, rng, name="out")
            self._layers = self.convs + [self.conv1d, self.fc1, self.out]

    def parameters(self) -> List[Tuple[str, Tensor]]:
        out = []
        for layer in self._layers:
            out.extend(layer.parameters())
        return out

    def forward(self, embedded: List[np.ndarray]) -> Tensor:
        """Probability vector from a list of per-token embedding vectors."""
        if not embedded:
            raise ValueError("forward needs at least one embedded token")
        arch = self.spec.arch
        if arch == "rnn1":
            h = self.cell.initial_state()
            for vec in embedded:
                h = self.cell(Tensor(vec), h)
            return ag.softmax(self.out(h))
        if arch == "rnn2":
            h = self.cell.initial_state()
            for vec in embedded:
                h = self.cell(Tensor(vec), h)
            h = ag.relu(h)
            return ag.softmax(self.out(self.fc1(h)))
        if arch == "rnn3":
            s1 = self.lstm1.initial_state()
            s2 = self.lstm2.initial_state()
            for vec in embedded:
                s1 = self.lstm1(Tensor(vec), s1)
                s2 = self.lstm2(s1[0], s2)
            h = ag.relu(s2[0])
            return ag.softmax(self.out(self.fc2(self.fc1(h))))
        # cnn1: pad/truncate to the fixed 4-token map
        e = self.spec.input_dim
        rows = list(embedded[:CNN_SEQ_LEN])
        while len(rows) < CNN_SEQ_LEN:
            rows.append(np.zeros(e))
        x = Tensor(np.stack(rows).reshape(1, CNN_SEQ_LEN, e))
        maps = [ag.relu(conv(x)) for conv in self.convs]     # (100, 5-kh, e-2) each
        stacked = ag.concat(maps, axis=1)                    # (100, 10, e-2)
        pooled = nn.max_over_time(stacked, time_axis=1)      # (100, e-2)
        reduced = ag.relu(self.conv1d(pooled))               # (10, e-2)
        flat = ag.reshape(reduced, (-1,))
        hid = ag.relu(self.fc1(flat))
        return ag.softmax(self.out(hid))

    def forward_query(self, query: TokenizedQuery, emb: EmbeddingTable) -> Optional[Tensor]:
        """Forward over a tokenized query; OOV tokens are skipped.

        Returns None (abstain) when no token has an embedding.
        """
        embedded = []
        for tok in query.tokens:
            vec = emb.lookup(tok)
            if vec is not None:
                embedded.append(vec)
        if not embedded:
            return None
        return self.forward(embedded)

    def state_arrays(self) -> List[Tuple[str, np.ndarray]]:
        return [(name, p.data.copy()) for name, p in self.parameters()]

    def load_state(self, arrays: List[Tuple[str, np.ndarray]]) -> None:
        table: Dict[str, np.ndarray] = dict(arrays)
        for name, p in self.parameters():
            if name not in table:
                raise ValueError("missing parameter %r in state" % name)
            if table[name].shape != p.data.shape:
                raise ValueError("shape mismatch for %r" % name)
            p.data = table[name].copy()


def build(spec: ModelSpec) -> Model:
    return Model(spec)


def from_checkpoint(ckpt: nn.Checkpoint) -> Model:
    model = build(ModelSpec(arch=ckpt.arch, input_dim=ckpt.input_dim, seed=ckpt.seed))
    model.load_state(ckpt.params)
    return model
