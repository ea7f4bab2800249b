"""Lossless text checkpoints: header plus named float64 parameter arrays."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np


@dataclass
class Checkpoint:
    arch: str
    input_dim: int
    seed: int
    epoch: int
    metrics: Dict[str, float] = field(default_factory=dict)
    params: List[Tuple[str, np.ndarray]] = field(default_factory=list)

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps(self).encode("utf-8")).hexdigest()


def dumps(ckpt: Checkpoint) -> str:
    buf = io.StringIO()
    buf.write("# qintent checkpoint v1\n")
    buf.write("arch: %s\n" % ckpt.arch)
    buf.write("input_dim: %d\n" % ckpt.input_dim)
    buf.write("seed: %d\n" % ckpt.seed)
    buf.write("epoch: %d\n" % ckpt.epoch)
    for k in sorted(ckpt.metrics):
        buf.write("metric %s: %.17g\n" % (k, ckpt.metrics[k]))
    for name, arr in ckpt.params:
        buf.write("param %s %s\n" % (name, "x".join(str(d) for d in arr.shape)))
        buf.write(" ".join("%.17g" % v for v in arr.reshape(-1)) + "\n")
    return buf.getvalue()


def save(ckpt: Checkpoint, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(ckpt))


def loads(text: str) -> Checkpoint:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# qintent checkpoint"):
        raise ValueError("not a checkpoint file")
    ckpt = Checkpoint(arch="", input_dim=0, seed=0, epoch=0)
    i = 1
    while i < len(lines):
        line = lines[i]
        if line.startswith("param "):
            _, name, shape_raw = line.split(" ")
            shape = tuple(int(d) for d in shape_raw.split("x")) if shape_raw else ()
            values = np.array([float(v) for v in lines[i + 1].split(" ")], dtype=np.float64)
            ckpt.params.append((name, values.reshape(shape)))
            i += 2
            continue
        if line.startswith("metric "):
            key, val = line[len("metric "):].split(": ")
            ckpt.metrics[key] = float(val)
        elif line.startswith("arch: "):
            ckpt.arch = line[len("arch: "):]
        elif line.startswith("input_dim: "):
            ckpt.input_dim = int(line[len("input_dim: "):])
        elif line.startswith("seed: "):
            ckpt.seed = int(line[len("seed: "):])
        elif line.startswith("epoch: "):
            ckpt.epoch = int(line[len("epoch: "):])
        i += 1
    return ckpt


def load(path) -> Checkpoint:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
