"""Training protocol, checkpoint selection and evaluation metrics."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import models, nn
from .corpus import TokenizedQuery
from .embedding import EmbeddingTable
from .gold import GoldSet
from .nn import autograd as ag
from .weak_label import IntentDistribution, KeywordRuleSet, label_query, to_distribution

LabeledExample = Tuple[TokenizedQuery, IntentDistribution]

THRESH_BY_SUPPORT = {1: 0.5, 2: 0.25, 3: 0.16}


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    train_fraction: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass
class EvalReport:
    dataset: str = ""
    labeling: str = ""
    arch: str = ""
    embedding: str = ""
    accuracy: float = 0.0
    evaluated: int = 0
    abstained: int = 0
    epoch_selected: int = -1
    fingerprint: str = ""


def split(corpus: Sequence[LabeledExample], plan: SplitPlan) -> Tuple[List[LabeledExample], List[LabeledExample]]:
    """Seeded uniform shuffle, then cut at floor(train_fraction * n)."""
    if len(corpus) < 5:
        raise ValueError("corpus too small to split (%d entries)" % len(corpus))
    order = list(range(len(corpus)))
    random.Random(plan.seed).shuffle(order)
    cut = int(plan.train_fraction * len(corpus))
    train = [corpus[i] for i in order[:cut]]
    val = [corpus[i] for i in order[cut:]]
    return train, val


def multi_modal_accuracy(y, t: IntentDistribution) -> int:
    """1 iff every gold-positive class's probability strictly exceeds the
    support-size threshold (0.5 / 0.25 / 0.16)."""
    yw = y.weights if isinstance(y, IntentDistribution) else np.asarray(y)
    thr = THRESH_BY_SUPPORT[t.support()]
    for yc, tc in zip(yw, t.weights):
        if tc > 0 and not (yc > thr):
            return 0
    return 1


def _example_loss_and_probs(model: models.Model, ex: LabeledExample,
                            emb: EmbeddingTable) -> Tuple[Optional[ag.Tensor], Optional[np.ndarray]]:
    probs = model.forward_query(ex[0], emb)
    if probs is None:
        return None, None
    loss = ag.cross_entropy(probs, np.array(ex[1].weights))
    return loss, probs.data


def _validation_metrics(model: models.Model, val: Sequence[LabeledExample],
                        emb: EmbeddingTable) -> Tuple[float, float]:
    """(multi-modal accuracy in [0,1], mean loss); abstentions score 0."""
    correct = 0
    losses = []
    for ex in val:
        loss, probs = _example_loss_and_probs(model, ex, emb)
        if probs is None:
            continue
        losses.append(float(loss.data))
        correct += multi_modal_accuracy(probs, ex[1])
    acc = correct / len(val) if val else 0.0
    mean_loss = float(np.mean(losses)) if losses else float("inf")
    return acc, mean_loss


def train(spec: models.ModelSpec,
          train_set: Sequence[LabeledExample],
          val_set: Sequence[LabeledExample],
          emb: EmbeddingTable,
          epochs: int = 20,
          lr: float = 0.01,
          momentum: float = 0.9) -> nn.Checkpoint:
    """Per-example SGD on cross-entropy; returns the best-validation checkpoint.

    Ties break toward lower validation loss, then the earlier epoch. The
    per-epoch example order reshuffles with a seed derived from (spec.seed,
    epoch) so runs are bit-reproducible. On divergence the last finite
    checkpoint is wrapped in the raised error.
    """
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    model = models.build(spec)
    opt = nn.SGD(model.parameters(), lr=lr, momentum=momentum)

    best: Optional[nn.Checkpoint] = None
    best_key: Optional[Tuple[float, float, int]] = None
    last_finite = _snapshot(model, spec, epoch=-1, metrics={})
    for epoch in range(epochs):
        order = list(range(len(train_set)))
        random.Random(spec.seed * 100003 + epoch).shuffle(order)
        for i in order:
            loss, _ = _example_loss_and_probs(model, train_set[i], emb)
            if loss is None:
                continue
            if not np.isfinite(loss.data):
                raise nn.DivergenceError(
                    "non-finite loss at epoch %d; last finite checkpoint epoch %d"
                    % (epoch, last_finite.epoch))
            opt.zero_grad()
            loss.backward()
            opt.step()
        acc, val_loss = _validation_metrics(model, val_set, emb)
        last_finite = _snapshot(model, spec, epoch,
                                {"val_accuracy": acc, "val_loss": val_loss})
        key = (-acc, val_loss, epoch)
        if best_key is None or key < best_key:
            best_key = key
            best = last_finite
    assert best is not None
    return best


def _snapshot(model: models.Model, spec: models.ModelSpec, epoch: int,
              metrics: Dict[str, float]) -> nn.Checkpoint:
    return nn.Checkpoint(arch=spec.arch, input_dim=spec.input_dim, seed=spec.seed,
                         epoch=epoch, metrics=dict(metrics), params=model.state_arrays())


def evaluate(ckpt: nn.Checkpoint, gold: GoldSet, emb: EmbeddingTable) -> EvalReport:
    """Mean multi-modal accuracy over the gold set, in percent.

    Queries with no embedded token abstain and score 0; the abstention count
    is reported separately.
    """
    model = models.from_checkpoint(ckpt)
    correct = 0
    abstained = 0
    n = 0
    for qid, target in gold.entries.items():
        tokens = gold.tokens.get(qid, tuple(qid.split(" ")))
        n += 1
        probs = model.forward_query(TokenizedQuery(tokens=tokens), emb)
        if probs is None:
            abstained += 1
            continue
        correct += multi_modal_accuracy(probs.data, target)
    acc = 100.0 * correct / n if n else 0.0
    return EvalReport(dataset=gold.name, arch=ckpt.arch,
                      accuracy=acc, evaluated=n, abstained=abstained,
                      epoch_selected=ckpt.epoch)


def evaluate_rules(rules: KeywordRuleSet, gold: GoldSet) -> Tuple[float, float, bool]:
    """(accuracy %, percent labeled %, degenerate-flag) of direct rule labels.

    Accuracy averages over labeled queries only, scoring the uniform
    distribution of the rule label against the gold distribution. When the
    rules label nothing, accuracy is reported as 0 with the flag set.
    """
    if not gold.entries:
        raise ValueError("gold set is empty")
    labeled = 0
    correct = 0
    for qid, target in gold.entries.items():
        tokens = gold.tokens.get(qid, tuple(qid.split(" ")))
        label = label_query(TokenizedQuery(tokens=tokens), rules)
        if label is None:
            continue
        labeled += 1
        correct += multi_modal_accuracy(to_distribution(label), target)
    percent = 100.0 * labeled / len(gold.entries)
    if labeled == 0:
        return 0.0, 0.0, True
    return 100.0 * correct / labeled, percent, False


def predict_report(ckpt: nn.Checkpoint, gold: GoldSet, emb: EmbeddingTable) -> List[str]:
    """One row per gold query: tokens, predicted I/T/N to 2 decimals, gold I/T/N."""
    model = models.from_checkpoint(ckpt)
    rows = []
    for qid, target in gold.entries.items():
        tokens = gold.tokens.get(qid, tuple(qid.split(" ")))
        probs = model.forward_query(TokenizedQuery(tokens=tokens), emb)
        if probs is None:
            pred = ("n/a", "n/a", "n/a")
        else:
            pred = tuple("%.2f" % p for p in probs.data)
        row = "%s\t%s\t%s" % (" ".join(tokens), " ".join(pred),
                              " ".join("%.2f" % w for w in target.weights))
        rows.append(row)
    return rows


def config_fingerprint(*parts) -> str:
    blob = "\x1f".join(repr(p) for p in parts)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
