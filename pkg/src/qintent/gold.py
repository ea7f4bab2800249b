"""Agreement voting over multi-annotator labels into the two gold sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .corpus import tokenize
from .weak_label import INTENTS, IntentDistribution, MultiHotLabel

MULTI_INTENT = "multi-intent"
SINGLE_INTENT = "single-intent"


@dataclass(frozen=True)
class AnnotationRecord:
    query_id: str
    annotator_id: str
    label: MultiHotLabel
    mode: str

    def __post_init__(self):
        if self.mode not in (MULTI_INTENT, SINGLE_INTENT):
            raise ValueError("unknown mode %r" % self.mode)
        if self.mode == SINGLE_INTENT and sum(self.label.bits) != 1:
            raise ValueError("single-intent annotation must set exactly one bit")


@dataclass
class GoldSet:
    name: str
    entries: Dict[str, IntentDistribution] = field(default_factory=dict)
    tokens: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    excluded: Dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def intent_counts(self) -> Tuple[int, int, int]:
        counts = [0, 0, 0]
        for d in self.entries.values():
            for i, w in enumerate(d.weights):
                if w > 0:
                    counts[i] += 1
        return tuple(counts)


def _check_triple(labels: Sequence[AnnotationRecord]) -> None:
    if len(labels) != 3:
        raise ValueError("expected exactly 3 annotations, got %d" % len(labels))
    qids = {r.query_id for r in labels}
    if len(qids) != 1:
        raise ValueError("annotations span multiple queries: %r" % qids)
    if len({r.annotator_id for r in labels}) != 3:
        raise ValueError("duplicate annotator in %r" % qids)


def aggregate_gt2(labels: Sequence[AnnotationRecord]) -> Optional[IntentDistribution]:
    """Include class c iff at least 2 of 3 annotators set it; uniform over included."""
    _check_triple(labels)
    votes = [sum(r.label.bits[i] for r in labels) for i in range(3)]
    included = [1 if v >= 2 else 0 for v in votes]
    k = sum(included)
    if k == 0:
        return None
    return IntentDistribution(weights=tuple(b / k for b in included))


def aggregate_gt3(labels: Sequence[AnnotationRecord]) -> Optional[IntentDistribution]:
    """Include the query iff all three bit-vectors are identical (hence one-hot)."""
    _check_triple(labels)
    bit_vectors = {r.label.bits for r in labels}
    if len(bit_vectors) != 1:
        return None
    bits = next(iter(bit_vectors))
    if sum(bits) != 1:
        # identical multi-bit vectors cannot happen with a single-intent
        # third annotator, but guard against malformed input anyway
        return None
    return IntentDistribution(weights=tuple(float(b) for b in bits))


def parse_annotation_file(source) -> List[AnnotationRecord]:
    """One record per line: `query_id<TAB>annotator_id<TAB>i,t,n<TAB>mode`."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        out = []
        for line in source:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            qid, aid, bits_raw, mode = line.split("\t")
            bits = tuple(int(b) for b in bits_raw.split(","))
            out.append(AnnotationRecord(query_id=qid, annotator_id=aid,
                                        label=MultiHotLabel(bits=bits), mode=mode))
        return out
    finally:
        if close_after:
            source.close()


def build_gold(annotations, queries: Optional[Dict[str, str]] = None) -> Tuple[GoldSet, GoldSet]:
    """Apply both aggregators to every query of an annotation file or record list.

    `queries` optionally maps query_id to raw query text, attaching tokens to
    the gold entries so rule evaluators can consume them. Queries without
    exactly 3 annotations land in the validation report (excluded, both sets).
    """
    if not isinstance(annotations, list) or (annotations and not isinstance(annotations[0], AnnotationRecord)):
        annotations = parse_annotation_file(annotations)
    by_query: Dict[str, List[AnnotationRecord]] = {}
    order: List[str] = []
    for rec in annotations:
        if rec.query_id not in by_query:
            order.append(rec.query_id)
        by_query.setdefault(rec.query_id, []).append(rec)

    gt2 = GoldSet(name="GT-2")
    gt3 = GoldSet(name="GT-3")
    for qid in order:
        recs = by_query[qid]
        if len(recs) != 3:
            reason = "expected 3 annotations, got %d" % len(recs)
            gt2.excluded[qid] = reason
            gt3.excluded[qid] = reason
            continue
        toks: Optional[Tuple[str, ...]] = None
        if queries and qid in queries:
            toks = tokenize(queries[qid]).tokens
        d2 = aggregate_gt2(recs)
        if d2 is None:
            gt2.excluded[qid] = "no class reached 2 votes"
        else:
            gt2.entries[qid] = d2
            if toks:
                gt2.tokens[qid] = toks
        d3 = aggregate_gt3(recs)
        if d3 is None:
            gt3.excluded[qid] = "annotators disagree"
        else:
            gt3.entries[qid] = d3
            if toks:
                gt3.tokens[qid] = toks
    return gt2, gt3


def write_gold(gold: GoldSet, target) -> None:
    """Gold export, same layout as the labeled-corpus format."""
    close_after = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        target = open(target, "w", encoding="utf-8")
        close_after = True
    try:
        for qid, d in gold.entries.items():
            text = " ".join(gold.tokens.get(qid, (qid,)))
            target.write("%s\t%.6f,%.6f,%.6f\n" % (text, d.weights[0], d.weights[1], d.weights[2]))
    finally:
        if close_after:
            target.close()


def read_gold(source, name: str = "GT") -> GoldSet:
    """Load a gold export; query tokens double as the query id."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        gold = GoldSet(name=name)
        for line in source:
            line = line.rstrip("\n")
            if not line:
                continue
            text, weights_raw = line.split("\t")
            raw = [float(x) for x in weights_raw.split(",")]
            total = sum(raw)
            gold.entries[text] = IntentDistribution(weights=tuple(x / total for x in raw))
            gold.tokens[text] = tuple(text.split(" "))
        return gold
    finally:
        if close_after:
            source.close()
