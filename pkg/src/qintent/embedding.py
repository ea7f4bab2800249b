"""Word-vector tables (pretrained text format and one-hot) plus distances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from .corpus import CorpusSlice

SQUARED_L2 = "squared-l2"
L1 = "l1"
COSINE = "cosine"
DISTANCE_KINDS = (SQUARED_L2, L1, COSINE)


class EmbeddingTable:
    """Immutable word -> vector map with a declared dimension.

    One-hot tables keep only the hot index per word and materialize unit
    vectors on lookup.
    """

    def __init__(self, dim: int, kind: str = "pretrained"):
        if dim <= 0:
            raise ValueError("dim must be positive")
        if kind not in ("pretrained", "one-hot"):
            raise ValueError("unknown table kind %r" % kind)
        self.dim = dim
        self.kind = kind
        self._vectors: Dict[str, np.ndarray] = {}
        self._hot: Dict[str, int] = {}
        self.duplicates = 0

    def __contains__(self, word: str) -> bool:
        return word in self._vectors or word in self._hot

    def __len__(self) -> int:
        return len(self._hot) if self.kind == "one-hot" else len(self._vectors)

    def words(self) -> Iterable[str]:
        return self._hot.keys() if self.kind == "one-hot" else self._vectors.keys()

    def lookup(self, word: str) -> Optional[np.ndarray]:
        if self.kind == "one-hot":
            idx = self._hot.get(word)
            if idx is None:
                return None
            vec = np.zeros(self.dim)
            vec[idx] = 1.0
            return vec
        return self._vectors.get(word)

    def hot_index(self, word: str) -> Optional[int]:
        return self._hot.get(word)


def load_pretrained(source, expected_dim: Optional[int] = None) -> EmbeddingTable:
    """Load the published GloVe/fastText text layout: `word v1 ... vd` per line."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        table: Optional[EmbeddingTable] = None
        for lineno, line in enumerate(source, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            word = parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise ValueError("non-numeric vector component on line %d" % lineno)
            if table is None:
                dim = len(vec)
                if expected_dim is not None and dim != expected_dim:
                    raise ValueError(
                        "dimension mismatch: expected %d, file has %d (line %d)"
                        % (expected_dim, dim, lineno))
                table = EmbeddingTable(dim=dim, kind="pretrained")
            if len(vec) != table.dim:
                raise ValueError(
                    "inconsistent dimension on line %d: %d != %d" % (lineno, len(vec), table.dim))
            if word in table._vectors:
                table.duplicates += 1
                continue
            table._vectors[word] = vec
        if table is None:
            raise ValueError("empty embedding file")
        return table
    finally:
        if close_after:
            source.close()


def build_one_hot(slc: CorpusSlice) -> EmbeddingTable:
    """Vocabulary in first-appearance order; word i maps to unit vector e_i."""
    if not slc.records:
        raise ValueError("cannot build one-hot table from an empty slice")
    hot: Dict[str, int] = {}
    for q in slc.records:
        for tok in q.tokens:
            if tok not in hot:
                hot[tok] = len(hot)
    table = EmbeddingTable(dim=len(hot), kind="one-hot")
    table._hot = hot
    return table


def export_one_hot(table: EmbeddingTable, target) -> None:
    close_after = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        target = open(target, "w", encoding="utf-8")
        close_after = True
    try:
        for word, idx in sorted(table._hot.items(), key=lambda kv: kv[1]):
            target.write("%s\t%d\n" % (word, idx))
    finally:
        if close_after:
            target.close()


def load_one_hot(source) -> EmbeddingTable:
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        hot: Dict[str, int] = {}
        for line in source:
            line = line.rstrip("\n")
            if not line:
                continue
            word, idx = line.split("\t")
            hot[word] = int(idx)
        table = EmbeddingTable(dim=len(hot), kind="one-hot")
        table._hot = hot
        return table
    finally:
        if close_after:
            source.close()


def distance(u: np.ndarray, v: np.ndarray, kind: str) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vector length mismatch: %s vs %s" % (u.shape, v.shape))
    if kind == SQUARED_L2:
        d = u - v
        return float(np.dot(d, d))
    if kind == L1:
        return float(np.abs(u - v).sum())
    if kind == COSINE:
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu == 0.0 or nv == 0.0:
            raise ValueError("cosine distance undefined for the zero vector")
        return 1.0 - float(np.dot(u, v)) / (nu * nv)
    raise ValueError("unknown distance kind %r" % kind)


@dataclass
class SimilarResult:
    matches: List[Tuple[str, float]] = field(default_factory=list)
    query_word_oov: bool = False


def similar_words(word: str, candidates: Iterable[str], emb: EmbeddingTable,
                  kind: str, threshold: float) -> SimilarResult:
    """Candidates within `threshold` of `word`; exact equality is distance 0.

    Exact string matches are reported even when the candidate has no embedding.
    A query word without an embedding yields an empty, flagged result.
    """
    result = SimilarResult()
    cands = list(candidates)
    for c in cands:
        if c == word:
            result.matches.append((c, 0.0))
    wv = emb.lookup(word)
    if wv is None:
        result.query_word_oov = True
        return result
    for c in cands:
        if c == word:
            continue
        cv = emb.lookup(c)
        if cv is None:
            continue
        d = distance(wv, cv, kind)
        if d <= threshold:
            result.matches.append((c, d))
    return result
