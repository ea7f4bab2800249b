"""Automatic labelers v1-v8, the external-label import adapter and stats."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .corpus import CorpusSlice, TokenizedQuery
from .embedding import EmbeddingTable, distance

INTENTS = ("I", "T", "N")
_INTENT_IDX = {"I": 0, "T": 1, "N": 2}

LAST_MATCH_SINGLE = "last-match-single"
ALL_MATCHES = "all-matches"
SIMILARITY = "similarity"
SIMILARITY_EXACT_FIRST = "similarity-exact-first"

MAX_PHRASE_WORDS = 4


@dataclass(frozen=True)
class MultiHotLabel:
    bits: Tuple[int, int, int]

    def __post_init__(self):
        if not any(self.bits):
            raise ValueError("label must set at least one intent bit")

    @classmethod
    def from_intents(cls, intents: Iterable[str]) -> "MultiHotLabel":
        bits = [0, 0, 0]
        for it in intents:
            bits[_INTENT_IDX[it]] = 1
        return cls(bits=tuple(bits))

    def intents(self) -> Tuple[str, ...]:
        return tuple(it for it, b in zip(INTENTS, self.bits) if b)


@dataclass(frozen=True)
class IntentDistribution:
    weights: Tuple[float, float, float]

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1, got %r" % (self.weights,))

    def support(self) -> int:
        return sum(1 for w in self.weights if w > 0)

    def bits(self) -> Tuple[int, int, int]:
        return tuple(1 if w > 0 else 0 for w in self.weights)


def to_distribution(label: MultiHotLabel) -> IntentDistribution:
    k = sum(label.bits)
    return IntentDistribution(weights=tuple(b / k for b in label.bits))


@dataclass
class KeywordRuleSet:
    informational: FrozenSet[str]
    transactional: FrozenSet[str]
    navigational: FrozenSet[str]
    version: str = "V4"
    stopwords: FrozenSet[str] = frozenset()
    synonyms: Dict[str, FrozenSet[str]] = field(default_factory=dict)
    match_policy: str = ALL_MATCHES
    emb_ref: Optional[EmbeddingTable] = None
    dist: Optional[str] = None
    threshold: Optional[float] = None
    row_mapping: str = "swapped-TN"
    exclusion: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.match_policy in (SIMILARITY, SIMILARITY_EXACT_FIRST):
            if self.emb_ref is None or self.dist is None or self.threshold is None:
                raise ValueError("similarity policies need emb_ref, dist and threshold")
        self._effective: Optional[Dict[str, FrozenSet[str]]] = None

    def effective_sets(self) -> Dict[str, FrozenSet[str]]:
        """Phrase sets after row mapping and synonym expansion."""
        if self._effective is not None:
            return self._effective
        sets = {"I": self.informational, "T": self.transactional, "N": self.navigational}
        if self.row_mapping == "swapped-TN":
            sets = {"I": sets["I"], "T": sets["N"], "N": sets["T"]}
        elif self.row_mapping != "as-printed":
            raise ValueError("unknown row_mapping %r" % self.row_mapping)
        if self.synonyms:
            expanded = {}
            for intent, phrases in sets.items():
                extra: Set[str] = set()
                for p in phrases:
                    extra.update(self.synonyms.get(p, ()))
                expanded[intent] = frozenset(phrases | extra)
            sets = expanded
        self._effective = sets
        return sets


@dataclass
class LabelingStats:
    total_labeled: int = 0
    per_intent: Tuple[int, int, int] = (0, 0, 0)
    dropped: int = 0


def load_keyword_file(source) -> Dict[str, FrozenSet[str]]:
    """Sections [informational]/[transactional]/[navigational], one phrase per line."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        sets: Dict[str, Set[str]] = {"informational": set(), "transactional": set(), "navigational": set()}
        current: Optional[str] = None
        for line in source:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                if current not in sets:
                    raise ValueError("unknown section %r" % current)
                continue
            if current is None:
                raise ValueError("phrase before any section: %r" % line)
            phrase = line.lower()
            if len(phrase.split()) > MAX_PHRASE_WORDS:
                raise ValueError("phrase longer than %d words: %r" % (MAX_PHRASE_WORDS, phrase))
            sets[current].add(phrase)
        return {k: frozenset(v) for k, v in sets.items()}
    finally:
        if close_after:
            source.close()


def load_synonyms(source) -> Dict[str, FrozenSet[str]]:
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        out: Dict[str, FrozenSet[str]] = {}
        for line in source:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            phrase, syns = line.split("\t")
            out[phrase.lower()] = frozenset(s.strip().lower() for s in syns.split(",") if s.strip())
        return out
    finally:
        if close_after:
            source.close()


def load_stopwords(source) -> FrozenSet[str]:
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        return frozenset(line.strip().lower() for line in source if line.strip() and not line.startswith("#"))
    finally:
        if close_after:
            source.close()


def _bundled(name: str) -> str:
    return str(resources.files("qintent.data").joinpath(name))


def default_stopwords() -> FrozenSet[str]:
    return load_stopwords(_bundled("stopwords.txt"))


def default_sets(which: str = "v4") -> Dict[str, FrozenSet[str]]:
    return load_keyword_file(_bundled("%s.kws" % which))


def default_synonyms() -> Dict[str, FrozenSet[str]]:
    return load_synonyms(_bundled("synonyms.txt"))


def build_ruleset(version: str,
                  sets: Optional[Dict[str, FrozenSet[str]]] = None,
                  stopwords: Optional[FrozenSet[str]] = None,
                  synonyms: Optional[Dict[str, FrozenSet[str]]] = None,
                  emb: Optional[EmbeddingTable] = None,
                  dist: Optional[str] = None,
                  threshold: Optional[float] = None,
                  row_mapping: str = "swapped-TN",
                  extra_sets: Optional[Dict[str, FrozenSet[str]]] = None,
                  exclusion: FrozenSet[str] = frozenset()) -> KeywordRuleSet:
    """Assemble the ruleset matching one labeler version's semantics.

    v1/v2 use the compact seed sets without stopword filtering; v3 adds
    imported top-word statistics and stopwords; v4 switches to the curated
    sets; v5 adds synonyms; v6/v7 add embedding similarity (v7 exact-first).
    """
    version = version.upper()
    if sets is None:
        sets = default_sets("v1" if version in ("V1", "V2", "V3") else "v4")
    if extra_sets:
        sets = {k: frozenset(sets[k] | extra_sets.get(k, frozenset())) for k in sets}
    if stopwords is None:
        stopwords = frozenset() if version in ("V1", "V2") else default_stopwords()
    use_syn = version in ("V5", "V6", "V7", "V8")
    if synonyms is None:
        synonyms = default_synonyms() if use_syn else {}
    policy = {
        "V1": LAST_MATCH_SINGLE,
        "V2": ALL_MATCHES,
        "V3": ALL_MATCHES,
        "V4": ALL_MATCHES,
        "V5": ALL_MATCHES,
        "V6": SIMILARITY,
        "V7": SIMILARITY_EXACT_FIRST,
        "V8": SIMILARITY_EXACT_FIRST,
    }[version]
    return KeywordRuleSet(
        informational=sets["informational"],
        transactional=sets["transactional"],
        navigational=sets["navigational"],
        version=version,
        stopwords=stopwords,
        synonyms=synonyms if use_syn else {},
        match_policy=policy,
        emb_ref=emb,
        dist=dist,
        threshold=threshold,
        row_mapping=row_mapping,
        exclusion=exclusion,
    )


def top_words_by_intent(labels: Dict[str, MultiHotLabel],
                        queries: Dict[str, TokenizedQuery],
                        stopwords: FrozenSet[str],
                        k: int = 50) -> Dict[str, FrozenSet[str]]:
    """Rank words of externally-labeled queries by per-intent frequency.

    Used to augment the v3 sets. Ties break alphabetically for determinism.
    """
    counts = {it: Counter() for it in INTENTS}
    for qid, label in labels.items():
        q = queries.get(qid)
        if q is None:
            continue
        for intent in label.intents():
            for tok in q.tokens:
                if tok not in stopwords:
                    counts[intent][tok] += 1
    name = {"I": "informational", "T": "transactional", "N": "navigational"}
    out = {}
    for intent in INTENTS:
        ranked = sorted(counts[intent].items(), key=lambda kv: (-kv[1], kv[0]))
        out[name[intent]] = frozenset(w for w, _ in ranked[:k])
    return out


def match_phrases(query: TokenizedQuery, rules: KeywordRuleSet) -> List[Tuple[str, str, int]]:
    """All phrase-set hits over the query's 1..4-grams.

    Stopword tokens never match as unigrams; at a given start position only
    the longest matching n-grams are kept.
    """
    sets = rules.effective_sets()
    tokens = query.tokens
    out: List[Tuple[str, str, int]] = []
    for start in range(len(tokens)):
        best: List[Tuple[str, str, int]] = []
        best_n = 0
        for n in range(1, min(MAX_PHRASE_WORDS, len(tokens) - start) + 1):
            phrase = " ".join(tokens[start:start + n])
            if n == 1 and phrase in rules.stopwords:
                continue
            for intent in INTENTS:
                if phrase in sets[intent]:
                    if n > best_n:
                        best = [(phrase, intent, start)]
                        best_n = n
                    elif n == best_n:
                        best.append((phrase, intent, start))
        out.extend(best)
    return out


def label_v1(query: TokenizedQuery, rules: KeywordRuleSet) -> Optional[MultiHotLabel]:
    """Single intent of the keyword match appearing last in the query."""
    matches = match_phrases(query, rules)
    if not matches:
        return None
    last_pos = max(pos for _, _, pos in matches)
    for intent in INTENTS:
        if any(pos == last_pos and it == intent for _, it, pos in matches):
            return MultiHotLabel.from_intents([intent])
    return None


def label_multi(query: TokenizedQuery, rules: KeywordRuleSet) -> Optional[MultiHotLabel]:
    """Union of intents over all matches (v2-v5 semantics)."""
    matches = match_phrases(query, rules)
    if not matches:
        return None
    return MultiHotLabel.from_intents({it for _, it, _ in matches})


def _similarity_intents(query: TokenizedQuery, rules: KeywordRuleSet) -> Set[str]:
    """Intents hit by embedding-distance matching of unigram keywords."""
    sets = rules.effective_sets()
    emb = rules.emb_ref
    hit: Set[str] = set()
    for tok in query.tokens:
        if tok in rules.stopwords:
            continue
        tv = emb.lookup(tok)
        if tv is None:
            continue
        for intent in INTENTS:
            if intent in hit:
                continue
            for phrase in sets[intent]:
                if " " in phrase or phrase in rules.exclusion:
                    continue
                if phrase == tok:
                    hit.add(intent)
                    break
                pv = emb.lookup(phrase)
                if pv is None:
                    continue
                if distance(tv, pv, rules.dist) <= rules.threshold:
                    hit.add(intent)
                    break
    return hit


def label_similarity(query: TokenizedQuery, rules: KeywordRuleSet) -> Optional[MultiHotLabel]:
    """v6: exact n-gram hits plus within-threshold unigram neighbors.

    v7 (exact-first): when the query has at least one exact hit, only exact
    hits count; similarity is consulted only on queries with zero exact hits.
    """
    exact = {it for _, it, _ in match_phrases(query, rules)}
    if rules.match_policy == SIMILARITY_EXACT_FIRST and exact:
        return MultiHotLabel.from_intents(exact)
    sim = _similarity_intents(query, rules)
    intents = exact | sim
    if not intents:
        return None
    return MultiHotLabel.from_intents(intents)


def label_query(query: TokenizedQuery, rules: KeywordRuleSet) -> Optional[MultiHotLabel]:
    if rules.match_policy == LAST_MATCH_SINGLE:
        return label_v1(query, rules)
    if rules.match_policy == ALL_MATCHES:
        return label_multi(query, rules)
    if rules.match_policy in (SIMILARITY, SIMILARITY_EXACT_FIRST):
        return label_similarity(query, rules)
    raise ValueError("unknown match policy %r" % rules.match_policy)


def label_corpus(slc: CorpusSlice, rules: KeywordRuleSet):
    """Label every query; returns (list of (query, label-or-None), stats)."""
    out = []
    per = [0, 0, 0]
    labeled = 0
    for q in slc.records:
        label = label_query(q, rules)
        out.append((q, label))
        if label is not None:
            labeled += 1
            for i, b in enumerate(label.bits):
                per[i] += b
    stats = LabelingStats(total_labeled=labeled, per_intent=tuple(per),
                          dropped=len(slc.records) - labeled)
    return out, stats


def labeling_stats(labels: Iterable[Optional[MultiHotLabel]]) -> LabelingStats:
    per = [0, 0, 0]
    labeled = 0
    dropped = 0
    for label in labels:
        if label is None:
            dropped += 1
            continue
        labeled += 1
        for i, b in enumerate(label.bits):
            per[i] += b
    return LabelingStats(total_labeled=labeled, per_intent=tuple(per), dropped=dropped)


def hamming_against_gold(rules: KeywordRuleSet, gold) -> Tuple[int, float]:
    """Total per-class bit disagreements vs a gold set, plus percent labeled.

    An unlabeled query counts every set gold bit as a disagreement, penalizing
    non-coverage.
    """
    total = 0
    labeled = 0
    n = 0
    for qid, dist_t in gold.entries.items():
        tokens = gold.tokens.get(qid)
        if tokens is None:
            continue
        n += 1
        gold_bits = dist_t.bits()
        label = label_query(TokenizedQuery(tokens=tuple(tokens)), rules)
        if label is None:
            total += sum(gold_bits)
            continue
        labeled += 1
        total += sum(1 for a, b in zip(label.bits, gold_bits) if a != b)
    pct = labeled / n if n else 0.0
    return total, pct


@dataclass(frozen=True)
class GridConfig:
    embedding: str
    dist: str
    threshold: float


def grid_search_v8(gold,
                   embeddings: Sequence[Tuple[str, EmbeddingTable]],
                   kinds: Sequence[str],
                   thresholds: Sequence[float],
                   base_rules: KeywordRuleSet) -> List[Tuple[GridConfig, int, float]]:
    """Rank (embedding, distance, threshold) configs by Hamming distance to gold.

    Ties break by embedding order, then kind order, then smaller threshold.
    Each entry also carries the fraction of gold queries the config labeled.
    """
    if not gold.entries:
        raise ValueError("gold set is empty")
    if not embeddings or not kinds or not thresholds:
        raise ValueError("grid axes must be non-empty")
    results = []
    for ei, (ename, etable) in enumerate(embeddings):
        for ki, kind in enumerate(kinds):
            for thr in sorted(thresholds):
                rules = replace(base_rules, emb_ref=etable, dist=kind, threshold=thr,
                                match_policy=SIMILARITY_EXACT_FIRST)
                ham, pct = hamming_against_gold(rules, gold)
                results.append((ham, ei, ki, thr, GridConfig(ename, kind, thr), pct))
    results.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return [(cfg, ham, pct) for ham, _, _, _, cfg, pct in results]


def import_ext1(source) -> Tuple[Dict[str, MultiHotLabel], int]:
    """Parse an external `id<TAB>i,t,n` label file; returns (labels, skipped)."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        out: Dict[str, MultiHotLabel] = {}
        skipped = 0
        for line in source:
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                qid, bits_raw = line.split("\t")
                bits = tuple(int(b) for b in bits_raw.split(","))
                if len(bits) != 3 or any(b not in (0, 1) for b in bits):
                    raise ValueError
                out[qid] = MultiHotLabel(bits=bits)
            except ValueError:
                skipped += 1
        return out, skipped
    finally:
        if close_after:
            source.close()


def write_labeled_corpus(labeled: Iterable[Tuple[TokenizedQuery, Optional[MultiHotLabel]]], target) -> None:
    """Labeled-corpus format: `query-tokens<TAB>i,t,n` soft weights, 6 decimals."""
    close_after = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        target = open(target, "w", encoding="utf-8")
        close_after = True
    try:
        for q, label in labeled:
            if label is None:
                continue
            w = to_distribution(label).weights
            target.write("%s\t%.6f,%.6f,%.6f\n" % (q.text(), w[0], w[1], w[2]))
    finally:
        if close_after:
            target.close()


def read_labeled_corpus(source) -> List[Tuple[TokenizedQuery, IntentDistribution]]:
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        out = []
        for line in source:
            line = line.rstrip("\n")
            if not line:
                continue
            text, weights_raw = line.split("\t")
            raw = [float(x) for x in weights_raw.split(",")]
            total = sum(raw)
            weights = tuple(x / total for x in raw)
            out.append((TokenizedQuery(tokens=tuple(text.split(" "))), IntentDistribution(weights=weights)))
        return out
    finally:
        if close_after:
            source.close()
