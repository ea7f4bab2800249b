import numpy as np
import pytest

from qintent.corpus import TokenizedQuery
from qintent.embedding import EmbeddingTable
from qintent.gold import MULTI_INTENT, SINGLE_INTENT, AnnotationRecord
from qintent.weak_label import MultiHotLabel

# ---------------------------------------------------------------------------
# Seven-query agreement fixture: (text, annotator1, annotator2, annotator3,
# expected GT-2 weights or None, expected GT-3 weights or None)
AGREEMENT_FIXTURE = [
    ("map of maine towns", (0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 1)),
    ("what to do hervey bay", (1, 0, 1), (1, 0, 0), (0, 0, 1), (0.5, 0, 0.5), None),
    ("when is the best time to fish", (1, 0, 0), (1, 0, 0), (1, 0, 0), (1, 0, 0), (1, 0, 0)),
    ("ex demo cars for sale", (0, 1, 0), (0, 1, 0), (0, 1, 0), (0, 1, 0), (0, 1, 0)),
    ("new homes for sale bournemouth", (0, 1, 1), (0, 1, 1), (0, 1, 0), (0, 0.5, 0.5), None),
    ("australia inheritance tax", (1, 0, 0), (1, 1, 0), (1, 0, 0), (1, 0, 0), None),
    ("banking for you", (0, 1, 0), (0, 0, 1), (1, 0, 0), None, None),
]


def agreement_records():
    records = []
    queries = {}
    for i, (text, a1, a2, a3, _, _) in enumerate(AGREEMENT_FIXTURE):
        qid = "q%d" % i
        queries[qid] = text
        for aid, bits, mode in (("ann1", a1, MULTI_INTENT), ("ann2", a2, MULTI_INTENT),
                                ("ann3", a3, SINGLE_INTENT)):
            records.append(AnnotationRecord(query_id=qid, annotator_id=aid,
                                            label=MultiHotLabel(bits=bits), mode=mode))
    return records, queries


@pytest.fixture
def agreement_fixture():
    return agreement_records()


# ---------------------------------------------------------------------------
# Synthetic keyword sets and embedding space for labeler tests. The three
# vocabularies are disjoint so rule labels are unambiguous.
SYN_SETS = {
    "informational": frozenset({"howto", "facts", "guide", "explain", "definition",
                                "history", "how much"}),
    "transactional": frozenset({"buy", "cheap", "order", "price", "rent", "discount",
                                "pay as you go"}),
    "navigational": frozenset({"website", "login", "map", "directions", "homepage",
                               "address"}),
}
SYN_SYNONYMS = {
    "buy": frozenset({"purchase"}),
    "map": frozenset({"atlas"}),
    "guide": frozenset({"manual"}),
}
SYN_STOPWORDS = frozenset({"the", "a", "of", "for", "to", "as", "you", "go"})

FILLERS = ["alpha", "bravo", "delta", "omega", "zulu", "tango", "lima", "echo"]

# similarity-only words: within squared-L2 threshold 1.0 of a keyword
NEIGHBORS = {"procure": "buy", "roadmap": "map", "tutorial": "guide"}


def synthetic_embedding(dim: int = 4) -> EmbeddingTable:
    """Deterministic table where distinct words are far apart except the
    declared neighbor pairs, which sit within squared-L2 distance 1."""
    words = sorted(set().union(*SYN_SETS.values()) - {"how much", "pay as you go"})
    words += sorted(set().union(*SYN_SYNONYMS.values()))
    words += FILLERS + list(SYN_STOPWORDS)
    table = EmbeddingTable(dim=dim, kind="pretrained")
    rng = np.random.default_rng(20240811)
    for w in words:
        if w not in table._vectors:
            table._vectors[w] = rng.uniform(-10, 10, dim)
    for w, anchor in NEIGHBORS.items():
        table._vectors[w] = table._vectors[anchor] + 0.3
    return table


def synthetic_corpus(n: int = 200, seed: int = 7):
    """(query, true-intent-or-None) pairs covering all labeler paths."""
    rng = np.random.default_rng(seed)
    by_intent = {
        "I": sorted(SYN_SETS["informational"] - {"how much"}),
        "T": sorted(SYN_SETS["transactional"] - {"pay as you go"}),
        "N": sorted(SYN_SETS["navigational"]),
    }
    def insert_at_random(toks, extra):
        # contiguous insertion keeps multi-word phrases matchable
        pos = int(rng.integers(0, len(toks) + 1))
        return toks[:pos] + extra + toks[pos:]

    out = []
    for i in range(n):
        roll = rng.random()
        toks = list(rng.choice(FILLERS, size=rng.integers(1, 4), replace=False))
        if roll < 0.60:  # single intent keyword
            intent = "ITN"[rng.integers(0, 3)]
            toks = insert_at_random(toks, [by_intent[intent][rng.integers(0, len(by_intent[intent]))]])
            intents = {intent}
        elif roll < 0.78:  # two intents
            a, b = rng.choice(["I", "T", "N"], size=2, replace=False)
            toks = insert_at_random(toks, [by_intent[a][rng.integers(0, len(by_intent[a]))]])
            toks = insert_at_random(toks, [by_intent[b][rng.integers(0, len(by_intent[b]))]])
            intents = {a, b}
        elif roll < 0.86:  # multi-word phrase
            phrase = ["how", "much"] if rng.random() < 0.5 else ["pay", "as", "you", "go"]
            toks = insert_at_random(toks, phrase)
            intents = {"I"} if phrase[0] == "how" else {"T"}
        elif roll < 0.94:  # similarity-only neighbor word
            word = sorted(NEIGHBORS)[rng.integers(0, len(NEIGHBORS))]
            toks = insert_at_random(toks, [word])
            intents = None
        else:  # no keywords at all
            intents = None
        out.append((TokenizedQuery(tokens=tuple(toks)), intents))
    return out


def separable_dataset(n: int = 100, seed: int = 3):
    """Linearly separable single-intent training corpus over a tiny vocabulary.

    Each query uses words from exactly one intent's vocabulary, so a model
    over one-hot embeddings can memorize the mapping. Returns (examples,
    slice) where examples are (TokenizedQuery, IntentDistribution) pairs.
    """
    from qintent.corpus import CorpusSlice
    from qintent.weak_label import IntentDistribution

    vocab = {intent: ["%s%d" % (intent, i) for i in range(8)] for intent in "itn"}
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        intent = "itn"[i % 3]
        k = int(rng.integers(1, 4))
        toks = tuple(rng.choice(vocab[intent], size=k, replace=False))
        weights = tuple(1.0 if c == intent else 0.0 for c in "itn")
        examples.append((TokenizedQuery(tokens=toks), IntentDistribution(weights=weights)))
    slc = CorpusSlice(name="separable", records=[q for q, _ in examples])
    return examples, slc


@pytest.fixture
def syn_emb():
    return synthetic_embedding()


@pytest.fixture
def syn_corpus():
    return synthetic_corpus()
