import numpy as np
import pytest

from qintent import models, nn, train_eval
from qintent.corpus import TokenizedQuery
from qintent.embedding import build_one_hot
from qintent.gold import GoldSet
from qintent.weak_label import IntentDistribution, build_ruleset

from tests.conftest import SYN_SETS, SYN_STOPWORDS, separable_dataset
from tests.oracles import oracle_multi_modal_accuracy


def _examples(n=20):
    return [(TokenizedQuery(tokens=("w%d" % i,)),
             IntentDistribution(weights=(1.0, 0.0, 0.0))) for i in range(n)]


def test_split_sizes_and_partition():
    corpus = _examples(10)
    train, val = train_eval.split(corpus, train_eval.SplitPlan(seed=1))
    assert len(train) == 8 and len(val) == 2
    combined = sorted(q.tokens for q, _ in train + val)
    assert combined == sorted(q.tokens for q, _ in corpus)


def test_split_floor_cut():
    train, val = train_eval.split(_examples(9), train_eval.SplitPlan(seed=1))
    assert (len(train), len(val)) == (7, 2)


def test_split_deterministic_and_seed_sensitive():
    corpus = _examples(40)
    a1 = train_eval.split(corpus, train_eval.SplitPlan(seed=5))
    a2 = train_eval.split(corpus, train_eval.SplitPlan(seed=5))
    b = train_eval.split(corpus, train_eval.SplitPlan(seed=6))
    assert [q.tokens for q, _ in a1[0]] == [q.tokens for q, _ in a2[0]]
    assert [q.tokens for q, _ in a1[0]] != [q.tokens for q, _ in b[0]]


def test_split_rejects_tiny_corpus():
    with pytest.raises(ValueError):
        train_eval.split(_examples(4), train_eval.SplitPlan(seed=0))


def test_split_plan_validates_fraction():
    with pytest.raises(ValueError):
        train_eval.SplitPlan(seed=0, train_fraction=1.0)


def _dist(*w):
    return IntentDistribution(weights=w)


def test_multi_modal_accuracy_support_one():
    t = _dist(1.0, 0.0, 0.0)
    assert train_eval.multi_modal_accuracy((0.51, 0.30, 0.19), t) == 1
    assert train_eval.multi_modal_accuracy((0.50, 0.30, 0.20), t) == 0  # strict
    assert train_eval.multi_modal_accuracy((0.10, 0.80, 0.10), t) == 0


def test_multi_modal_accuracy_support_two():
    t = _dist(0.5, 0.0, 0.5)
    assert train_eval.multi_modal_accuracy((0.26, 0.48, 0.26), t) == 1
    assert train_eval.multi_modal_accuracy((0.26, 0.49, 0.25), t) == 0
    assert train_eval.multi_modal_accuracy((0.90, 0.05, 0.05), t) == 0


def test_multi_modal_accuracy_support_three():
    t = _dist(1 / 3, 1 / 3, 1 / 3)
    assert train_eval.multi_modal_accuracy((1 / 3, 1 / 3, 1 / 3), t) == 1
    assert train_eval.multi_modal_accuracy((0.16, 0.42, 0.42), t) == 0


def test_multi_modal_accuracy_matches_oracle_samples():
    rng = np.random.default_rng(12)
    targets = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0.5, 0.5, 0), (0.5, 0, 0.5),
               (0, 0.5, 0.5), (1 / 3, 1 / 3, 1 / 3)]
    for _ in range(500):
        y = rng.dirichlet(np.ones(3))
        t = targets[rng.integers(0, len(targets))]
        assert train_eval.multi_modal_accuracy(y, _dist(*t)) == \
            oracle_multi_modal_accuracy(y, t)


def _trained(seed=21, n=60, epochs=8):
    examples, slc = separable_dataset(n=n, seed=4)
    emb = build_one_hot(slc)
    train_set, val_set = train_eval.split(examples, train_eval.SplitPlan(seed=seed))
    spec = models.ModelSpec(arch="rnn1", input_dim=emb.dim, seed=seed)
    ckpt = train_eval.train(spec, train_set, val_set, emb, epochs=epochs)
    return ckpt, val_set, emb


def test_train_memorizes_separable_data():
    ckpt, _, _ = _trained()
    assert ckpt.metrics["val_accuracy"] >= 0.9
    assert 0 <= ckpt.epoch < 8
    for _, arr in ckpt.params:
        assert np.isfinite(arr).all()


def test_train_bit_reproducible():
    a, _, _ = _trained(seed=33)
    b, _, _ = _trained(seed=33)
    assert a.fingerprint() == b.fingerprint()
    c, _, _ = _trained(seed=34)
    assert a.fingerprint() != c.fingerprint()


def test_train_rejects_empty_sets():
    examples, slc = separable_dataset(n=10)
    emb = build_one_hot(slc)
    spec = models.ModelSpec(arch="rnn1", input_dim=emb.dim, seed=0)
    with pytest.raises(ValueError):
        train_eval.train(spec, [], examples, emb)
    with pytest.raises(ValueError):
        train_eval.train(spec, examples, [], emb)


def test_train_divergence_raises():
    examples, slc = separable_dataset(n=20, seed=9)
    emb = build_one_hot(slc)
    spec = models.ModelSpec(arch="rnn1", input_dim=emb.dim, seed=0)
    with pytest.raises(nn.DivergenceError):
        with np.errstate(all="ignore"):
            train_eval.train(spec, examples[:16], examples[16:], emb,
                             epochs=3, lr=1e155, momentum=0.0)


def _uniform_checkpoint(input_dim=4):
    spec = models.ModelSpec(arch="rnn1", input_dim=input_dim, seed=0)
    model = models.build(spec)
    for _, p in model.parameters():
        p.data[:] = 0.0
    return nn.Checkpoint(arch="rnn1", input_dim=input_dim, seed=0, epoch=0,
                         params=model.state_arrays())


def _gold_with(entries):
    gs = GoldSet(name="GT-2")
    for tokens, weights in entries:
        qid = " ".join(tokens)
        gs.entries[qid] = IntentDistribution(weights=weights)
        gs.tokens[qid] = tokens
    return gs


def test_evaluate_uniform_model_by_support():
    # a zeroed model predicts (1/3, 1/3, 1/3): wrong at support 1 (thr 0.5),
    # right at supports 2 and 3 (thr 0.25 / 0.16)
    emb = build_one_hot_from_words(["a", "b", "c"])
    gold = _gold_with([
        (("a",), (1.0, 0.0, 0.0)),
        (("b",), (0.5, 0.5, 0.0)),
        (("c",), (1 / 3, 1 / 3, 1 / 3)),
    ])
    report = train_eval.evaluate(_uniform_checkpoint(input_dim=3), gold, emb)
    assert report.accuracy == pytest.approx(100.0 * 2 / 3)
    assert report.evaluated == 3 and report.abstained == 0


def build_one_hot_from_words(words):
    from qintent.corpus import CorpusSlice
    return build_one_hot(CorpusSlice(name="w", records=[TokenizedQuery(tokens=(w,))
                                                        for w in words]))


def test_evaluate_abstention_scores_zero():
    emb = build_one_hot_from_words(["a"])
    gold = _gold_with([(("a",), (0.5, 0.5, 0.0)), (("zzz",), (0.5, 0.5, 0.0))])
    report = train_eval.evaluate(_uniform_checkpoint(input_dim=1), gold, emb)
    assert report.abstained == 1
    assert report.accuracy == pytest.approx(50.0)


def test_evaluate_trained_model_beats_uniform():
    ckpt, val_set, emb = _trained()
    gold = _gold_with([(q.tokens, d.weights) for q, d in val_set])
    report = train_eval.evaluate(ckpt, gold, emb)
    assert report.accuracy >= 90.0
    assert report.epoch_selected == ckpt.epoch


def _rules():
    return build_ruleset("V4", sets=SYN_SETS, stopwords=SYN_STOPWORDS,
                         row_mapping="as-printed")


def test_evaluate_rules_accuracy_and_coverage():
    gold = _gold_with([
        (("buy", "alpha"), (0.0, 1.0, 0.0)),   # labeled, correct
        (("facts", "map"), (1.0, 0.0, 0.0)),   # labeled (I+N), wrong at thr 0.5
        (("zulu",), (0.0, 0.0, 1.0)),          # unlabeled
        (("login",), (0.0, 0.0, 1.0)),         # labeled, correct
    ])
    acc, pct, degenerate = train_eval.evaluate_rules(_rules(), gold)
    assert acc == pytest.approx(100.0 * 2 / 3)
    assert pct == pytest.approx(75.0)
    assert not degenerate


def test_evaluate_rules_degenerate_flag():
    gold = _gold_with([(("zulu",), (1.0, 0.0, 0.0))])
    acc, pct, degenerate = train_eval.evaluate_rules(_rules(), gold)
    assert (acc, pct, degenerate) == (0.0, 0.0, True)


def test_evaluate_rules_empty_gold_errors():
    with pytest.raises(ValueError):
        train_eval.evaluate_rules(_rules(), GoldSet(name="GT-2"))


def test_predict_report_format():
    emb = build_one_hot_from_words(["a"])
    gold = _gold_with([(("a",), (1.0, 0.0, 0.0)), (("zzz",), (0.0, 1.0, 0.0))])
    rows = train_eval.predict_report(_uniform_checkpoint(input_dim=1), gold, emb)
    assert rows[0] == "a\t0.33 0.33 0.33\t1.00 0.00 0.00"
    assert rows[1] == "zzz\tn/a n/a n/a\t0.00 1.00 0.00"


def test_config_fingerprint_stable_and_distinct():
    a = train_eval.config_fingerprint("rnn1", 100, 7)
    b = train_eval.config_fingerprint("rnn1", 100, 7)
    c = train_eval.config_fingerprint("rnn1", 100, 8)
    assert a == b and a != c
    assert len(a) == 16 and all(ch in "0123456789abcdef" for ch in a)
