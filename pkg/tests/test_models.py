import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qintent import models
from qintent.corpus import TokenizedQuery
from qintent.embedding import EmbeddingTable


def closed_form(arch, e):
    if arch == "rnn1":
        h = 101
        return h * e + h + h * h + h + 3 * h + 3
    if arch == "rnn2":
        h = 100
        return h * e + h + h * h + h + h * h + h + 3 * h + 3
    if arch == "rnn3":
        h = 100
        lstm1 = 4 * h * e + 4 * h + 4 * h * h + 4 * h
        lstm2 = 4 * h * h + 4 * h + 4 * h * h + 4 * h
        return lstm1 + lstm2 + 2 * (h * h + h) + 3 * h + 3
    maps, kw, c1 = 100, 3, 10
    convs = sum(maps * (kh * kw) + maps for kh in (1, 2, 3, 4))
    conv1d = c1 * maps + c1
    flat = c1 * (e - kw + 1)
    return convs + conv1d + 50 * flat + 50 + 3 * 50 + 3


@pytest.mark.parametrize("arch,e,expected", [
    ("rnn1", 100, 20_809), ("rnn1", 300, 41_009), ("rnn1", 48_692, 4_928_601),
    ("rnn3", 100, 182_103), ("rnn3", 300, 262_103), ("rnn3", 48_692, 19_618_903),
    ("cnn1", 100, 53_613), ("cnn1", 300, 153_613), ("cnn1", 48_692, 24_349_613),
])
def test_reference_parameter_counts(arch, e, expected):
    assert models.count_params(models.ModelSpec(arch=arch, input_dim=e)) == expected


@pytest.mark.parametrize("arch", models.ARCHS)
@pytest.mark.parametrize("e", [3, 17, 100])
def test_count_matches_closed_form_and_built_model(arch, e):
    spec = models.ModelSpec(arch=arch, input_dim=e)
    assert models.count_params(spec) == closed_form(arch, e)
    model = models.build(spec)
    assert sum(p.size for _, p in model.parameters()) == models.count_params(spec)
    built = [(name, p.shape) for name, p in model.parameters()]
    assert built == models.param_shapes(spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        models.ModelSpec(arch="mlp", input_dim=10)
    with pytest.raises(ValueError):
        models.ModelSpec(arch="rnn1", input_dim=0)
    with pytest.raises(ValueError):
        models.ModelSpec(arch="cnn1", input_dim=2)


@pytest.mark.parametrize("arch", models.ARCHS)
def test_zero_weights_give_uniform_output(arch):
    model = models.build(models.ModelSpec(arch=arch, input_dim=4, seed=1))
    for _, p in model.parameters():
        p.data[:] = 0.0
    y = model.forward([np.ones(4), np.full(4, -2.0)])
    assert np.allclose(y.data, [1 / 3, 1 / 3, 1 / 3])


@pytest.mark.parametrize("arch", models.ARCHS)
def test_forward_is_distribution(arch):
    model = models.build(models.ModelSpec(arch=arch, input_dim=5, seed=3))
    rng = np.random.default_rng(0)
    for n_tokens in (1, 2, 4, 7):
        y = model.forward([rng.normal(size=5) for _ in range(n_tokens)])
        assert y.data.shape == (3,)
        assert abs(y.data.sum() - 1.0) <= 1e-12
        assert (y.data > 0).all()


def test_rnn1_matches_hand_unrolled_oracle():
    model = models.build(models.ModelSpec(arch="rnn1", input_dim=3, seed=9))
    xs = [np.array([0.1, -0.5, 2.0]), np.array([1.0, 0.0, -1.0])]
    c = model.cell
    h = np.zeros(101)
    for x in xs:
        h = c.w_ih.data @ x + c.b_ih.data + c.w_hh.data @ h + c.b_hh.data
    logits = model.out.w.data @ h + model.out.b.data
    z = np.exp(logits - logits.max())
    want = z / z.sum()
    got = model.forward(xs).data
    assert np.allclose(got, want, atol=1e-12)


def test_rnn2_relu_applied_after_recurrence():
    model = models.build(models.ModelSpec(arch="rnn2", input_dim=2, seed=4))
    c = model.cell
    x = np.array([0.7, -0.3])
    h = np.maximum(c.w_ih.data @ x + c.b_ih.data + c.b_hh.data, 0.0)
    logits = model.out.w.data @ (model.fc1.w.data @ h + model.fc1.b.data) + model.out.b.data
    z = np.exp(logits - logits.max())
    assert np.allclose(model.forward([x]).data, z / z.sum(), atol=1e-12)


def test_cnn1_pads_and_truncates_to_four_tokens():
    model = models.build(models.ModelSpec(arch="cnn1", input_dim=4, seed=5))
    rng = np.random.default_rng(1)
    toks = [rng.normal(size=4) for _ in range(6)]
    truncated = model.forward(toks).data
    assert np.allclose(truncated, model.forward(toks[:4]).data)
    short = model.forward(toks[:2]).data
    padded = model.forward(toks[:2] + [np.zeros(4), np.zeros(4)]).data
    assert np.allclose(short, padded)


def test_forward_query_skips_oov_and_abstains():
    model = models.build(models.ModelSpec(arch="rnn1", input_dim=2, seed=0))
    emb = EmbeddingTable(dim=2, kind="pretrained")
    emb._vectors["known"] = np.array([1.0, 0.0])
    y_mixed = model.forward_query(TokenizedQuery(tokens=("known", "zzz")), emb)
    y_clean = model.forward_query(TokenizedQuery(tokens=("known",)), emb)
    assert np.allclose(y_mixed.data, y_clean.data)
    assert model.forward_query(TokenizedQuery(tokens=("zzz", "qqq")), emb) is None


def test_same_seed_same_init_different_seed_differs():
    a = models.build(models.ModelSpec(arch="rnn3", input_dim=3, seed=11))
    b = models.build(models.ModelSpec(arch="rnn3", input_dim=3, seed=11))
    c = models.build(models.ModelSpec(arch="rnn3", input_dim=3, seed=12))
    for (_, pa), (_, pb), (_, pc) in zip(a.parameters(), b.parameters(), c.parameters()):
        assert (pa.data == pb.data).all()
    assert any((pa.data != pc.data).any()
               for (_, pa), (_, pc) in zip(a.parameters(), c.parameters()))


def test_init_bounds_respect_fan_in():
    model = models.build(models.ModelSpec(arch="rnn1", input_dim=16, seed=2))
    w = model.cell.w_ih.data
    assert np.abs(w).max() <= 1.0 / np.sqrt(16)


def test_state_roundtrip_through_checkpoint():
    from qintent.nn import Checkpoint

    spec = models.ModelSpec(arch="rnn2", input_dim=3, seed=6)
    model = models.build(spec)
    ckpt = Checkpoint(arch=spec.arch, input_dim=spec.input_dim, seed=spec.seed,
                      epoch=0, params=model.state_arrays())
    clone = models.from_checkpoint(ckpt)
    x = [np.array([0.2, 0.4, -0.1])]
    assert np.allclose(model.forward(x).data, clone.forward(x).data)


def test_load_state_validates():
    model = models.build(models.ModelSpec(arch="rnn1", input_dim=2, seed=0))
    with pytest.raises(ValueError, match="missing"):
        model.load_state([])
    bad = [(name, np.zeros((1, 1))) for name, _ in model.parameters()]
    with pytest.raises(ValueError, match="shape"):
        model.load_state(bad)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(models.ARCHS), st.integers(1, 5), st.integers(0, 10_000))
def test_forward_distribution_fuzz(arch, n_tokens, seed):
    rng = np.random.default_rng(seed)
    model = models.build(models.ModelSpec(arch=arch, input_dim=6, seed=seed % 17))
    y = model.forward([rng.normal(size=6) * 3 for _ in range(n_tokens)])
    assert abs(y.data.sum() - 1.0) <= 1e-12
    assert (y.data >= 0).all()
