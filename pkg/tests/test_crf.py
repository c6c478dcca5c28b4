import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexborrow.corpus import TAGS, Dataset, LabeledSentence
from lexborrow.crf import (
    CrfModel,
    ModelFormatError,
    TrainConfig,
    emission_scores,
    features_from_lists,
    forward_backward,
    load_model,
    objective_and_gradient,
    save_model,
    sequence_score,
    tag,
    train,
    viterbi,
)
from lexborrow.features import AttributeVocabulary, FeatureConfig

from crf_helpers import explicit_emissions, random_instance, separable_corpus
from oracles import brute_force_crf, brute_log_partition, central_differences, viterbi_reference


def zero_model(n_attr=1):
    return CrfModel.zeros(AttributeVocabulary([f"a{i}" for i in range(n_attr)]))


def one_hot(n, attr=0):
    return features_from_lists([[attr]] * n)


def test_zero_weights_score_and_partition():
    m = zero_model()
    assert sequence_score(m, one_hot(3), ["O", "B-ENG", "I-ENG"]) == 0.0
    log_z, marg, pair = forward_backward(m, one_hot(1))
    assert log_z == pytest.approx(math.log(5), abs=1e-12)
    np.testing.assert_allclose(marg, 0.2)
    assert forward_backward(m, one_hot(2))[0] == pytest.approx(math.log(25), abs=1e-12)


def test_sequence_score_examples():
    m = zero_model()
    m.emission[0, TAGS.index("B-ENG")] = 2.0
    assert sequence_score(m, one_hot(1), ["B-ENG"]) == 2.0
    m.transition[TAGS.index("B-ENG"), TAGS.index("I-ENG")] = 0.5
    # 2.0 at position 0, 0 emission for I-ENG, plus the transition
    assert sequence_score(m, one_hot(2), ["B-ENG", "I-ENG"]) == 2.5
    with pytest.raises(ValueError):
        sequence_score(m, one_hot(2), ["O"])


def test_viterbi_tie_break_and_single_emission():
    m = zero_model(2)
    tags, score = viterbi(m, one_hot(4))
    assert tags == ["O"] * 4 and score == 0.0
    m.emission[1, TAGS.index("B-ENG")] = 1.0
    feats = features_from_lists([[1], [0], [0]])
    assert viterbi(m, feats)[0] == ["B-ENG", "O", "O"]


@pytest.mark.parametrize("seed", range(40))
def test_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    model, positions = random_instance(rng)
    feats = features_from_lists(positions)
    E = explicit_emissions(model, positions)
    np.testing.assert_allclose(emission_scores(model, feats), E, atol=1e-12)
    paths = brute_force_crf(E, model.transition)
    log_z, marg, pair = forward_backward(model, feats)
    assert abs(log_z - brute_log_partition(E, model.transition)) < 1e-8
    # brute force marginals
    probs = np.exp(np.array([s for _, s in paths]) - log_z)
    bm = np.zeros_like(marg)
    for (path, _), p in zip(paths, probs):
        for i, y in enumerate(path):
            bm[i, y] += p
    np.testing.assert_allclose(marg, bm, atol=1e-10)
    np.testing.assert_allclose(marg.sum(axis=1), 1.0, atol=1e-12)
    for e in range(len(pair)):
        np.testing.assert_allclose(pair[e].sum(axis=1), marg[e], atol=1e-10)
        np.testing.assert_allclose(pair[e].sum(axis=0), marg[e + 1], atol=1e-10)
    best = max(s for _, s in paths)
    tags, score = viterbi(model, feats)
    assert score == pytest.approx(best, abs=1e-12)
    assert score == sequence_score(model, feats, tags)
    assert all(log_z >= s for _, s in paths)


@pytest.mark.parametrize("seed", range(60))
def test_viterbi_tie_break_integer_weights(seed):
    rng = np.random.default_rng(1000 + seed)
    model, positions = random_instance(rng, n_attr=2, scale=1, integer=True)
    feats = features_from_lists(positions)
    path, best = viterbi_reference(explicit_emissions(model, positions), model.transition)
    tags, score = viterbi(model, feats)
    assert tags == [TAGS[i] for i in path]
    assert score == best


def test_viterbi_lexicographic_tie_break():
    # every path scores 0 except two tied winners; backpointer ties pick the lower label
    m = zero_model()
    m.emission[0, :] = [0, 1, 0, 1, 0]
    tags, _ = viterbi(m, one_hot(1))
    assert tags == ["B-ENG"]


def test_no_overflow_long_sequences():
    rng = np.random.default_rng(3)
    model, positions = random_instance(rng, length=10_000, scale=50.0)
    log_z, marg, _ = forward_backward(model, features_from_lists(positions))
    assert np.isfinite(log_z)
    np.testing.assert_allclose(marg.sum(axis=1), 1.0, atol=1e-9)


def _data(rng, model, n_seq=3):
    data = []
    for _ in range(n_seq):
        _, positions = random_instance(rng, n_attr=model.emission.shape[0])
        tags = [TAGS[int(i)] for i in rng.integers(0, 5, size=len(positions))]
        data.append((features_from_lists(positions), tags))
    return data


def test_zero_weight_objective_example():
    m = zero_model()
    f, g = objective_and_gradient(m, [(one_hot(1), ["O"])])
    assert f == pytest.approx(math.log(5))
    assert g[0] == pytest.approx(-0.8)
    np.testing.assert_allclose(g[1:5], 0.2)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    model, _ = random_instance(rng, n_attr=3)
    data = _data(rng, model)
    c2 = 0.1
    f = lambda w: objective_and_gradient(model.with_weights(w), data, c2)[0]
    _, g = objective_and_gradient(model, data, c2)
    num = central_differences(f, model.flat_weights())
    rel = np.abs(g - num) / np.maximum(np.abs(num), 1e-3)
    assert rel.max() <= 1e-4


def test_duplicated_data_doubles():
    rng = np.random.default_rng(5)
    model, _ = random_instance(rng)
    data = _data(rng, model)
    f1, g1 = objective_and_gradient(model, data)
    f2, g2 = objective_and_gradient(model, data + data)
    assert f2 == pytest.approx(2 * f1, rel=1e-12)
    np.testing.assert_allclose(g2, 2 * g1, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_convexity(seed):
    rng = np.random.default_rng(200 + seed)
    model, _ = random_instance(rng)
    data = _data(rng, model)
    w1 = rng.uniform(-2, 2, model.n_weights)
    w2 = rng.uniform(-2, 2, model.n_weights)
    f = lambda w: objective_and_gradient(model.with_weights(w), data, 0.01)[0]
    assert f((w1 + w2) / 2) <= (f(w1) + f(w2)) / 2 + 1e-9


def test_objective_requires_data():
    with pytest.raises(ValueError):
        objective_and_gradient(zero_model(), [])


def accuracy(model, dataset):
    pred = tag(model, dataset)
    hits = sum(p == g for s, ps in zip(dataset, pred) for p, g in zip(ps, s.tags))
    return hits / dataset.token_count


def test_separable_training():
    d = separable_corpus()
    model, report = train(d)
    assert accuracy(model, d) == 1.0
    assert report.iterations <= 200
    assert all(np.isfinite(report.objective_trace))
    assert all(b <= a + 1e-9 for a, b in zip(report.objective_trace, report.objective_trace[1:]))


def test_unregularized_overfit():
    d = Dataset([LabeledSentence(["un", "crush", "de", "big", "data"],
                                 ["O", "B-ENG", "O", "B-ENG", "I-ENG"])])
    model, report = train(d, train_config=TrainConfig(c1=0, c2=0, max_iterations=200,
                                                      tolerance=1e-9))
    assert report.objective_trace[-1] < 1e-3
    assert tag(model, d)[0] == list(d[0].tags)


def test_extreme_l1_kills_all_weights():
    d = separable_corpus()
    model, report = train(d, train_config=TrainConfig(c1=1000))
    assert report.active_features == 0
    assert all(set(p) == {"O"} for p in tag(model, d))


def test_training_deterministic():
    d = separable_corpus(seed=3)
    cfg = TrainConfig(max_iterations=30)
    a, _ = train(d, train_config=cfg)
    b, _ = train(d, train_config=cfg)
    assert a.flat_weights().tobytes() == b.flat_weights().tobytes()


def test_train_empty_raises():
    with pytest.raises(ValueError):
        train(Dataset([]))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(c1=-1)
    with pytest.raises(ValueError):
        TrainConfig(tolerance=0)


@pytest.fixture(scope="module")
def toy_model():
    return train(separable_corpus(seed=1), FeatureConfig(window=1))[0]


def roundtrip(model):
    buf = io.BytesIO()
    save_model(model, buf)
    return buf.getvalue()


def test_save_load_predictions_identical(toy_model):
    loaded = load_model(roundtrip(toy_model))
    np.testing.assert_array_equal(loaded.emission, toy_model.emission)
    np.testing.assert_array_equal(loaded.transition, toy_model.transition)
    assert loaded.config == toy_model.config
    assert loaded.vocabulary == toy_model.vocabulary
    rng = np.random.default_rng(0)
    words = ["o0", "b-eng1", "i-eng2", "x", "Zeta", "«", "b-other0", "2021"]
    sents = [[words[int(i)] for i in rng.integers(0, len(words), size=rng.integers(1, 10))]
             for _ in range(100)]
    assert tag(loaded, sents) == tag(toy_model, sents)


def test_truncated_file_rejected(toy_model):
    data = roundtrip(toy_model)
    for cut in (0, 5, 20, len(data) // 2, len(data) - 1):
        with pytest.raises(ModelFormatError):
            load_model(data[:cut])


def test_corrupted_file_rejected(toy_model):
    data = bytearray(roundtrip(toy_model))
    data[len(data) // 2] ^= 0xFF
    with pytest.raises(ModelFormatError):
        load_model(bytes(data))


def test_future_version_rejected(toy_model):
    data = roundtrip(toy_model).replace(b"COALAS-CRF\n1\n", b"COALAS-CRF\n2\n", 1)
    with pytest.raises(ModelFormatError, match="unsupported version 2"):
        load_model(data)


def test_save_rejects_non_finite():
    m = zero_model()
    m.emission[0, 0] = np.inf
    with pytest.raises(ValueError):
        save_model(m, io.BytesIO())


def test_tag_totality(toy_model):
    assert tag(toy_model, []) == []
    out = tag(toy_model, [["nunca", "visto"], [], ["Q"]])
    assert [len(x) for x in out] == [2, 0, 1]
    assert all(t in TAGS for x in out for t in x)


def test_tag_reproduces_training_gold(toy_model):
    d = separable_corpus(seed=1)
    assert tag(toy_model, d) == [list(s.tags) for s in d]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_model_roundtrip_fuzz(seed):
    rng = np.random.default_rng(seed)
    model, positions = random_instance(rng, n_attr=int(rng.integers(1, 6)))
    model.emission[rng.random(model.emission.shape) < 0.5] = 0.0
    loaded = load_model(roundtrip(model))
    np.testing.assert_array_equal(loaded.emission, model.emission)
    np.testing.assert_array_equal(loaded.transition, model.transition)
    feats = features_from_lists(positions)
    assert viterbi(loaded, feats) == viterbi(model, feats)
