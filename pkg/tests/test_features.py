import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexborrow.corpus import Dataset, LabeledSentence, ParseError
from lexborrow.features import (
    AttributeVocabulary,
    FeatureConfig,
    Flag,
    build_vocabulary,
    char_trigrams,
    classify_token_flags,
    extract_token_attributes,
    load_embeddings,
    vectorize,
    word_shape,
)


@pytest.mark.parametrize("text,shape", [
    ("2021", "dddd"),
    ("Benching", "Xxxxx"),
    ("iPhone7", "xXxxxxd"),
    ("Ñandú", "Xxxxx"), ("Ñu", "Xx"),
    ("AAAAAA-b", "XXXX-x"),
])
def test_word_shape(text, shape):
    assert word_shape(text) == shape


def test_char_trigrams():
    assert set(char_trigrams("crush")) == {"cru", "rus", "ush"}
    assert char_trigrams("app") == ["app"]
    assert char_trigrams("ok") == []
    assert char_trigrams("aaaa") == ["aaa"]


@pytest.mark.parametrize("text,flags", [
    ("«", {Flag.QUOTE}),
    ("“", {Flag.QUOTE}),
    ("@username", {Flag.TWITTER}),
    ("#hashtag", {Flag.TWITTER}),
    ("GPS", {Flag.UPPERCASE}),
    ("Youtuber", {Flag.TITLECASE}),
    ("A", {Flag.UPPERCASE, Flag.TITLECASE}),
    ("Élite", {Flag.TITLECASE}),
    ("ÉLITE", {Flag.UPPERCASE}),
    ("crush", set()),
    ("https://example.com/x", {Flag.URL}),
    ("www.xataka.com", {Flag.URL}),
    ("yo@example.es", {Flag.EMAIL}),
    ("iPhone", set()),
    ("2021", set()),
])
def test_flags(text, flags):
    assert classify_token_flags(text) == flags


def names(attrs):
    return [n for n, _ in attrs]


def test_extract_example():
    attrs = extract_token_attributes(["un", "crush"], 1, FeatureConfig())
    got = names(attrs)
    for expected in ["bias", "w[0]=crush", "w[-1]=un", "suffix3[0]=ush", "tri[0]=cru",
                     "tri[0]=rus", "tri[0]=ush", "shape[0]=xxxx", "BOS[-2]", "EOS[+1]",
                     "EOS[+2]"]:
        assert expected in got
    assert not any(n.startswith(("upper[", "title[")) for n in got)
    assert len(got) == len(set(got))


def test_single_token_boundaries():
    got = names(extract_token_attributes(["hola"], 0))
    assert {"BOS[-1]", "BOS[-2]", "EOS[+1]", "EOS[+2]"} <= set(got)


def test_embedding_attributes():
    emb = load_embeddings(b"1 2\ncrush 0.5 -0.25\n")
    attrs = dict(extract_token_attributes(["un", "crush"], 1, embeddings=emb))
    assert attrs["emb[0]=d0"] == 0.5
    assert attrs["emb[0]=d1"] == -0.25
    assert not any(n.startswith("emb") for n in names(extract_token_attributes(["un", "crush"], 0, embeddings=emb)))


def test_pos_from_sentence():
    s = LabeledSentence(["un", "crush"], ["O", "B-ENG"], ["DET", "NOUN"])
    got = names(extract_token_attributes(s, 1))
    assert "pos[0]=NOUN" in got and "pos[-1]=DET" in got
    assert not any(n.startswith("pos") for n in names(extract_token_attributes(["un", "crush"], 1)))


def test_bias_only_gives_one_attribute():
    cfg = FeatureConfig.only("bias")
    for i in range(3):
        assert extract_token_attributes(["a", "b", "c"], i, cfg) == [("bias", 1.0)]


def test_binary_attributes_have_unit_value():
    emb = load_embeddings(b"crush 0.5 -0.25\n")
    for name, value in extract_token_attributes(["Un", "crush", "«"], 1, embeddings=emb):
        if not name.startswith("emb"):
            assert value == 1.0


@given(st.lists(st.sampled_from(["a", "Bb", "CCC", "«", "#x", "ddd1"]), min_size=1, max_size=12),
       st.integers(0, 2), st.data())
def test_position_local(tokens, window, data):
    cfg = FeatureConfig(window=window)
    i = data.draw(st.integers(0, len(tokens) - 1))
    outside = [j for j in range(len(tokens)) if abs(j - i) > window]
    if not outside:
        return
    j = data.draw(st.sampled_from(outside))
    changed = list(tokens)
    changed[j] = "zzzz"
    assert extract_token_attributes(tokens, i, cfg) == extract_token_attributes(changed, i, cfg)


def test_vocabulary_example():
    d = Dataset([LabeledSentence(["a"], ["O"])])
    v = build_vocabulary(d, FeatureConfig.only("bias", "token", window=0))
    assert v.as_dict() == {"bias": 0, "w[0]=a": 1}
    assert v.frozen
    assert build_vocabulary(d) == build_vocabulary(d)


def test_vocabulary_empty_raises():
    with pytest.raises(ValueError):
        build_vocabulary(Dataset([]))


def test_frozen_vocabulary_ignores_unknown():
    v = AttributeVocabulary(["bias"]).freeze()
    assert v.add("w[0]=new") is None
    assert len(v) == 1
    f = vectorize([LabeledSentence(["new"], ["O"])], v, FeatureConfig())
    assert f.indices.tolist() == [0]


def test_load_embeddings():
    t = load_embeddings(b"2 2\nhola 0.1 0.2\nadios 0.3 0.4")
    assert len(t) == 2 and t.dimension == 2
    with pytest.raises(ParseError) as exc:
        load_embeddings(b"2 2\nhola 0.1 0.2\nmal 1 2 3\n")
    assert exc.value.line == 3
    with pytest.raises(ParseError):
        load_embeddings(b"hola 0.1 x\n")
    empty = load_embeddings(b"")
    assert len(empty) == 0 and empty.dimension == 0


def test_config_round_trip():
    cfg = FeatureConfig(window=1, suffix=False)
    assert FeatureConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        FeatureConfig(window=-1)
