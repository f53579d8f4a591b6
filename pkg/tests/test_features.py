import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svassess.features import (
    FeatureModel,
    NlpConfig,
    SparseVector,
    Vocabulary,
    aggregate_char_word,
    bag_of_subtokens,
    bag_of_tokens,
    build_char_vocab,
    build_subtoken_vocab,
    build_word_vocab,
    standard_configs,
    transform,
    trim_char_terms,
    vectors_to_csr,
)

HELLO_DOC = ["Hello", "World"]


def char_config(lo, hi, **kw):
    return NlpConfig(char_min=lo, char_max=hi, **kw)


def test_hello_world_char_bigrams():
    vocab = build_char_vocab([HELLO_DOC], char_config(2, 2))
    assert set(vocab.index) == {"He", "el", "ll", "lo", "o ", " W", "Wo", "or", "rl", "ld"}


def test_hello_world_char_unigrams_have_no_bare_space():
    vocab = build_char_vocab([HELLO_DOC], char_config(1, 1))
    assert set(vocab.index) == {"H", "e", "l", "o", "W", "r", "d"}


def test_trim_drops_boundary_and_single_char_grams():
    vocab = build_char_vocab([HELLO_DOC], char_config(2, 2))
    kept = trim_char_terms(vocab, 2, 2)
    assert kept == {"He", "el", "ll", "lo", "Wo", "or", "rl", "ld"}


def test_char_vocab_source_words_need_high_df():
    # "rare" appears in 1/10 docs: not strictly above the 0.10 cutoff.
    docs = [["common"] for _ in range(9)] + [["common", "rare"]]
    vocab = build_char_vocab(docs, char_config(2, 2))
    assert "ra" not in vocab.index
    assert "co" in vocab.index


def test_word_vocab_doc_fraction_is_strict():
    docs = [["hello", "world"], ["hello", "there"]]
    loose = build_word_vocab(docs, NlpConfig(word_min_doc_fraction=0.4))
    assert set(loose.index) == {"hello", "world", "there"}
    tight = build_word_vocab(docs, NlpConfig(word_min_doc_fraction=0.6))
    assert set(tight.index) == {"hello"}


def test_word_vocab_counts_ngrams_up_to_max():
    docs = [["a", "b", "c"]]
    vocab = build_word_vocab(docs, NlpConfig(word_ngram_max=2))
    assert set(vocab.index) == {"a", "b", "c", "a b", "b c"}


def test_empty_corpus_errors():
    with pytest.raises(ValueError):
        build_word_vocab([], NlpConfig())
    with pytest.raises(ValueError):
        build_char_vocab([], NlpConfig())
    with pytest.raises(ValueError):
        build_subtoken_vocab([])


def test_aggregate_hello_world_keeps_expected_columns():
    docs = [HELLO_DOC]
    config = char_config(2, 2)
    word_vocab = build_word_vocab(docs, config)
    char_vocab = build_char_vocab(docs, config)
    model, vectors = aggregate_char_word(docs, word_vocab, char_vocab, 2, 2, config)
    assert set(model.char_vocab.index) == {"He", "el", "ll", "lo", "Wo", "or", "rl", "ld"}
    assert set(model.word_vocab.index) == {"Hello", "World"}
    assert model.width == 10
    assert len(vectors) == 1 and vectors[0].width == 10


def test_aggregate_removes_word_terms_shadowed_by_char_terms():
    # The word "ab" and the trimmed char gram "ab" collide; the word copy goes.
    docs = [["ab"], ["ab"], ["ab", "xy"]]
    config = char_config(2, 2)
    word_vocab = build_word_vocab(docs, config)
    char_vocab = build_char_vocab(docs, config)
    assert "ab" in word_vocab.index and "ab" in char_vocab.index
    model, _ = aggregate_char_word(docs, word_vocab, char_vocab, 2, 2, config)
    assert "ab" not in model.word_vocab.index
    assert "ab" in model.char_vocab.index
    assert set(model.word_vocab.index) & set(model.char_vocab.index) == set()


def test_aggregate_rejects_inverted_char_range():
    docs = [HELLO_DOC]
    config = char_config(2, 2)
    vocab = build_word_vocab(docs, config)
    cvocab = build_char_vocab(docs, config)
    with pytest.raises(ValueError):
        aggregate_char_word(docs, vocab, cvocab, 3, 2, config)


def test_aggregate_wider_transform_range_keeps_short_trimmed_terms():
    # Built at 3..3 the gram "ab " trims to "ab"; a 2..6 transform range keeps it.
    docs = [["ab", "cd"]]
    config = char_config(3, 3)
    char_vocab = build_char_vocab(docs, config)
    assert "ab " in char_vocab.index
    kept = trim_char_terms(char_vocab, 2, 6)
    assert "ab" in kept
    assert trim_char_terms(char_vocab, 3, 6) == set()


def test_transform_counts_words_and_overlapping_chars():
    config = char_config(2, 2)
    docs = [["aba", "aba"]]
    word_vocab = build_word_vocab(docs, config)
    char_vocab = build_char_vocab(docs, config)
    model, _ = aggregate_char_word(docs, word_vocab, char_vocab, 2, 2, config)
    vec = transform(model, ["aba", "aba"])
    dense = vec.to_dense()
    cols = model.word_vocab.index
    offset = len(model.word_vocab)
    assert dense[cols["aba"]] == 2.0
    # "aba aba": "ab" at 0 and 4, "ba" at 1 and 5.
    assert dense[offset + model.char_vocab.index["ab"]] == 2.0
    assert dense[offset + model.char_vocab.index["ba"]] == 2.0


def test_transform_all_oov_is_empty():
    config = NlpConfig()
    vocab = build_word_vocab([["known"]], config)
    model = FeatureModel(word_vocab=vocab, char_vocab=Vocabulary({}, {}, "char"), config=config)
    vec = transform(model, ["unseen", "tokens"])
    assert vec.indices == () and vec.values == ()


def test_idf_two_docs_single_df():
    config = NlpConfig(weighting="tfidf")
    docs = [["apple", "pear"], ["apple", "plum"]]
    word_vocab = build_word_vocab(docs, config)
    model, _ = aggregate_char_word(docs, word_vocab, Vocabulary({}, {}, "char"), 2, 6, config)
    col = model.word_vocab.index["pear"]
    assert model.idf[col] == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)
    assert model.idf[model.word_vocab.index["apple"]] == pytest.approx(1.0)


def test_tfidf_transform_is_l2_normalized():
    config = NlpConfig(weighting="tfidf")
    docs = [["apple", "pear"], ["apple", "plum"]]
    word_vocab = build_word_vocab(docs, config)
    model, vectors = aggregate_char_word(docs, word_vocab, Vocabulary({}, {}, "char"), 2, 6, config)
    for vec in vectors:
        assert vec.norm() == pytest.approx(1.0, abs=1e-12)


def test_tf_transform_keeps_raw_counts_by_default():
    config = NlpConfig()
    docs = [["a", "a", "b"]]
    word_vocab = build_word_vocab(docs, config)
    model, vectors = aggregate_char_word(docs, word_vocab, Vocabulary({}, {}, "char"), 2, 6, config)
    dense = vectors[0].to_dense()
    assert dense[model.word_vocab.index["a"]] == 2.0
    assert dense[model.word_vocab.index["b"]] == 1.0


def test_explicit_l2_flag_overrides_weighting_default():
    assert NlpConfig().normalize is False
    assert NlpConfig(weighting="tfidf").normalize is True
    assert NlpConfig(l2_normalize=True).normalize is True
    assert NlpConfig(weighting="tfidf", l2_normalize=False).normalize is False


def test_char_df_recounted_by_substring_presence():
    # "lo" occurs inside "love" even though "love" never sourced char grams.
    config = char_config(2, 2, weighting="tfidf")
    docs = [["lost", "lane"], ["lost", "love"]]
    word_vocab = build_word_vocab(docs, config)
    char_vocab = build_char_vocab(docs, config)
    model, _ = aggregate_char_word(docs, word_vocab, char_vocab, 2, 2, config)
    col = len(model.word_vocab) + model.char_vocab.index["lo"]
    assert model.idf[col] == pytest.approx(math.log(3 / 3) + 1)


def test_standard_configs_table():
    configs = standard_configs()
    assert len(configs) == 8
    ranges = [(c.word_ngram_min, c.word_ngram_max) for c in configs]
    assert ranges == [(1, 1), (1, 1), (1, 2), (1, 3), (1, 4), (1, 2), (1, 3), (1, 4)]
    weightings = [c.weighting for c in configs]
    assert weightings == ["tf", "tfidf", "tf", "tf", "tf", "tfidf", "tfidf", "tfidf"]


def test_config_validation():
    with pytest.raises(ValueError):
        NlpConfig(word_ngram_min=2, word_ngram_max=1)
    with pytest.raises(ValueError):
        NlpConfig(word_ngram_max=5)
    with pytest.raises(ValueError):
        NlpConfig(weighting="binary")
    with pytest.raises(ValueError):
        NlpConfig(char_min=0)
    with pytest.raises(ValueError):
        NlpConfig(word_min_doc_fraction=0.0)


def test_sparse_vector_validation():
    with pytest.raises(ValueError):
        SparseVector(indices=(1, 1), values=(1.0, 2.0), width=3)
    with pytest.raises(ValueError):
        SparseVector(indices=(2, 1), values=(1.0, 2.0), width=3)
    with pytest.raises(ValueError):
        SparseVector(indices=(3,), values=(1.0,), width=3)
    with pytest.raises(ValueError):
        SparseVector(indices=(0,), values=(0.0,), width=3)
    with pytest.raises(ValueError):
        SparseVector(indices=(0,), values=(float("nan"),), width=3)


def test_model_json_round_trip_preserves_transform():
    config = char_config(2, 3, weighting="tfidf")
    docs = [["alpha", "beta"], ["alpha", "gamma"], ["beta", "gamma"]]
    word_vocab = build_word_vocab(docs, config)
    char_vocab = build_char_vocab(docs, config)
    model, _ = aggregate_char_word(docs, word_vocab, char_vocab, 2, 3, config)
    reloaded = FeatureModel.from_json(model.to_json())
    assert reloaded.word_vocab.terms() == model.word_vocab.terms()
    assert reloaded.char_vocab.terms() == model.char_vocab.terms()
    probe = ["alpha", "gamma", "alpha"]
    assert transform(reloaded, probe) == transform(model, probe)
    # Serialized payload carries arrays in column order.
    obj = json.loads(model.to_json())
    assert obj["word_vocab"] == sorted(obj["word_vocab"])
    assert obj["char_vocab"] == sorted(obj["char_vocab"])
    assert len(obj["idf"]) == model.width


def test_subtoken_enumeration_myvar():
    vocab = build_subtoken_vocab([["MyVar"]], 2, 3)
    assert set(vocab.index) == {"My", "yV", "Va", "ar", "MyV", "yVa", "Var"}
    vec = bag_of_subtokens(["MyVar"], vocab, 2, 3)
    assert vec.to_dense().tolist() == [1.0] * 7


def test_bag_of_tokens_counts_whole_tokens():
    vocab = Vocabulary.from_df({"if": 1, "x": 2}, "word")
    vec = bag_of_tokens(["if", "x", "x", "unknown"], vocab)
    dense = vec.to_dense()
    assert dense[vocab.index["if"]] == 1.0
    assert dense[vocab.index["x"]] == 2.0


def test_vectors_to_csr_round_trip():
    vecs = [
        SparseVector(indices=(0, 3), values=(1.0, 2.0), width=5),
        SparseVector(indices=(), values=(), width=5),
        SparseVector(indices=(4,), values=(-1.5,), width=5),
    ]
    mat = vectors_to_csr(vecs)
    assert mat.shape == (3, 5)
    assert np.array_equal(mat.toarray(), np.stack([v.to_dense() for v in vecs]))
    with pytest.raises(ValueError):
        vectors_to_csr([])
    with pytest.raises(ValueError):
        vectors_to_csr([vecs[0], SparseVector(indices=(), values=(), width=4)])


token_strategy = st.lists(
    st.sampled_from(["alpha", "beta", "gamma", "delta", "code", "run"]),
    min_size=1,
    max_size=8,
)


@settings(max_examples=50, deadline=None)
@given(docs=st.lists(token_strategy, min_size=2, max_size=8))
def test_property_tfidf_norm_and_disjoint_vocabs(docs):
    config = char_config(2, 3, weighting="tfidf")
    word_vocab = build_word_vocab(docs, config)
    char_vocab = build_char_vocab(docs, config)
    model, vectors = aggregate_char_word(docs, word_vocab, char_vocab, 2, 3, config)
    assert set(model.word_vocab.index).isdisjoint(model.char_vocab.index)
    assert model.width == len(model.word_vocab) + len(model.char_vocab)
    for vec in vectors:
        if vec.indices:
            assert vec.norm() == pytest.approx(1.0, abs=1e-9)
        assert all(0 <= i < model.width for i in vec.indices)


@settings(max_examples=50, deadline=None)
@given(docs=st.lists(token_strategy, min_size=1, max_size=6), probe=token_strategy)
def test_property_transform_width_and_determinism(docs, probe):
    config = NlpConfig(word_ngram_max=2)
    vocab = build_word_vocab(docs, config)
    model, _ = aggregate_char_word(docs, vocab, Vocabulary({}, {}, "char"), 2, 6, config)
    first = transform(model, probe)
    second = transform(model, probe)
    assert first == second
    assert first.width == model.width
