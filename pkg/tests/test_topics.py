import math

import numpy as np
import pytest

from conftest import make_planted_corpus
from topicforge.preprocess import build_vocabulary, count_matrix
from topicforge.topics import (
    TopicConfig, TopicError, class_tfidf, classic_tfidf, dynamic_class_tfidf,
    fit_dynamic_topics, fit_topic_model, load_model, ranked_terms, save_model,
    slice_count_matrix, top_words,
)

D1 = ["sleep", "sleep", "anxiety"]
D2 = ["gene", "anxiety"]
C1 = ["sleep", "sleep", "anxiety"]
C2 = ["gene", "gene", "gene", "anxiety"]


def per_doc_matrix(docs):
    v = build_vocabulary(docs, (1, 1), 1)
    return count_matrix(docs, v)


def per_class_matrix(classes):
    v = build_vocabulary(classes, (1, 1), 1)
    return count_matrix(classes, v, grouping=list(range(len(classes))))


def test_classic_tfidf_hand_values():
    tw = classic_tfidf(per_doc_matrix([D1, D2]))
    w = tw.weights.toarray()
    col = tw.vocab.index
    assert w[0, col["sleep"]] == pytest.approx(2 * math.log(3 / 1), abs=1e-9)
    assert w[0, col["anxiety"]] == pytest.approx(math.log(3 / 2), abs=1e-9)
    assert w[1, col["sleep"]] == 0.0


def test_classic_tfidf_single_document():
    tw = classic_tfidf(per_doc_matrix([["term", "term", "term"]]))
    assert tw.weights.toarray()[0, 0] == pytest.approx(3 * math.log(2), abs=1e-12)


def test_classic_tfidf_nonnegative_zero_pattern():
    rng = np.random.default_rng(0)
    docs = [[f"w{rng.integers(8)}" for _ in range(rng.integers(1, 10))]
            for _ in range(12)]
    cm = per_doc_matrix(docs)
    w = classic_tfidf(cm).weights.toarray()
    counts = cm.counts.toarray()
    assert np.all(w >= 0.0)
    assert np.array_equal(w == 0.0, counts == 0)


def test_class_tfidf_hand_values():
    ct = class_tfidf(per_class_matrix([C1, C2]))
    assert ct.avg_words_per_class == pytest.approx(3.5)
    w = ct.weights.toarray()
    col = ct.vocab.index
    assert w[0, col["sleep"]] == pytest.approx(2 * math.log(4.5 / 2), abs=1e-9)
    assert w[1, col["gene"]] == pytest.approx(3 * math.log(4.5 / 3), abs=1e-9)


def test_class_tfidf_single_class_collapse():
    ct = class_tfidf(per_class_matrix([["a", "a", "b"]]))
    w = ct.weights.toarray()
    col = ct.vocab.index
    assert ct.avg_words_per_class == 3.0
    assert w[0, col["a"]] == pytest.approx(2 * math.log(4 / 2), abs=1e-12)
    assert w[0, col["b"]] == pytest.approx(math.log(4 / 1), abs=1e-12)


def test_class_tfidf_matches_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        classes = [[f"w{rng.integers(6)}" for _ in range(rng.integers(2, 12))]
                   for _ in range(3)]
        ct = class_tfidf(per_class_matrix(classes))
        counts = np.zeros((3, len(ct.vocab)))
        for r, c in enumerate(classes):
            for t in c:
                counts[r, ct.vocab.index[t]] += 1
        a = counts.sum() / 3
        tf_t = counts.sum(axis=0)
        expected = np.where(
            tf_t > 0, counts * np.log((1 + a) / np.maximum(tf_t, 1)), 0.0
        )
        assert np.allclose(ct.weights.toarray(), expected, atol=1e-12)


def test_dynamic_single_slice_collapses_to_global():
    classes = [C1, C2]
    cm = per_class_matrix(classes)
    ct = class_tfidf(cm)
    slices = {0: cm.counts}
    dtm = dynamic_class_tfidf(slices, ct)
    assert np.array_equal(dtm.weights[0].toarray(), ct.weights.toarray())


def test_dynamic_absent_term_is_zero_and_sums_linear():
    cm = per_class_matrix([C1, C2])
    ct = class_tfidf(cm)
    full = cm.counts.toarray()
    half = full // 2
    rest = full - half
    import scipy.sparse as sp
    dtm = dynamic_class_tfidf({0: sp.csr_matrix(half), 1: sp.csr_matrix(rest)}, ct)
    w0 = dtm.weights[0].toarray()
    w1 = dtm.weights[1].toarray()
    assert np.allclose(w0 + w1, ct.weights.toarray(), atol=1e-12)
    # term absent from slice 0 has zero weight there
    absent = half == 0
    assert np.all(w0[absent] == 0.0)


def test_dynamic_even_split_halves_weights():
    # cluster counts split 1+1=2 across two slices
    import scipy.sparse as sp
    cm = per_class_matrix([["a", "a"]])
    ct = class_tfidf(cm)
    one = sp.csr_matrix(np.array([[1]]))
    dtm = dynamic_class_tfidf({0: one, 1: one}, ct)
    global_w = ct.weights.toarray()[0, 0]
    assert dtm.weights[0].toarray()[0, 0] == pytest.approx(global_w / 2, abs=1e-12)
    assert dtm.weights[1].toarray()[0, 0] == pytest.approx(global_w / 2, abs=1e-12)


def test_top_words_hand_corpus():
    ct = class_tfidf(per_class_matrix([C1, C2]))
    ranked = ranked_terms(ct, 1, 1)
    assert ranked[0][0] == "gene"
    assert ranked[0][1] == pytest.approx(1.21640, abs=1e-4)


def test_top_words_k_exceeds_vocab():
    ct = class_tfidf(per_class_matrix([["sleep"]]))
    assert [w for w, _ in ranked_terms(ct, 0, 99)] == ["sleep"]


def test_fit_planted_topics(planted):
    corpus, emb, signatures, block_of = planted
    cfg = TopicConfig(ngram_range=(1, 1), min_cluster_size=10, min_topic_size=10,
                      n_neighbors=15, seed=0)
    tm = fit_topic_model(corpus, emb, cfg)
    assert tm.n_topics >= 3
    for b, sig in enumerate(signatures):
        block_labels = tm.labels[block_of == b]
        topic = int(np.bincount(block_labels[block_labels >= 0]).argmax())
        assert sig in [w for w, _ in tm.top_words[topic]]
    for c, size in tm.sizes.items():
        assert size >= cfg.min_topic_size


def test_fit_all_noise_when_threshold_too_high(planted):
    corpus, emb, _, _ = planted
    cfg = TopicConfig(ngram_range=(1, 1), min_cluster_size=10,
                      min_topic_size=10_000, n_neighbors=15, seed=0)
    tm = fit_topic_model(corpus, emb, cfg)
    assert tm.n_topics == 0
    assert np.all(tm.labels == -1)


def test_fit_rejects_mismatched_embeddings(planted):
    corpus, emb, _, _ = planted
    with pytest.raises(TopicError, match="180"):
        fit_topic_model(corpus, emb[:-1], TopicConfig())


def test_top_words_errors(planted):
    corpus, emb, _, _ = planted
    cfg = TopicConfig(ngram_range=(1, 1), min_cluster_size=10, min_topic_size=10,
                      n_neighbors=15, seed=0)
    tm = fit_topic_model(corpus, emb, cfg)
    with pytest.raises(TopicError):
        top_words(tm, -1, 5)
    with pytest.raises(TopicError):
        top_words(tm, 999, 5)
    assert top_words(tm, 0, 3) == ranked_terms(tm.class_tfidf, 0, 3)


def test_model_roundtrip(tmp_path, planted):
    corpus, emb, _, _ = planted
    cfg = TopicConfig(ngram_range=(1, 1), min_cluster_size=10, min_topic_size=10,
                      n_neighbors=15, seed=0)
    tm = fit_topic_model(corpus, emb, cfg)
    path = tmp_path / "model.json"
    save_model(tm, path)
    back = load_model(path)
    assert np.array_equal(back.labels, tm.labels)
    assert back.sizes == tm.sizes
    assert back.top_words == tm.top_words
    assert back.class_tfidf.vocab.terms == tm.class_tfidf.vocab.terms
    assert np.allclose(back.class_tfidf.weights.toarray(),
                       tm.class_tfidf.weights.toarray())
    assert back.class_tfidf.avg_words_per_class == tm.class_tfidf.avg_words_per_class


def test_fit_dynamic_topics_linearity(planted):
    corpus, emb, _, _ = planted
    cfg = TopicConfig(ngram_range=(1, 1), min_cluster_size=10, min_topic_size=10,
                      n_neighbors=15, seed=0)
    from topicforge.preprocess import default_normalizer, preprocess_corpus
    tokens = preprocess_corpus(corpus, default_normalizer(), (1, 1))
    tm = fit_topic_model(corpus, emb, cfg, token_lists=tokens)
    years = [d.date.year for d in corpus]
    dtm = fit_dynamic_topics(tm, tokens, years)
    total = sum(dtm.weights[s].toarray() for s in dtm.slices)
    assert np.allclose(total, tm.class_tfidf.weights.toarray(), atol=1e-12)
