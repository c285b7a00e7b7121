import csv

import numpy as np
import pytest
import scipy.cluster.hierarchy as sch
import scipy.sparse as sp

from topicforge.analysis import (
    AnalysisError, dynamic_report, export_dynamic_csv, export_scatter_csv,
    export_similarity_csv, export_tree_csv, export_word_scores_csv,
    hierarchical_topic_tree, topic_scatter_2d, topic_similarity_matrix,
    word_scores_report, wordcloud_export,
)
from topicforge.preprocess import Vocabulary
from topicforge.topics import (
    ClassTfidf, TopicError, TopicModel, dynamic_class_tfidf, ranked_terms,
)


def make_model(weights, sizes=None):
    """TopicModel stub with explicit class-TF-IDF rows (one row per topic)."""
    weights = np.asarray(weights, dtype=np.float64)
    n, m = weights.shape
    terms = tuple(f"w{j}" for j in range(m))
    vocab = Vocabulary(terms, {t: j for j, t in enumerate(terms)})
    ct = ClassTfidf(sp.csr_matrix(weights), tuple(range(n)), vocab,
                    float(weights.sum()) / n, weights.sum(axis=0))
    sizes = sizes or {c: 10 * (n - c) for c in range(n)}
    labels = np.concatenate([np.full(sizes[c], c) for c in range(n)])
    words = {c: ranked_terms(ct, c, 5) for c in range(n)}
    return TopicModel(labels, ct, words, sizes, 1)


def test_similarity_symmetric_unit_diagonal():
    tm = make_model([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    sim = topic_similarity_matrix(tm)
    assert np.array_equal(sim, sim.T)
    assert np.allclose(np.diag(sim), 1.0)
    assert sim[0, 1] == pytest.approx(0.0)
    assert sim[0, 2] == pytest.approx(1 / np.sqrt(2))


def test_similarity_needs_two_topics():
    with pytest.raises(AnalysisError):
        topic_similarity_matrix(make_model([[1.0, 2.0]]))


def test_tree_merges_closest_pair_first():
    tm = make_model([[1.0, 0.0], [1.0, 0.01], [0.0, 1.0]])
    tree = hierarchical_topic_tree(tm)
    assert tree.leaves == (0, 1, 2)
    assert len(tree.merges) == 2
    assert set(tree.merges[0][:2]) == {0, 1}
    assert set(tree.merges[1][:2]) == {2, 3}
    assert tree.merges[0][2] < tree.merges[1][2]


def test_tree_heights_match_scipy_average_linkage():
    rng = np.random.default_rng(9)
    for trial in range(5):
        n = int(rng.integers(4, 11))
        weights = rng.random((n, 6))
        tm = make_model(weights.tolist())
        tree = hierarchical_topic_tree(tm)
        sim = topic_similarity_matrix(tm)
        cond = 1.0 - sim[np.triu_indices(n, k=1)]
        link = sch.linkage(cond, method="average")
        assert np.allclose(
            sorted(h for _, _, h in tree.merges), np.sort(link[:, 2]), atol=1e-9
        )


def test_tree_top_n_limits_and_validates():
    tm = make_model([[1.0, 0.0], [1.0, 0.01], [0.0, 1.0]])
    tree = hierarchical_topic_tree(tm, top_n=2)
    assert len(tree.leaves) == 2
    assert len(tree.merges) == 1
    with pytest.raises(AnalysisError):
        hierarchical_topic_tree(tm, top_n=5)


def test_scatter_shapes_and_labels(planted, planted_model):
    _, emb, _, _ = planted
    points = topic_scatter_2d(planted_model, emb)
    assert len(points) == planted_model.n_topics
    for topic, x, y, size, label in points:
        assert size == planted_model.sizes[topic]
        assert np.isfinite([x, y]).all()
        expected = "_".join(
            w for w, _ in ranked_terms(planted_model.class_tfidf, topic, 3)
        )
        assert label == expected


def test_word_scores_normalized():
    tm = make_model([[3.0, 1.0, 2.0], [0.0, 4.0, 1.0]])
    report = word_scores_report(tm, top_k_topics=2, words_per_topic=2)
    assert set(report) == {0, 1}
    assert report[0][0] == ("w0", 1.0)
    assert report[0][1] == ("w2", pytest.approx(2 / 3))
    assert report[1][0] == ("w1", 1.0)
    assert all(len(v) == 2 for v in report.values())


def test_wordcloud_export_scaling_and_ties(tmp_path):
    path = tmp_path / "cloud.csv"
    wordcloud_export({"b": 2.0, "a": 2.0, "c": 4.0}, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["term", "weight"]
    assert rows[1:] == [["c", "100"], ["a", "50"], ["b", "50"]]
    with pytest.raises(AnalysisError):
        wordcloud_export({}, tmp_path / "nope.csv")


def test_dynamic_report_top_k(planted_model):
    ct = planted_model.class_tfidf
    counts = sp.csr_matrix(
        np.ones((len(ct.classes), len(ct.vocab)), dtype=np.int64)
    )
    dtm = dynamic_class_tfidf({2020: counts}, ct)
    report = dynamic_report(dtm, 0, k=3)
    assert list(report) == [2020]
    assert len(report[2020]) == 3
    scores = [s for _, s in report[2020]]
    assert scores == sorted(scores, reverse=True)
    with pytest.raises(TopicError):
        dynamic_report(dtm, 999)


def test_csv_exports_roundtrip(tmp_path, planted, planted_model):
    _, emb, _, _ = planted
    tm = planted_model

    sim_path = tmp_path / "similarity.csv"
    export_similarity_csv(tm, sim_path)
    with open(sim_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["topic"] + [str(c) for c in tm.class_tfidf.classes]
    assert len(rows) == tm.n_topics + 1
    assert float(rows[1][1]) == 1.0

    tree_path = tmp_path / "tree.csv"
    export_tree_csv(hierarchical_topic_tree(tm), tree_path)
    with open(tree_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["merge", "left", "right", "height"]
    assert len(rows) == tm.n_topics  # n - 1 merges + header

    scatter_path = tmp_path / "scatter.csv"
    export_scatter_csv(topic_scatter_2d(tm, emb), scatter_path)
    with open(scatter_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["topic", "x", "y", "size", "label"]
    assert len(rows) == tm.n_topics + 1

    scores_path = tmp_path / "word_scores.csv"
    export_word_scores_csv(word_scores_report(tm), scores_path)
    with open(scores_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["topic", "rank", "word", "score"]
    assert float(rows[1][3]) == 1.0

    counts = sp.csr_matrix(np.ones(
        (len(tm.class_tfidf.classes), len(tm.class_tfidf.vocab)), dtype=np.int64
    ))
    dtm = dynamic_class_tfidf({2019: counts}, tm.class_tfidf)
    dyn_path = tmp_path / "dynamic.csv"
    export_dynamic_csv(dynamic_report(dtm, 0, k=2), 0, dyn_path)
    with open(dyn_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["topic", "slice", "rank", "word", "score"]
    assert [r[1] for r in rows[1:]] == ["2019", "2019"]
