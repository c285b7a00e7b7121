"""Topic representations: classic TF-IDF, class-based TF-IDF over document
clusters, the time-sliced dynamic variant, and the end-to-end model fit.

All logarithms are natural logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import hdbscan as _hdbscan
from . import umap as _umap
from .corpus import Corpus
from .preprocess import (
    CountMatrix, Normalizer, Vocabulary, build_vocabulary, count_matrix,
    default_normalizer, preprocess_corpus,
)

MODEL_FORMAT_VERSION = "topicforge-model-1"


class TopicError(ValueError):
    pass


@dataclass(frozen=True)
class TfidfWeights:
    """Per-document term weights: tf * ln((1+N)/df)."""

    weights: sp.csr_matrix  # documents x terms
    vocab: Vocabulary
    n_documents: int
    doc_freq: np.ndarray


@dataclass(frozen=True)
class ClassTfidf:
    """Per-cluster term weights: tf_{t,c} * ln((1+A)/tf_t), where each
    cluster's documents are concatenated into one cluster document."""

    weights: sp.csr_matrix  # classes x terms
    classes: tuple[int, ...]
    vocab: Vocabulary
    avg_words_per_class: float  # A
    term_freq: np.ndarray       # tf_t, summed over classes


@dataclass(frozen=True)
class DynamicTopicMatrix:
    """Per-time-slice class weights sharing the global IDF term: the topic
    set is fixed, only the slice-local term frequencies change."""

    slices: tuple[int, ...]
    weights: dict[int, sp.csr_matrix]  # slice -> classes x terms
    classes: tuple[int, ...]
    vocab: Vocabulary


def classic_tfidf(cm: CountMatrix) -> TfidfWeights:
    if cm.row_kind != "per_document":
        raise TopicError("classic_tfidf needs a per_document count matrix")
    n = cm.counts.shape[0]
    df = np.asarray((cm.counts > 0).sum(axis=0)).ravel().astype(np.float64)
    idf = np.zeros_like(df)
    present = df > 0
    idf[present] = np.log((1.0 + n) / df[present])
    w = cm.counts.multiply(idf[None, :]).tocsr()
    return TfidfWeights(w, cm.vocab, n, df)


def _class_idf(avg_words: float, term_freq: np.ndarray) -> np.ndarray:
    idf = np.zeros_like(term_freq, dtype=np.float64)
    present = term_freq > 0
    idf[present] = np.log((1.0 + avg_words) / term_freq[present])
    return idf


def class_tfidf(cm: CountMatrix) -> ClassTfidf:
    if cm.row_kind != "per_class":
        raise TopicError("class_tfidf needs a per_class count matrix")
    n_classes = cm.counts.shape[0]
    if n_classes < 1:
        raise TopicError("need at least one class")
    tf_t = np.asarray(cm.counts.sum(axis=0)).ravel().astype(np.float64)
    a = float(tf_t.sum()) / n_classes
    w = cm.counts.multiply(_class_idf(a, tf_t)[None, :]).tocsr()
    classes = cm.class_ids if cm.class_ids is not None else tuple(range(n_classes))
    return ClassTfidf(w, classes, cm.vocab, a, tf_t)


def slice_count_matrix(
    token_lists: Sequence[Sequence[str]],
    labels: Sequence[int],
    vocab: Vocabulary,
    classes: Sequence[int],
) -> sp.csr_matrix:
    """Per-class counts aligned to a fixed class order; classes absent from
    this slice get zero rows."""
    class_row = {c: r for r, c in enumerate(classes)}
    rows, cols = [], []
    for tokens, label in zip(token_lists, labels):
        r = class_row.get(label)
        if r is None:
            continue
        for t in tokens:
            j = vocab.index.get(t)
            if j is not None:
                rows.append(r)
                cols.append(j)
    return sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)),
        shape=(len(classes), len(vocab)),
    )


def dynamic_class_tfidf(
    slice_counts: dict[int, sp.csr_matrix],
    global_fit: ClassTfidf,
) -> DynamicTopicMatrix:
    """Weight each slice's class counts with the global (all-time) IDF:
    W[t,c,i] = tf_{t,c,i} * ln((1+A)/tf_t)."""
    idf = _class_idf(global_fit.avg_words_per_class, global_fit.term_freq)
    weights = {}
    for key in sorted(slice_counts):
        counts = slice_counts[key]
        if counts.shape != (len(global_fit.classes), len(global_fit.vocab)):
            raise TopicError(f"slice {key}: count matrix shape mismatch")
        weights[key] = counts.multiply(idf[None, :]).tocsr()
    return DynamicTopicMatrix(
        tuple(sorted(slice_counts)), weights, global_fit.classes, global_fit.vocab
    )


@dataclass(frozen=True)
class TopicConfig:
    ngram_range: tuple[int, int] = (1, 3)
    min_term_count: int = 1
    stem: bool = False
    n_neighbors: int = 20
    reduced_dim: int = 5
    epochs: int = 200
    min_cluster_size: int = 50
    min_topic_size: int = 50
    top_n_words: int = 10
    seed: int = 0


@dataclass(frozen=True)
class TopicModel:
    labels: np.ndarray                     # per-document topic id, -1 noise
    class_tfidf: ClassTfidf
    top_words: dict[int, list[tuple[str, float]]]
    sizes: dict[int, int]
    min_topic_size: int

    @property
    def n_topics(self) -> int:
        return len(self.sizes)

    @property
    def topic_ids(self) -> list[int]:
        return sorted(self.sizes)


def ranked_terms(w: ClassTfidf, topic: int, k: int | None = None) -> list[tuple[str, float]]:
    """Terms of one cluster row ranked by descending weight, ties broken
    lexicographically; only terms present in the cluster are listed."""
    try:
        row_idx = w.classes.index(topic)
    except ValueError:
        raise TopicError(f"unknown topic id {topic}") from None
    row = w.weights.getrow(row_idx).tocoo()
    ranked = sorted(
        ((w.vocab.terms[j], float(v)) for j, v in zip(row.col, row.data)),
        key=lambda tv: (-tv[1], tv[0]),
    )
    return ranked if k is None else ranked[:k]


def top_words(tm: TopicModel, topic: int, k: int) -> list[tuple[str, float]]:
    if topic == -1:
        raise TopicError("noise (-1) has no topic representation")
    return ranked_terms(tm.class_tfidf, topic, k)


def _renumber_by_size(labels: np.ndarray, min_topic_size: int) -> np.ndarray:
    """Merge sub-threshold clusters into noise and renumber the survivors
    0.. by decreasing size (ties by old id)."""
    out = np.full_like(labels, -1)
    ids, counts = np.unique(labels[labels >= 0], return_counts=True)
    keep = [(int(c), int(i)) for i, c in zip(ids, counts) if c >= min_topic_size]
    keep.sort(key=lambda t: (-t[0], t[1]))
    for new, (_, old) in enumerate(keep):
        out[labels == old] = new
    return out


def fit_topic_model(
    corpus: Corpus,
    embeddings: np.ndarray,
    cfg: TopicConfig = TopicConfig(),
    normalizer: Normalizer | None = None,
    token_lists: list[list[str]] | None = None,
) -> TopicModel:
    """End-to-end fit: reduce embeddings to cfg.reduced_dim, cluster with
    density-based clustering, drop sub-threshold clusters to noise, then
    build class-based TF-IDF topic representations over non-noise
    documents. A model with zero topics (all noise) is valid output."""
    embeddings = np.asarray(embeddings)
    if embeddings.shape[0] != len(corpus):
        raise TopicError(
            f"embedding rows ({embeddings.shape[0]}) != corpus size ({len(corpus)})"
        )
    if token_lists is None:
        normalizer = normalizer or default_normalizer()
        token_lists = preprocess_corpus(corpus, normalizer, cfg.ngram_range, stem=cfg.stem)

    layout_cfg = _umap.LayoutConfig(
        out_dim=cfg.reduced_dim, epochs=cfg.epochs, seed=cfg.seed
    )
    reduced = _umap.reduce_embeddings(embeddings, k=cfg.n_neighbors, cfg=layout_cfg)
    result = _hdbscan.cluster(reduced, min_cluster_size=cfg.min_cluster_size)
    labels = _renumber_by_size(result.labels, cfg.min_topic_size)

    vocab = build_vocabulary(token_lists, cfg.ngram_range, cfg.min_term_count)
    kept = labels >= 0
    kept_tokens = [t for t, k in zip(token_lists, kept) if k]
    kept_labels = [int(l) for l in labels[kept]]
    if kept_tokens:
        cm = count_matrix(kept_tokens, vocab, grouping=kept_labels)
        ctfidf = class_tfidf(cm)
    else:
        ctfidf = ClassTfidf(
            sp.csr_matrix((0, len(vocab))), (), vocab, 0.0, np.zeros(len(vocab))
        )
    sizes = {c: int(np.sum(labels == c)) for c in ctfidf.classes}
    words = {c: ranked_terms(ctfidf, c, cfg.top_n_words) for c in ctfidf.classes}
    return TopicModel(labels, ctfidf, words, sizes, cfg.min_topic_size)


def fit_dynamic_topics(
    tm: TopicModel,
    token_lists: Sequence[Sequence[str]],
    years: Sequence[int],
) -> DynamicTopicMatrix:
    """Slice the training corpus by year and reweight each topic with
    slice-local term frequencies under the global IDF."""
    if len(years) != len(tm.labels):
        raise TopicError("years must align to the fitted corpus")
    ct = tm.class_tfidf
    slice_counts = {}
    for year in sorted(set(years)):
        in_slice = [i for i, y in enumerate(years) if y == year]
        slice_counts[year] = slice_count_matrix(
            [token_lists[i] for i in in_slice],
            [int(tm.labels[i]) for i in in_slice],
            ct.vocab, ct.classes,
        )
    return dynamic_class_tfidf(slice_counts, ct)


def save_model(tm: TopicModel, path: str | Path) -> None:
    ct = tm.class_tfidf
    coo = ct.weights.tocoo()
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "labels": [int(l) for l in tm.labels],
        "sizes": {str(k): v for k, v in tm.sizes.items()},
        "min_topic_size": tm.min_topic_size,
        "classes": list(ct.classes),
        "avg_words_per_class": ct.avg_words_per_class,
        "term_freq": ct.term_freq.tolist(),
        "vocab": {
            "terms": list(ct.vocab.terms),
            "ngram_range": list(ct.vocab.ngram_range),
            "min_term_count": ct.vocab.min_term_count,
        },
        "class_tfidf": {
            "shape": list(ct.weights.shape),
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "values": coo.data.tolist(),
        },
        "top_words": {
            str(k): [[w, s] for w, s in v] for k, v in tm.top_words.items()
        },
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> TopicModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise TopicError(f"{path}: unsupported model version {payload.get('version')!r}")
    v = payload["vocab"]
    vocab = Vocabulary(
        tuple(v["terms"]),
        {t: i for i, t in enumerate(v["terms"])},
        tuple(v["ngram_range"]),
        v["min_term_count"],
    )
    m = payload["class_tfidf"]
    weights = sp.csr_matrix(
        (m["values"], (m["rows"], m["cols"])), shape=tuple(m["shape"])
    )
    ct = ClassTfidf(
        weights,
        tuple(payload["classes"]),
        vocab,
        payload["avg_words_per_class"],
        np.asarray(payload["term_freq"], dtype=np.float64),
    )
    return TopicModel(
        labels=np.asarray(payload["labels"], dtype=np.int64),
        class_tfidf=ct,
        top_words={int(k): [(w, float(s)) for w, s in v]
                   for k, v in payload["top_words"].items()},
        sizes={int(k): int(v) for k, v in payload["sizes"].items()},
        min_topic_size=payload["min_topic_size"],
    )
