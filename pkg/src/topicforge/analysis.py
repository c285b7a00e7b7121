"""Post-fit analytics: topic similarity, hierarchical topic tree, 2D topic
scatter, word-score reports, word-cloud frequency exports, and dynamic
topic reports. All exports are plain CSV so any plotting tool can render
them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import umap as _umap
from .topics import DynamicTopicMatrix, TopicError, TopicModel, ranked_terms


class AnalysisError(ValueError):
    pass


def _ctfidf_rows(tm: TopicModel) -> np.ndarray:
    return np.asarray(tm.class_tfidf.weights.todense(), dtype=np.float64)


def topic_similarity_matrix(tm: TopicModel) -> np.ndarray:
    """Pairwise cosine similarity between topics' class-TF-IDF rows."""
    if tm.n_topics < 2:
        raise AnalysisError("similarity matrix needs at least 2 topics")
    rows = _ctfidf_rows(tm)
    norms = np.linalg.norm(rows, axis=1)
    norms[norms == 0.0] = 1.0
    unit = rows / norms[:, None]
    sim = unit @ unit.T
    sim = np.clip((sim + sim.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(sim, 1.0)
    return sim


@dataclass(frozen=True)
class TopicTree:
    """Binary merge tree over topics. Nodes 0..n-1 are leaves (leaves[i] is
    that node's topic id); merge m joins its two nodes into node n + m at
    the given cosine-distance height."""

    leaves: tuple[int, ...]
    merges: tuple[tuple[int, int, float], ...]  # (left node, right node, height)


def hierarchical_topic_tree(tm: TopicModel, top_n: int | None = None) -> TopicTree:
    """Average-linkage agglomeration over cosine distance between the
    class-TF-IDF rows of the top_n largest topics."""
    topics = sorted(tm.sizes, key=lambda c: (-tm.sizes[c], c))
    if top_n is not None:
        if top_n > len(topics):
            raise AnalysisError(f"top_n={top_n} exceeds topic count {len(topics)}")
        topics = topics[:top_n]
    if len(topics) < 2:
        raise AnalysisError("tree needs at least 2 topics")

    sim = topic_similarity_matrix(tm)
    order = {c: i for i, c in enumerate(tm.class_tfidf.classes)}
    idx = [order[c] for c in topics]
    dist = 1.0 - sim[np.ix_(idx, idx)]

    n = len(topics)
    active: dict[int, list[int]] = {i: [i] for i in range(n)}  # node -> leaf rows
    merges: list[tuple[int, int, float]] = []
    next_id = n
    while len(active) > 1:
        best = None
        keys = sorted(active)
        for ai in range(len(keys)):
            for bi in range(ai + 1, len(keys)):
                a, b = keys[ai], keys[bi]
                d = float(np.mean([dist[x, y] for x in active[a] for y in active[b]]))
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        merges.append((a, b, d))
        active[next_id] = active.pop(a) + active.pop(b)
        next_id += 1
    return TopicTree(tuple(topics), tuple(merges))


def topic_scatter_2d(
    tm: TopicModel, embeddings: np.ndarray, seed: int = 0
) -> list[tuple[int, float, float, int, str]]:
    """Per-topic (topic id, x, y, size, label): topic vectors are member
    centroids in the original embedding space, reduced to 2D."""
    embeddings = np.asarray(embeddings)
    topics = sorted(tm.sizes)
    if not topics:
        raise AnalysisError("model has no topics")
    centroids = np.stack([
        embeddings[tm.labels == c].mean(axis=0) for c in topics
    ])
    if len(topics) == 1:
        coords = np.zeros((1, 2))
    elif len(topics) <= 3:
        # too few points for a kNN graph; project onto the first two
        # principal directions instead
        centered = centroids - centroids.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        coords = centered @ vt[:2].T
        if coords.shape[1] < 2:
            coords = np.column_stack([coords, np.zeros(len(topics))])
    else:
        k = min(15, len(topics) - 1)
        cfg = _umap.LayoutConfig(out_dim=2, epochs=200, seed=seed)
        coords = _umap.reduce_embeddings(centroids, k=k, cfg=cfg)
    out = []
    for i, c in enumerate(topics):
        words = [w for w, _ in ranked_terms(tm.class_tfidf, c, 3)]
        out.append((c, float(coords[i, 0]), float(coords[i, 1]),
                    tm.sizes[c], "_".join(words)))
    return out


def word_scores_report(
    tm: TopicModel, top_k_topics: int = 8, words_per_topic: int = 5
) -> dict[int, list[tuple[str, float]]]:
    """Ranked words for the largest topics, scores normalized per topic so
    the top word scores 1.0."""
    topics = sorted(tm.sizes, key=lambda c: (-tm.sizes[c], c))[:top_k_topics]
    report = {}
    for c in topics:
        ranked = ranked_terms(tm.class_tfidf, c, words_per_topic)
        if not ranked:
            report[c] = []
            continue
        top = ranked[0][1]
        report[c] = [(w, s / top if top > 0 else 0.0) for w, s in ranked]
    return report


def wordcloud_export(frequencies: dict[str, float], path: str | Path) -> None:
    """CSV "term,weight" sorted by descending weight (ties lexicographic),
    weights scaled so the maximum is 100."""
    if not frequencies:
        raise AnalysisError("empty frequency map")
    top = max(frequencies.values())
    rows = sorted(frequencies.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "weight"])
        for term, count in rows:
            writer.writerow([term, f"{100.0 * count / top:g}"])


def dynamic_report(
    dtm: DynamicTopicMatrix, topic: int, k: int = 10
) -> dict[int, list[tuple[str, float]]]:
    """Top-k words of one topic per time slice."""
    try:
        row = dtm.classes.index(topic)
    except ValueError:
        raise TopicError(f"unknown topic id {topic}") from None
    report = {}
    for s in dtm.slices:
        coo = dtm.weights[s].getrow(row).tocoo()
        ranked = sorted(
            ((dtm.vocab.terms[j], float(v)) for j, v in zip(coo.col, coo.data)),
            key=lambda tv: (-tv[1], tv[0]),
        )
        report[s] = ranked[:k]
    return report


# ------------------------------ CSV exports ------------------------------

def export_similarity_csv(tm: TopicModel, path: str | Path) -> None:
    sim = topic_similarity_matrix(tm)
    topics = list(tm.class_tfidf.classes)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic"] + [str(c) for c in topics])
        for i, c in enumerate(topics):
            writer.writerow([c] + [f"{v:.6f}" for v in sim[i]])


def export_tree_csv(tree: TopicTree, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["merge", "left", "right", "height"])
        for m, (l, r, h) in enumerate(tree.merges):
            writer.writerow([m, l, r, f"{h:.6f}"])


def export_scatter_csv(points, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "x", "y", "size", "label"])
        for topic, x, y, size, label in points:
            writer.writerow([topic, f"{x:.6f}", f"{y:.6f}", size, label])


def export_word_scores_csv(report, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "rank", "word", "score"])
        for topic in sorted(report):
            for rank, (word, score) in enumerate(report[topic], start=1):
                writer.writerow([topic, rank, word, f"{score:.6f}"])


def export_dynamic_csv(report, topic: int, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "slice", "rank", "word", "score"])
        for s in sorted(report):
            for rank, (word, score) in enumerate(report[s], start=1):
                writer.writerow([topic, s, rank, word, f"{score:.6f}"])
