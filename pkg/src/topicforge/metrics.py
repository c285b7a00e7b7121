"""Topic-quality metrics: topic diversity, (inverted) rank-biased overlap,
and NPMI / Cv coherence over boolean sliding windows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence

JOINT_SMOOTHING = 1e-12
DEFAULT_RBO_P = 0.9
DEFAULT_WINDOW = 110


class MetricError(ValueError):
    pass


def _check_topics(topics: Sequence[Sequence[str]]) -> None:
    if not topics:
        raise MetricError("need at least one topic word list")
    k = len(topics[0])
    for i, t in enumerate(topics):
        if len(t) != k:
            raise MetricError(f"topic {i}: expected {k} words, got {len(t)}")
        if len(set(t)) != len(t):
            raise MetricError(f"topic {i}: duplicate words within a topic")
    if k < 2:
        raise MetricError("topic word lists must have k >= 2")


def topic_diversity(topics: Sequence[Sequence[str]]) -> float:
    """Fraction of unique words across all topics' word lists."""
    _check_topics(topics)
    total = sum(len(t) for t in topics)
    return len({w for t in topics for w in t}) / total


def rbo(s: Sequence[str], t: Sequence[str], p: float = DEFAULT_RBO_P) -> float:
    """Truncated, normalized rank-biased overlap of two equal-length
    rankings: sum_d p^(d-1) * |head_d(s) & head_d(t)| / d, normalized
    by sum_d p^(d-1)."""
    if not 0.0 < p < 1.0:
        raise MetricError(f"persistence p={p} must be in (0, 1)")
    if len(s) != len(t):
        raise MetricError("lists must have equal length")
    if len(set(s)) != len(s) or len(set(t)) != len(t):
        raise MetricError("lists must not contain duplicates")
    seen_s: set = set()
    seen_t: set = set()
    overlap = 0
    num = 0.0
    den = 0.0
    for d, (ws, wt) in enumerate(zip(s, t), start=1):
        if ws == wt:
            overlap += 1
        else:
            overlap += (ws in seen_t) + (wt in seen_s)
            seen_s.add(ws)
            seen_t.add(wt)
        weight = p ** (d - 1)
        num += weight * overlap / d
        den += weight
    return num / den if den else 0.0


def inverted_rbo(topics: Sequence[Sequence[str]], p: float = DEFAULT_RBO_P) -> float:
    """1 - mean RBO over all unordered topic pairs; higher is more diverse."""
    _check_topics(topics)
    if len(topics) < 2:
        raise MetricError("inverted RBO needs at least two topics")
    pairs = list(combinations(range(len(topics)), 2))
    mean = sum(rbo(topics[i], topics[j], p) for i, j in pairs) / len(pairs)
    return 1.0 - mean


@dataclass(frozen=True)
class WindowStats:
    """Boolean sliding-window co-occurrence counts: a word or pair counts
    once per window it appears in."""

    window_size: int
    word_counts: dict[str, int]
    pair_counts: dict[tuple[str, str], int]
    total_windows: int

    def count(self, w: str) -> int:
        return self.word_counts.get(w, 0)

    def pair_count(self, a: str, b: str) -> int:
        return self.pair_counts.get((a, b) if a <= b else (b, a), 0)


def window_stats(token_lists: Sequence[Sequence[str]], window_size: int) -> WindowStats:
    """Slide a window of window_size tokens (stride 1) over every document;
    documents shorter than the window contribute a single window."""
    if window_size < 1:
        raise MetricError("window_size must be >= 1")
    words: dict[str, int] = {}
    pairs: dict[tuple[str, str], int] = {}
    total = 0
    for tokens in token_lists:
        if not tokens:
            continue
        n_windows = max(1, len(tokens) - window_size + 1)
        total += n_windows
        for start in range(n_windows):
            seen = sorted(set(tokens[start : start + window_size]))
            for w in seen:
                words[w] = words.get(w, 0) + 1
            for a, b in combinations(seen, 2):
                pairs[(a, b)] = pairs.get((a, b), 0) + 1
    return WindowStats(window_size, words, pairs, total)


def npmi_pair(a: str, b: str, stats: WindowStats) -> float:
    """Normalized pointwise mutual information of one word pair, in [-1, 1].
    Pairs never co-windowed score -1 by convention."""
    if stats.total_windows == 0:
        return -1.0
    joint = stats.pair_count(a, b)
    if joint == 0:
        return -1.0
    p_a = stats.count(a) / stats.total_windows
    p_b = stats.count(b) / stats.total_windows
    p_ab = joint / stats.total_windows + JOINT_SMOOTHING
    if p_ab >= 1.0:
        return 1.0
    value = math.log(p_ab / (p_a * p_b)) / (-math.log(p_ab))
    return min(1.0, max(-1.0, value))


def coherence_npmi(topics: Sequence[Sequence[str]], stats: WindowStats) -> float:
    """Mean over topics of the mean pairwise NPMI between topic words."""
    _check_topics(topics)
    scores = []
    for topic in topics:
        pair_scores = [npmi_pair(a, b, stats) for a, b in combinations(topic, 2)]
        scores.append(sum(pair_scores) / len(pair_scores))
    return sum(scores) / len(scores)


def coherence_cv(topics: Sequence[Sequence[str]], stats: WindowStats) -> float:
    """Indirect-similarity coherence: each word's NPMI vector against the
    topic's words (self term 1) is compared by cosine with the vector sum;
    negative cosines clamp to 0. Mean over words, then over topics."""
    _check_topics(topics)
    topic_scores = []
    for topic in topics:
        vectors = []
        for wi in topic:
            vectors.append([
                1.0 if wi == wm else npmi_pair(wi, wm, stats) for wm in topic
            ])
        total = [sum(col) for col in zip(*vectors)]
        norm_total = math.sqrt(sum(x * x for x in total))
        sims = []
        for v in vectors:
            norm_v = math.sqrt(sum(x * x for x in v))
            if norm_v == 0.0 or norm_total == 0.0:
                sims.append(0.0)
            else:
                dot = sum(x * y for x, y in zip(v, total))
                sims.append(max(0.0, dot / (norm_v * norm_total)))
        topic_scores.append(sum(sims) / len(sims))
    return sum(topic_scores) / len(topic_scores)


@dataclass(frozen=True)
class MetricReport:
    n_topics: int
    topic_diversity: float
    inverted_rbo: float
    npmi: float
    cv: float


def evaluate_topics(
    topics: Sequence[Sequence[str]],
    token_lists: Sequence[Sequence[str]],
    p: float = DEFAULT_RBO_P,
    window_size: int = DEFAULT_WINDOW,
) -> MetricReport:
    """All four metrics for one set of topic word lists against a reference
    corpus of token lists."""
    stats = window_stats(token_lists, window_size)
    return MetricReport(
        n_topics=len(topics),
        topic_diversity=topic_diversity(topics),
        inverted_rbo=inverted_rbo(topics, p),
        npmi=coherence_npmi(topics, stats),
        cv=coherence_cv(topics, stats),
    )


def load_topic_file(path: str | Path) -> list[list[str]]:
    """Read external topic lists: one topic per line, words space-separated."""
    topics = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        words = line.split()
        if words:
            topics.append(words)
    if not topics:
        raise MetricError(f"{path}: no topics found")
    return topics
