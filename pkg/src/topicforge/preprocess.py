"""Text normalization, n-gram tokenization, vocabulary and count matrices."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus


class PreprocessError(ValueError):
    pass


_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_HASHTAG_RE = re.compile(r"[@#]\w+")
_NON_ALPHA_RE = re.compile(r"[^a-zA-Z\s]+")
_WS_RE = re.compile(r"\s+")


def _load_lines(name: str) -> list[str]:
    text = resources.files("topicforge.data").joinpath(name).read_text("utf-8")
    return [line for line in text.splitlines() if line.strip()]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Built-in English stopword list, or a user-supplied one-per-line file."""
    if path is None:
        lines = _load_lines("stopwords.txt")
    else:
        lines = [l for l in Path(path).read_text("utf-8").splitlines() if l.strip()]
    return frozenset(w.strip().lower() for w in lines)


def load_contractions(path: str | Path | None = None) -> dict[str, str]:
    """Contraction table (tab-separated pairs, one per line)."""
    if path is None:
        lines = _load_lines("contractions.txt")
    else:
        lines = [l for l in Path(path).read_text("utf-8").splitlines() if l.strip()]
    table: dict[str, str] = {}
    for line in lines:
        parts = line.split("\t")
        if len(parts) != 2:
            raise PreprocessError(f"bad contraction entry {line!r}")
        table[parts[0].strip().lower()] = parts[1].strip().lower()
    return table


@dataclass(frozen=True)
class Normalizer:
    """Text cleanup configuration. Applying the same normalizer twice is a
    no-op on already-normalized text."""

    lowercase: bool = True
    strip_urls: bool = True
    strip_mentions_hashtags: bool = True
    alphabetic_only: bool = True
    expand_contractions: bool = True
    stopwords: frozenset[str] = frozenset()

    _contraction_re: re.Pattern = field(init=False, repr=False, compare=False, default=None)
    _contractions: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        table = load_contractions()
        keys = sorted(table, key=len, reverse=True)
        pattern = re.compile(r"\b(?:" + "|".join(re.escape(k) for k in keys) + r")\b")
        object.__setattr__(self, "_contractions", table)
        object.__setattr__(self, "_contraction_re", pattern)


def default_normalizer(stopwords: frozenset[str] | None = None) -> Normalizer:
    return Normalizer(stopwords=load_stopwords() if stopwords is None else stopwords)


def normalize_text(s: str, n: Normalizer) -> str:
    """Apply cleanup steps in fixed order: lowercase, URL strip,
    mention/hashtag strip, contraction expansion, non-alphabetic removal,
    whitespace collapse."""
    if n.lowercase:
        s = s.lower()
    if n.strip_urls:
        s = _URL_RE.sub(" ", s)
    if n.strip_mentions_hashtags:
        s = _MENTION_HASHTAG_RE.sub(" ", s)
    if n.expand_contractions:
        s = n._contraction_re.sub(lambda m: n._contractions[m.group(0).lower()], s)
    if n.alphabetic_only:
        s = _NON_ALPHA_RE.sub(" ", s)
    return _WS_RE.sub(" ", s).strip()


def light_stem(token: str, min_stem: int = 3) -> str:
    """Rule-based suffix stripper (plural -s/-es, -ing, -ed) with a
    minimum-stem-length guard. A lightweight stand-in for lemmatization."""
    for suffix in ("ing", "ed", "es", "s"):
        if token.endswith(suffix) and len(token) - len(suffix) >= min_stem:
            return token[: -len(suffix)]
    return token


def tokenize(
    s: str,
    stopwords: frozenset[str] | set[str] = frozenset(),
    ngram_range: tuple[int, int] = (1, 1),
    stem: bool = False,
) -> list[str]:
    """Whitespace-split an already-normalized string, drop stopwords, then
    emit n-grams of each length in ngram_range (joined by single spaces),
    in document order. Stopwords are removed before n-gram formation."""
    lo, hi = ngram_range
    if not 1 <= lo <= hi:
        raise PreprocessError(f"bad ngram_range {ngram_range}")
    words = [w for w in s.split() if w not in stopwords]
    if stem:
        words = [light_stem(w) for w in words]
    out: list[str] = []
    for n in range(lo, hi + 1):
        out.extend(" ".join(words[i : i + n]) for i in range(len(words) - n + 1))
    return out


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    index: dict[str, int]
    ngram_range: tuple[int, int] = (1, 1)
    min_term_count: int = 1

    def __len__(self) -> int:
        return len(self.terms)


def build_vocabulary(
    token_lists: Sequence[Sequence[str]],
    ngram_range: tuple[int, int] = (1, 1),
    min_term_count: int = 1,
) -> Vocabulary:
    """Collect terms with total corpus count >= min_term_count, ordered
    lexicographically for determinism."""
    if min_term_count < 1:
        raise PreprocessError("min_term_count must be >= 1")
    counts: dict[str, int] = {}
    for tokens in token_lists:
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    terms = tuple(sorted(t for t, c in counts.items() if c >= min_term_count))
    if not terms:
        raise PreprocessError("empty vocabulary: no term meets min_term_count")
    return Vocabulary(terms, {t: i for i, t in enumerate(terms)}, ngram_range, min_term_count)


@dataclass(frozen=True)
class CountMatrix:
    """Sparse token counts; rows are documents or classes, columns follow
    the vocabulary order."""

    counts: sp.csr_matrix
    vocab: Vocabulary
    row_kind: str  # "per_document" | "per_class"
    class_ids: tuple[int, ...] | None = None  # per_class: label of each row

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


def count_matrix(
    token_lists: Sequence[Sequence[str]],
    v: Vocabulary,
    grouping: Sequence[int] | None = None,
) -> CountMatrix:
    """Build a per-document count matrix, or (with class labels) a per-class
    matrix where row c is the column-wise sum over the class's documents.
    Tokens outside the vocabulary are ignored."""
    rows: list[int] = []
    cols: list[int] = []
    for i, tokens in enumerate(token_lists):
        for t in tokens:
            j = v.index.get(t)
            if j is not None:
                rows.append(i)
                cols.append(j)
    per_doc = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)),
        shape=(len(token_lists), len(v)),
    )
    if grouping is None:
        return CountMatrix(per_doc, v, "per_document")

    if len(grouping) != len(token_lists):
        raise PreprocessError(
            f"grouping covers {len(grouping)} rows but matrix has {len(token_lists)}"
        )
    classes = sorted(set(grouping))
    class_row = {c: r for r, c in enumerate(classes)}
    indicator = sp.csr_matrix(
        (np.ones(len(grouping), dtype=np.int64),
         ([class_row[g] for g in grouping], range(len(grouping)))),
        shape=(len(classes), len(token_lists)),
    )
    return CountMatrix(indicator @ per_doc, v, "per_class", tuple(classes))


def preprocess_corpus(
    corpus: Corpus,
    normalizer: Normalizer,
    ngram_range: tuple[int, int] = (1, 1),
    stem: bool = False,
) -> list[list[str]]:
    """Normalize and tokenize every document's combined title+abstract."""
    return [
        tokenize(normalize_text(d.combined_text(), normalizer),
                 normalizer.stopwords, ngram_range, stem=stem)
        for d in corpus
    ]
