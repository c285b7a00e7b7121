import string

import numpy as np
import pytest

from topicforge.corpus import Corpus, DocDate, Document
from topicforge.embedding import hash_embedding_provider

LETTERS = string.ascii_lowercase

# one line per acceptance criterion, echoed after the run summary
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    for line in acceptance_lines:
        terminalreporter.write_line(line)


def make_planted_corpus(n_blocks=3, docs_per_block=60, vocab_size=8,
                        words_per_doc=15, seed=42, embed_dim=64):
    """Synthetic corpus of n_blocks disjoint vocabularies, one signature
    word per block guaranteed in every document, with hash embeddings
    perturbed per block."""
    rng = np.random.default_rng(seed)
    vocabs = [
        [f"{LETTERS[b] * 2}{LETTERS[j]}{LETTERS[j]}x" for j in range(vocab_size)]
        for b in range(n_blocks)
    ]
    signatures = [f"signature{LETTERS[b] * 3}" for b in range(n_blocks)]
    docs = []
    block_of = []
    for b in range(n_blocks):
        for i in range(docs_per_block):
            words = [signatures[b]] + list(rng.choice(vocabs[b], size=words_per_doc))
            rng.shuffle(words)
            text = " ".join(words)
            docs.append(Document(
                id=f"doc{b}x{i}", title=text[:30], abstract=text,
                date=DocDate(2018 + b), source="other",
            ))
            block_of.append(b)
    corpus = Corpus(tuple(docs))
    texts = [d.combined_text() for d in corpus]
    emb = hash_embedding_provider(texts, embed_dim, seed=7)
    emb = emb + rng.normal(0, 0.01, emb.shape).astype(np.float32)
    return corpus, emb, signatures, np.array(block_of)


@pytest.fixture(scope="session")
def planted():
    return make_planted_corpus()


@pytest.fixture(scope="session")
def planted_model(planted):
    from topicforge.topics import TopicConfig, fit_topic_model

    corpus, emb, _, _ = planted
    cfg = TopicConfig(ngram_range=(1, 1), min_cluster_size=10, min_topic_size=10,
                      n_neighbors=15, seed=0)
    return fit_topic_model(corpus, emb, cfg)


def make_blobs(sizes, centers, scale=0.5, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    pts = np.concatenate([
        rng.normal(c, scale, (s, dim)) for s, c in zip(sizes, centers)
    ])
    labels = np.concatenate([np.full(s, i) for i, s in enumerate(sizes)])
    return pts, labels
