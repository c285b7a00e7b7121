"""Corpus-to-EMB1 embedding exporter."""

from .exporter import (  # noqa: F401
    DEFAULT_BATCH_SIZE, DEFAULT_MODEL, ExportError, ExportJob,
    SentenceTransformerEncoder, export, load_corpus_texts, write_emb1,
)

__version__ = "0.1.0"
