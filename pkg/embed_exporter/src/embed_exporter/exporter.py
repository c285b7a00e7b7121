"""Encode a corpus with a pretrained sentence encoder and write the EMB1
binary consumed by the topicforge pipeline.

The exporter talks to the pipeline only through its file formats: the
corpus JSONL/CSV layout (id, title, abstract, date, source) and the EMB1
binary (magic "EMB1", uint32 LE row count, uint32 LE dimension, float32 LE
row-major data).
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"
DEFAULT_BATCH_SIZE = 64

_MAGIC = b"EMB1"
_REQUIRED_FIELDS = ("id", "title", "abstract", "date", "source")


class ExportError(ValueError):
    pass


@dataclass(frozen=True)
class ExportJob:
    corpus_path: str | Path
    out_path: str | Path
    model: str = DEFAULT_MODEL
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError("batch_size must be >= 1")


class Encoder(Protocol):
    dimension: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class SentenceTransformerEncoder:
    """Deterministic CPU inference with a sentence-transformers model."""

    def __init__(self, model_name: str = DEFAULT_MODEL):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise ExportError(f"sentence-transformers is not installed: {e}") from e
        try:
            self._model = SentenceTransformer(model_name, device="cpu")
        except Exception as e:
            raise ExportError(f"cannot load encoder {model_name!r}: {e}") from e
        self._model.eval()
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = self._model.encode(
            list(texts),
            batch_size=len(texts) or 1,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(out, dtype=np.float32)


def _text_from_record(record: dict, where: str) -> str:
    for f in _REQUIRED_FIELDS:
        if f not in record or record[f] is None:
            raise ExportError(f"{where}: missing field {f!r}")
    return f"{record['title']}. {record['abstract']}"


def load_corpus_texts(path: str | Path, format: str | None = None) -> list[str]:
    """One 'title. abstract' string per document, in file order."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise ExportError(f"unknown corpus format {format!r}")
    texts: list[str] = []
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ExportError(f"{path}:{lineno}: parse error: {e}") from e
                texts.append(_text_from_record(record, f"{path}:{lineno}"))
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [f for f in _REQUIRED_FIELDS
                       if f not in (reader.fieldnames or [])]
            if missing:
                raise ExportError(f"{path}: missing column(s) {', '.join(missing)}")
            for lineno, row in enumerate(reader, start=2):
                texts.append(_text_from_record(row, f"{path}:{lineno}"))
    return texts


def write_emb1(m: np.ndarray, path: str | Path) -> None:
    m = np.ascontiguousarray(m, dtype="<f4")
    if m.ndim != 2:
        raise ExportError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ExportError("embeddings contain non-finite values")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.tobytes())


def export(job: ExportJob, encoder: Encoder | None = None) -> np.ndarray:
    """Encode every document and write the EMB1 file; returns the matrix.
    Rows follow corpus order exactly."""
    texts = load_corpus_texts(job.corpus_path)
    if encoder is None:
        encoder = SentenceTransformerEncoder(job.model)
    rows = [
        encoder.encode(texts[start : start + job.batch_size])
        for start in range(0, len(texts), job.batch_size)
    ]
    if rows:
        m = np.concatenate(rows, axis=0).astype(np.float32)
    else:
        m = np.zeros((0, encoder.dimension), dtype=np.float32)
    if m.shape != (len(texts), encoder.dimension):
        raise ExportError(
            f"encoder returned shape {m.shape}, expected "
            f"({len(texts)}, {encoder.dimension})"
        )
    write_emb1(m, job.out_path)
    return m
