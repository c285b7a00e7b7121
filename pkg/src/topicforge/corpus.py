"""Corpus loading, validation, keyword filtering, and year summaries."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

SOURCES = {"pubmed", "biorxiv", "medrxiv", "arxiv", "acm", "other"}

REQUIRED_FIELDS = ("id", "title", "abstract", "date", "source")

_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")


class CorpusError(ValueError):
    """Raised on malformed corpus files or invariant violations."""


@dataclass(frozen=True)
class DocDate:
    """Calendar date with optional month/day (yearly granularity is enough
    for the trend analyses; finer parts are kept when present)."""

    year: int
    month: int | None = None
    day: int | None = None

    def __str__(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"

    @classmethod
    def parse(cls, raw: str) -> "DocDate":
        m = _DATE_RE.match(raw.strip())
        if not m:
            raise CorpusError(f"bad date {raw!r}: expected YYYY, YYYY-MM, or YYYY-MM-DD")
        year = int(m.group(1))
        if not 1900 <= year <= 2100:
            raise CorpusError(f"year {year} outside [1900, 2100]")
        month = int(m.group(2)) if m.group(2) else None
        day = int(m.group(3)) if m.group(3) else None
        if month is not None and not 1 <= month <= 12:
            raise CorpusError(f"bad month in date {raw!r}")
        if day is not None and not 1 <= day <= 31:
            raise CorpusError(f"bad day in date {raw!r}")
        return cls(year, month, day)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    abstract: str
    date: DocDate
    source: str = "other"

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be nonempty")
        if not self.title and not self.abstract:
            raise CorpusError(f"document {self.id!r}: title and abstract both empty")
        if self.source not in SOURCES:
            raise CorpusError(f"document {self.id!r}: unknown source {self.source!r}")

    def combined_text(self) -> str:
        """Title and abstract joined as a single analysis unit."""
        return f"{self.title}. {self.abstract}"


@dataclass(frozen=True)
class Corpus:
    """Ordered document collection; index i is the canonical row order for
    every downstream matrix. Immutable after construction."""

    documents: tuple[Document, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i: int) -> Document:
        return self.documents[i]


@dataclass(frozen=True)
class KeywordQuery:
    keywords: tuple[str, ...]
    mode: str = "any"  # "any" | "all"

    def __post_init__(self):
        if not self.keywords:
            raise CorpusError("keyword query must contain at least one keyword")
        if self.mode not in ("any", "all"):
            raise CorpusError(f"bad query mode {self.mode!r}")


def _doc_from_record(record: dict, where: str) -> Document:
    for f in REQUIRED_FIELDS:
        if f not in record or record[f] is None:
            raise CorpusError(f"{where}: missing field {f!r}")
    return Document(
        id=str(record["id"]),
        title=str(record["title"]),
        abstract=str(record["abstract"]),
        date=DocDate.parse(str(record["date"])),
        source=str(record["source"]).lower(),
    )


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a corpus from JSONL or CSV. Format inferred from suffix when
    not given. Duplicate ids and missing fields are hard errors."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format {format!r}")

    docs: list[Document] = []
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise CorpusError(f"{path}:{lineno}: parse error: {e}") from e
                docs.append(_doc_from_record(record, f"{path}:{lineno}"))
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [f for f in REQUIRED_FIELDS if f not in header]
            if missing:
                raise CorpusError(f"{path}: missing column(s) {', '.join(missing)}")
            for lineno, row in enumerate(reader, start=2):
                docs.append(_doc_from_record(row, f"{path}:{lineno}"))
    return Corpus(tuple(docs))


def save_corpus(c: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL (the canonical on-disk form)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in c:
            fh.write(json.dumps({
                "id": doc.id,
                "title": doc.title,
                "abstract": doc.abstract,
                "date": str(doc.date),
                "source": doc.source,
            }, ensure_ascii=False) + "\n")


def filter_by_keywords(c: Corpus, q: KeywordQuery) -> Corpus:
    """Keep documents matching the query as a case-insensitive substring of
    title or abstract (mode "any": at least one phrase; "all": every phrase)."""
    phrases = [k.lower() for k in q.keywords]

    def matches(doc: Document) -> bool:
        text = doc.title.lower() + "\n" + doc.abstract.lower()
        hits = (p in text for p in phrases)
        return any(hits) if q.mode == "any" else all(hits)

    return Corpus(tuple(d for d in c if matches(d)))


def year_histogram(c: Corpus) -> dict[int, int]:
    hist: dict[int, int] = {}
    for doc in c:
        hist[doc.date.year] = hist.get(doc.date.year, 0) + 1
    return hist


def load_keywords(path: str | Path) -> tuple[str, ...]:
    """Read a keyword file: one phrase per line, blanks ignored."""
    with open(path, encoding="utf-8") as fh:
        kws = tuple(line.strip() for line in fh if line.strip())
    if not kws:
        raise CorpusError(f"{path}: no keywords found")
    return kws
