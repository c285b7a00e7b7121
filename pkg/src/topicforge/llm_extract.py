"""Chat-completion client that extracts ML-model mentions from paper
titles and abstracts. Transport is injectable so runs are replayable
offline from a canned-response fixture."""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import requests

from .corpus import Corpus, Document

DEFAULT_SYSTEM = "You are a helpful text summarization assistant."
DEFAULT_USER_TEMPLATE = (
    "Given title and abstract of the research paper in the format "
    "[Title:Abstract], generate the machine learning model name if they "
    "used machine learning technique in the format [Model: your ML model] "
    "for the {user_text}"
)

_MODEL_RE = re.compile(r"\[\s*model\s*:\s*([^\]]*?)\s*\]", re.IGNORECASE)

API_KEY_ENV = "TOPICFORGE_API_KEY"


class ExtractError(ValueError):
    pass


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChatPromptTemplate:
    system: str = DEFAULT_SYSTEM
    user_template: str = DEFAULT_USER_TEMPLATE

    def __post_init__(self):
        if self.user_template.count("{user_text}") != 1:
            raise ExtractError("user_template needs exactly one {user_text} slot")


def build_prompt(doc: Document, template: ChatPromptTemplate = ChatPromptTemplate()) -> list[dict]:
    """Chat messages for one document; the user slot gets 'title:abstract'."""
    if not doc.title and not doc.abstract:
        raise ExtractError(f"document {doc.id!r}: title and abstract both empty")
    user_text = f"{doc.title}:{doc.abstract}"
    return [
        {"role": "system", "content": template.system},
        {"role": "user", "content": template.user_template.replace("{user_text}", user_text)},
    ]


def parse_model_name(response: str) -> str | None:
    """First '[Model: X]' occurrence, key case-insensitive, X trimmed.
    Absence (or an empty X) is None, not an error."""
    m = _MODEL_RE.search(response)
    if not m:
        return None
    name = m.group(1).strip()
    return name or None


@dataclass(frozen=True)
class ExtractionResult:
    doc_id: str
    model_name: str | None
    raw_response: str
    status: str  # ok | no_model | parse_failed | transport_error


@dataclass(frozen=True)
class EndpointConfig:
    url: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    api_key: str | None = None
    temperature: float = 0.0
    max_attempts: int = 5
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    max_requests_per_minute: float | None = None
    max_concurrency: int = 4
    timeout: float = 60.0


@dataclass(frozen=True)
class TransportResponse:
    status: int
    body: str


def request_fingerprint(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class HttpTransport:
    """Live HTTP POST to an OpenAI-compatible chat-completions endpoint."""

    def __init__(self, cfg: EndpointConfig):
        if not cfg.api_key:
            raise ExtractError(f"live transport needs an API key ({API_KEY_ENV})")
        self.cfg = cfg

    def send(self, payload: dict) -> TransportResponse:
        try:
            resp = requests.post(
                self.cfg.url,
                json=payload,
                headers={"Authorization": f"Bearer {self.cfg.api_key}"},
                timeout=self.cfg.timeout,
            )
        except requests.RequestException as e:
            raise TransportError(str(e)) from e
        return TransportResponse(resp.status_code, resp.text)


class ReplayTransport:
    """Deterministic transport fed from a fixture file.

    Fixture format (JSON): {"responses": {<fingerprint>: [{"status": int,
    "body": str}, ...]}, "default": [...]}. Responses for one request are
    consumed in order; the last one repeats. A request with no entry and
    no default raises TransportError.
    """

    def __init__(self, fixture: dict | str | Path):
        if not isinstance(fixture, dict):
            fixture = json.loads(Path(fixture).read_text(encoding="utf-8"))
        self._responses = fixture.get("responses", {})
        self._default = fixture.get("default")
        self._cursor: dict[str, int] = {}
        self._lock = threading.Lock()

    def send(self, payload: dict) -> TransportResponse:
        key = request_fingerprint(payload)
        with self._lock:
            entries = self._responses.get(key, self._default)
            if not entries:
                raise TransportError(f"no replay entry for request {key[:12]}...")
            i = min(self._cursor.get(key, 0), len(entries) - 1)
            self._cursor[key] = i + 1
        entry = entries[i]
        return TransportResponse(entry.get("status", 200), entry.get("body", ""))


def _parse_completion(body: str) -> str:
    data = json.loads(body)
    return data["choices"][0]["message"]["content"]


def extract_one(
    doc: Document,
    cfg: EndpointConfig,
    transport,
    template: ChatPromptTemplate = ChatPromptTemplate(),
    sleep: Callable[[float], None] = time.sleep,
) -> ExtractionResult:
    """One document with retry: exponential backoff (base 1 s, factor 2,
    up to max_attempts) on transport exceptions, 429, and 5xx."""
    payload = {
        "model": cfg.model,
        "messages": build_prompt(doc, template),
        "temperature": cfg.temperature,
    }
    last = ""
    for attempt in range(cfg.max_attempts):
        try:
            resp = transport.send(payload)
        except TransportError as e:
            last = str(e)
            resp = None
        if resp is not None:
            last = resp.body
            if resp.status == 200:
                try:
                    content = _parse_completion(resp.body)
                except (ValueError, KeyError, IndexError, TypeError):
                    return ExtractionResult(doc.id, None, resp.body, "parse_failed")
                name = parse_model_name(content)
                if name is None:
                    return ExtractionResult(doc.id, None, resp.body, "no_model")
                return ExtractionResult(doc.id, name, resp.body, "ok")
            if resp.status != 429 and resp.status < 500:
                return ExtractionResult(doc.id, None, resp.body, "transport_error")
        if attempt < cfg.max_attempts - 1:
            sleep(cfg.backoff_base * cfg.backoff_factor ** attempt)
    return ExtractionResult(doc.id, None, last, "transport_error")


class _Throttle:
    """Paces request starts to a maximum rate per minute."""

    def __init__(self, per_minute: float | None,
                 clock: Callable[[], float], sleep: Callable[[float], None]):
        self.interval = 60.0 / per_minute if per_minute else 0.0
        self.clock = clock
        self.sleep = sleep
        self.next_slot = 0.0
        self.lock = threading.Lock()

    def wait(self) -> None:
        if self.interval <= 0.0:
            return
        with self.lock:
            now = self.clock()
            start = max(now, self.next_slot)
            self.next_slot = start + self.interval
            delay = start - now
        if delay > 0:
            self.sleep(delay)


def extract_models(
    corpus: Corpus,
    cfg: EndpointConfig,
    transport,
    template: ChatPromptTemplate = ChatPromptTemplate(),
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> list[ExtractionResult]:
    """One result per document, in corpus order. Individual failures are
    recorded, never fatal. Requests run on a bounded worker pool with
    optional rate throttling."""
    throttle = _Throttle(cfg.max_requests_per_minute, clock, sleep)

    def run(doc: Document) -> ExtractionResult:
        throttle.wait()
        return extract_one(doc, cfg, transport, template, sleep)

    if cfg.max_concurrency <= 1 or len(corpus) <= 1:
        return [run(doc) for doc in corpus]
    with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as pool:
        return list(pool.map(run, corpus.documents))


def normalize_model_name(name: str) -> str:
    return " ".join(name.lower().split())


def aggregate_model_frequencies(
    results: Sequence[ExtractionResult], corpus: Corpus
) -> dict[int, dict[str, int]]:
    """Per-publication-year counts of normalized model names from ok
    results; feeds the word-cloud exports."""
    year_by_id = {doc.id: doc.date.year for doc in corpus}
    out: dict[int, dict[str, int]] = {}
    for r in results:
        if r.status != "ok":
            continue
        if r.doc_id not in year_by_id:
            raise ExtractError(f"result for unknown document {r.doc_id!r}")
        year = year_by_id[r.doc_id]
        name = normalize_model_name(r.model_name)
        per_year = out.setdefault(year, {})
        per_year[name] = per_year.get(name, 0) + 1
    return out
