"""Command-line surface: ingest, fit, evaluate, analyze, extract-models.

Exit codes: 0 success, 2 usage/validation failure, 3 data mismatch,
4 credential/transport failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import analysis, llm_extract, metrics, topics
from .corpus import (
    Corpus, CorpusError, KeywordQuery, filter_by_keywords, load_corpus,
    load_keywords, save_corpus, year_histogram,
)
from .embedding import EmbeddingError, read_embeddings
from .preprocess import PreprocessError, default_normalizer, preprocess_corpus

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISMATCH = 3
EXIT_CREDENTIALS = 4

_VALIDATION_ERRORS = (
    CorpusError, PreprocessError, EmbeddingError, metrics.MetricError,
    topics.TopicError, analysis.AnalysisError, llm_extract.ExtractError,
    OSError,
)


class CliError(SystemExit):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(code)


def _load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _apply_config(parser: argparse.ArgumentParser, command: str, path: str) -> None:
    """Config keys are '<command>.<option>' with dashes or underscores;
    CLI flags override config, config overrides built-in defaults."""
    known = {a.dest: a for a in parser._actions}
    overrides = {}
    for key, value in _load_config(path).items():
        cmd, _, opt = key.partition(".")
        dest = opt.replace("-", "_")
        if cmd != command or dest not in known:
            raise CliError(f"unknown config key {key!r}")
        action = known[dest]
        try:
            overrides[dest] = action.type(value) if callable(action.type) else value
        except (TypeError, ValueError):
            raise CliError(f"bad value for config key {key!r}: {value!r}") from None
    parser.set_defaults(**overrides)


def _histogram_lines(c: Corpus) -> list[str]:
    hist = year_histogram(c)
    return [f"{year}\t{hist[year]}" for year in sorted(hist, reverse=True)]


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.input, args.format)
    if args.keywords:
        query = KeywordQuery(load_keywords(args.keywords), args.mode)
        corpus = filter_by_keywords(corpus, query)
    save_corpus(corpus, args.out)
    print(f"documents: {len(corpus)}")
    print("year\tcount")
    for line in _histogram_lines(corpus):
        print(line)
    return EXIT_OK


def cmd_fit(args) -> int:
    corpus = load_corpus(args.corpus)
    emb = read_embeddings(args.embeddings)
    if emb.shape[0] != len(corpus):
        print(
            f"error: embedding rows ({emb.shape[0]}) do not match corpus size "
            f"({len(corpus)})", file=sys.stderr,
        )
        return EXIT_MISMATCH
    cfg = topics.TopicConfig(
        ngram_range=(args.ngram_min, args.ngram_max),
        min_term_count=args.min_term_count,
        n_neighbors=args.n_neighbors,
        epochs=args.epochs,
        min_cluster_size=args.min_cluster_size,
        min_topic_size=args.min_topic_size,
        top_n_words=args.top_n_words,
        seed=args.seed,
    )
    tm = topics.fit_topic_model(corpus, emb, cfg)
    topics.save_model(tm, args.out)
    print(f"topics: {tm.n_topics}")
    noise = int((tm.labels == -1).sum())
    print(f"noise documents: {noise}")
    for c in tm.topic_ids:
        words = ", ".join(w for w, _ in tm.top_words[c][:5])
        print(f"topic {c}\tsize {tm.sizes[c]}\t{words}")
    return EXIT_OK


def _model_topic_lists(tm: topics.TopicModel, top_n: int) -> list[list[str]]:
    lists = [
        [w for w, _ in topics.ranked_terms(tm.class_tfidf, c, top_n)]
        for c in tm.topic_ids
    ]
    if not lists:
        raise CliError("model has no topics to evaluate")
    k = min(len(l) for l in lists)
    if k < 2:
        raise CliError("topics too small to evaluate (need >= 2 words each)")
    return [l[: min(top_n, k)] for l in lists]


def cmd_evaluate(args) -> int:
    if not args.model and not args.topics_file:
        raise CliError("need --model or at least one --topics-file")
    if not args.corpus:
        raise CliError("coherence metrics need --corpus")
    corpus = load_corpus(args.corpus)
    normalizer = default_normalizer()
    token_lists = preprocess_corpus(corpus, normalizer, (1, args.ngram_max))
    stats = metrics.window_stats(token_lists, args.window)

    rows = []
    if args.model:
        tm = topics.load_model(args.model)
        rows.append((Path(args.model).name, _model_topic_lists(tm, args.top_n)))
    for path in args.topics_file or []:
        lists = metrics.load_topic_file(path)
        rows.append((Path(path).name, [l[: args.top_n] for l in lists]))

    print("source\tn_topics\tTD\tInv. RBO\tNPMI\tCv")
    for name, lists in rows:
        td = metrics.topic_diversity(lists)
        irbo = metrics.inverted_rbo(lists, args.rbo_p)
        npmi = metrics.coherence_npmi(lists, stats)
        cv = metrics.coherence_cv(lists, stats)
        print(f"{name}\t{len(lists)}\t{td:.4f}\t{irbo:.4f}\t{npmi:.4f}\t{cv:.4f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not (args.similarity or args.tree or args.scatter or args.word_scores or args.dynamic):
        raise CliError(
            "choose at least one of --similarity --tree --scatter --word-scores --dynamic"
        )
    tm = topics.load_model(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.similarity:
        analysis.export_similarity_csv(tm, out_dir / "similarity.csv")
        written.append("similarity.csv")
    if args.tree:
        tree = analysis.hierarchical_topic_tree(tm, min(args.top, tm.n_topics))
        analysis.export_tree_csv(tree, out_dir / "tree.csv")
        written.append("tree.csv")
    if args.scatter:
        if not args.embeddings:
            raise CliError("--scatter needs --embeddings")
        emb = read_embeddings(args.embeddings)
        if emb.shape[0] != len(tm.labels):
            print(
                f"error: embedding rows ({emb.shape[0]}) do not match model "
                f"documents ({len(tm.labels)})", file=sys.stderr,
            )
            return EXIT_MISMATCH
        points = analysis.topic_scatter_2d(tm, emb, seed=args.seed)
        analysis.export_scatter_csv(points, out_dir / "scatter.csv")
        written.append("scatter.csv")
    if args.word_scores:
        report = analysis.word_scores_report(tm, args.topics, args.words)
        analysis.export_word_scores_csv(report, out_dir / "word_scores.csv")
        written.append("word_scores.csv")
    if args.dynamic:
        if not args.corpus:
            raise CliError("--dynamic needs --corpus")
        corpus = load_corpus(args.corpus)
        if len(corpus) != len(tm.labels):
            print(
                f"error: corpus size ({len(corpus)}) does not match model "
                f"documents ({len(tm.labels)})", file=sys.stderr,
            )
            return EXIT_MISMATCH
        normalizer = default_normalizer()
        vocab = tm.class_tfidf.vocab
        token_lists = preprocess_corpus(corpus, normalizer, vocab.ngram_range)
        years = [doc.date.year for doc in corpus]
        dtm = topics.fit_dynamic_topics(tm, token_lists, years)
        with open(out_dir / "dynamic.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("topic,slice,rank,word,score\n")
            for c in tm.topic_ids:
                report = analysis.dynamic_report(dtm, c, k=args.words)
                for s in sorted(report):
                    for rank, (word, score) in enumerate(report[s], start=1):
                        fh.write(f"{c},{s},{rank},{word},{score:.6f}\n")
        written.append("dynamic.csv")
    for name in written:
        print(f"wrote {out_dir / name}")
    return EXIT_OK


def cmd_extract_models(args) -> int:
    corpus = load_corpus(args.corpus)
    api_key = os.environ.get(llm_extract.API_KEY_ENV)
    cfg = llm_extract.EndpointConfig(
        url=args.endpoint,
        model=args.model_name,
        api_key=api_key,
        max_requests_per_minute=args.rpm,
        max_concurrency=args.concurrency,
    )
    if args.replay:
        transport = llm_extract.ReplayTransport(args.replay)
    else:
        if not api_key:
            print(
                f"error: --live requires the {llm_extract.API_KEY_ENV} "
                "environment variable", file=sys.stderr,
            )
            return EXIT_CREDENTIALS
        transport = llm_extract.HttpTransport(cfg)
    results = llm_extract.extract_models(corpus, cfg, transport)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("doc_id,status,model\n")
        for r in results:
            fh.write(f"{r.doc_id},{r.status},{r.model_name or ''}\n")
    freqs = llm_extract.aggregate_model_frequencies(results, corpus)
    for year in sorted(freqs):
        path = out.with_name(f"{out.stem}_{year}.csv")
        analysis.wordcloud_export(freqs[year], path)
        print(f"wrote {path}")
    ok = sum(1 for r in results if r.status == "ok")
    print(f"documents: {len(results)}  with model: {ok}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topicforge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, filter, and save a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--keywords")
    p.add_argument("--mode", choices=["any", "all"], default="any")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit a topic model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--min-topic-size", type=int, default=50)
    p.add_argument("--min-cluster-size", type=int, default=50)
    p.add_argument("--n-neighbors", type=int, default=20)
    p.add_argument("--ngram-min", type=int, default=1)
    p.add_argument("--ngram-max", type=int, default=3)
    p.add_argument("--min-term-count", type=int, default=1)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--top-n-words", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score topic quality metrics")
    p.add_argument("--model")
    p.add_argument("--topics-file", action="append")
    p.add_argument("--corpus")
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--rbo-p", type=float, default=metrics.DEFAULT_RBO_P)
    p.add_argument("--window", type=int, default=metrics.DEFAULT_WINDOW)
    p.add_argument("--ngram-max", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="export plot-ready analytics")
    p.add_argument("--model", required=True)
    p.add_argument("--similarity", action="store_true")
    p.add_argument("--tree", action="store_true")
    p.add_argument("--top", type=int, default=50)
    p.add_argument("--scatter", action="store_true")
    p.add_argument("--word-scores", action="store_true")
    p.add_argument("--topics", type=int, default=8)
    p.add_argument("--words", type=int, default=5)
    p.add_argument("--dynamic", action="store_true")
    p.add_argument("--by-year", action="store_true")
    p.add_argument("--corpus")
    p.add_argument("--embeddings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("extract-models", help="extract ML model mentions via LLM")
    p.add_argument("--corpus", required=True)
    p.add_argument("--endpoint", default="https://api.openai.com/v1/chat/completions")
    p.add_argument("--replay", help="replay fixture file (offline mode)")
    p.add_argument("--live", action="store_true")
    p.add_argument("--model-name", default="gpt-3.5-turbo")
    p.add_argument("--rpm", type=float, default=None)
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract_models)

    for sp in sub.choices.values():
        sp.add_argument("--config", help="dotted-key config file; flags override")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # re-parse with config-derived defaults so explicit flags win
        sub_parser = {
            a.dest: a for a in parser._actions
            if isinstance(a, argparse._SubParsersAction)
        }["command"].choices[args.command]
        _apply_config(sub_parser, args.command, args.config)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
