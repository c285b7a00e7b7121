"""Command-line entry point: corpus in, EMB1 file out."""

from __future__ import annotations

import argparse
import sys

from .exporter import DEFAULT_BATCH_SIZE, DEFAULT_MODEL, ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-exporter")
    parser.add_argument("--corpus", required=True, help="corpus JSONL or CSV")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="sentence-transformers model identifier")
    parser.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    parser.add_argument("--out", required=True, help="EMB1 output path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(args.corpus, args.out, args.model, args.batch_size)
        m = export(job)
    except (ExportError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}: n={m.shape[0]} d={m.shape[1]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
