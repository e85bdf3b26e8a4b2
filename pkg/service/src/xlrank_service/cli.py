"""Service entry point: xlrank-service --port N --mode stub|model [...]"""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app
from .config import ServiceConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlrank-service",
        description="Scorer/translator service for the xlrank wire protocol.",
    )
    parser.add_argument("--port", type=int, default=8600)
    parser.add_argument("--mode", choices=["stub", "model"], default="stub")
    parser.add_argument("--mapping-file", dest="mapping_file",
                        help="JSON text->translation table for the stub translator")
    parser.add_argument("--score-model", dest="score_model",
                        help="pretrained seq2seq identifier (model mode)")
    parser.add_argument("--translation-model", dest="translation_model",
                        help="pretrained NMT identifier (model mode, optional)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ServiceConfig(
            port=args.port,
            mode=args.mode,
            score_model=args.score_model,
            translation_model=args.translation_model,
            mapping_file=args.mapping_file,
        )
        app = create_app(config)  # model mode loads (or refuses) here
    except Exception as exc:
        print(f"xlrank-service: failed to start: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
