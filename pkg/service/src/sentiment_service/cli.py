"""Service command line: offline batch scoring and the HTTP server."""

import argparse
import sys
from typing import List, Optional

from .batch import DEFAULT_CAP, BatchInputError, batch_score
from .stub import StubBackend


def _backend(args):
    if args.stub:
        return StubBackend()
    from .model_backend import FinbertBackend

    return FinbertBackend(model_name=args.model)


def cmd_batch(args) -> int:
    backend = _backend(args)
    backend.load()
    days = batch_score(args.infile, args.out, backend, cap=args.cap)
    print(f"batch: {days} days -> {args.out} (model {backend.model_id})")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app

    app = create_app(_backend(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentiment-service",
                                     description="Headline sentiment scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p_batch = sub.add_parser("batch", help="score a news NDJSON into a daily CSV")
    p_batch.add_argument("--in", dest="infile", required=True,
                         help="news NDJSON (date + headlines per line)")
    p_batch.add_argument("--out", required=True, help="daily sentiment CSV path")
    p_batch.add_argument("--stub", action="store_true",
                         help="use the deterministic keyword backend")
    p_batch.add_argument("--model", help="checkpoint name for the real backend")
    p_batch.add_argument("--cap", type=int, default=DEFAULT_CAP,
                         help="max headlines per day (default 10)")
    p_batch.set_defaults(func=cmd_batch)

    p_serve = sub.add_parser("serve", help="run the HTTP scoring endpoint")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8900)
    p_serve.add_argument("--stub", action="store_true",
                         help="serve the deterministic keyword backend")
    p_serve.add_argument("--model", help="checkpoint name for the real backend")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BatchInputError as exc:
        print(f"sentiment-service: data error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"sentiment-service: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
