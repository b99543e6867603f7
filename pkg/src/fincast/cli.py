"""Command-line pipeline: ingest -> sentiment -> train-eval.

Configuration precedence is flags over config file over defaults; the
effective configuration, input content hashes, and version always land in
``<out>/manifest.json`` so runs are attributable and reproducible.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 training divergence.
"""

import argparse
import dataclasses
import datetime as dt
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .errors import ConfigError, DataError, DivergenceError
from .evaluate import combine_reports, emit_report, run_trials
from .ingest import (
    ALIGN_POLICIES,
    DEFAULT_HEADLINE_CAP,
    align,
    fetch_prices,
    load_news,
    load_prices,
    write_news,
    write_prices,
)
from .models import MODEL_KINDS, ModelSpec, TrainConfig
from .preprocess import build_dataset
from .sentiment import (
    DailySentiment,
    HeadlineFileProvider,
    LexiconProvider,
    RemoteProvider,
    aggregate_day,
    load_sentiment_csv,
    score_headlines,
    write_sentiment_csv,
)

SENTIMENT_URL_ENV = "FINCAST_SENTIMENT_URL"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this toolkit reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {p} must hold a JSON object")
    return cfg


def _effective(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults; unknown config keys are rejected."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(file_cfg)
    for key in defaults:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            merged[key] = cli_val
    return merged


def _write_manifest(out_dir: Path, command: str, config: dict,
                    inputs: Dict[str, str]) -> None:
    manifest = {
        "tool": "fincast",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {name: {"path": str(path), "sha256": _sha256(path)}
                   for name, path in inputs.items()},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _out_dir(config: dict) -> Path:
    out = config.get("out")
    if not out:
        raise ConfigError("an output directory is required (--out)")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- ingest -------------------------------------------------------------------

INGEST_DEFAULTS = {
    "prices": None, "news": None, "policy": "carry_forward",
    "cap": DEFAULT_HEADLINE_CAP, "fetch_symbol": None, "start": None,
    "end": None, "cache_dir": None, "out": None, "seed": 0,
}


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _effective(args, INGEST_DEFAULTS)
    out_dir = _out_dir(config)
    inputs: Dict[str, str] = {}

    if config["fetch_symbol"]:
        if not (config["start"] and config["end"]):
            raise ConfigError("--fetch-symbol needs --start and --end")
        cache_dir = config["cache_dir"] or os.environ.get(
            "FINCAST_CACHE_DIR", str(out_dir / "cache"))
        series = fetch_prices(config["fetch_symbol"],
                              dt.date.fromisoformat(config["start"]),
                              dt.date.fromisoformat(config["end"]),
                              cache_dir)
    elif config["prices"]:
        series = load_prices(config["prices"])
        inputs["prices"] = config["prices"]
    else:
        raise ConfigError("either --prices or --fetch-symbol is required")

    prices_out = out_dir / "prices.csv"
    write_prices(series, prices_out)

    summary = {
        "trading_days": len(series),
        "first_date": series.dates[0].isoformat(),
        "last_date": series.dates[-1].isoformat(),
    }
    if config["news"]:
        news = load_news(config["news"], cap=config["cap"])
        inputs["news"] = config["news"]
        aligned = align(series, news, policy=config["policy"], cap=config["cap"])
        write_news(aligned.news_days(), out_dir / "aligned_news.ndjson")
        summary["headlines"] = aligned.total_headlines()
        summary["news_days"] = sum(1 for h in aligned.news.values() if h)
    (out_dir / "ingest_summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n")
    _write_manifest(out_dir, "ingest", config, inputs)
    print(f"ingest: {summary['trading_days']} trading days "
          f"({summary['first_date']}..{summary['last_date']})"
          + (f", {summary['headlines']} headlines" if "headlines" in summary else ""))
    return EXIT_OK


# --- sentiment ------------------------------------------------------------------

SENTIMENT_DEFAULTS = {
    "news": None, "backend": "stub", "backend_file": None,
    "remote_url": None, "cap": DEFAULT_HEADLINE_CAP, "out": None, "seed": 0,
}


def cmd_sentiment(args: argparse.Namespace) -> int:
    config = _effective(args, SENTIMENT_DEFAULTS)
    out_dir = _out_dir(config)
    if not config["news"]:
        raise ConfigError("--news (aligned NDJSON from `ingest`) is required")
    news = load_news(config["news"], cap=config["cap"])
    inputs = {"news": config["news"]}

    backend = config["backend"]
    rows: List[DailySentiment] = []
    if backend == "daily_file":
        if not config["backend_file"]:
            raise ConfigError("backend daily_file needs --backend-file")
        by_date = {d.date: d.value for d in load_sentiment_csv(config["backend_file"])}
        inputs["backend_file"] = config["backend_file"]
        rows = [DailySentiment(day.date, by_date.get(day.date, 0.0)) for day in news]
    else:
        if backend == "stub":
            provider = LexiconProvider()
        elif backend == "headline_file":
            if not config["backend_file"]:
                raise ConfigError("backend headline_file needs --backend-file")
            provider = HeadlineFileProvider(config["backend_file"])
            inputs["backend_file"] = config["backend_file"]
        elif backend == "remote":
            url = config["remote_url"] or os.environ.get(SENTIMENT_URL_ENV)
            if not url:
                raise ConfigError(
                    f"backend remote needs --remote-url or ${SENTIMENT_URL_ENV}")
            provider = RemoteProvider(url)
        else:
            raise ConfigError(f"unknown sentiment backend {backend!r}")
        try:
            for day in news:
                scored = score_headlines(provider, day.headlines) if day.headlines else []
                rows.append(aggregate_day(day.date, scored))
        except DataError as exc:
            if backend == "remote":
                raise DataError(f"{exc} (check the service and retry)") from None
            raise

    write_sentiment_csv(rows, out_dir / "sentiment.csv")
    _write_manifest(out_dir, "sentiment", config, inputs)
    print(f"sentiment: {len(rows)} days -> {out_dir / 'sentiment.csv'}")
    return EXIT_OK


# --- train-eval -----------------------------------------------------------------

TRAIN_EVAL_DEFAULTS = {
    "prices": None, "sentiment": None, "models": "mlp,lstm,finbert_lstm",
    "trials": 1, "epochs": 100, "batch_size": 32, "window": 10,
    "train_fraction": 0.85, "scaler_fit": "train", "sentiment_lag": 0,
    "workers": 1, "out": None, "seed": 0,
}


def cmd_train_eval(args: argparse.Namespace) -> int:
    config = _effective(args, TRAIN_EVAL_DEFAULTS)
    out_dir = _out_dir(config)
    if not config["prices"]:
        raise ConfigError("--prices is required")
    kinds = [k.strip() for k in str(config["models"]).split(",") if k.strip()]
    for kind in kinds:
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if not kinds:
        raise ConfigError("--models must name at least one model kind")
    needs_sentiment = "finbert_lstm" in kinds
    if needs_sentiment and not config["sentiment"]:
        raise ConfigError("finbert_lstm needs --sentiment (daily `date,value` CSV)")

    series = load_prices(config["prices"])
    inputs = {"prices": config["prices"]}
    sentiment = None
    if config["sentiment"]:
        sentiment = load_sentiment_csv(config["sentiment"])
        inputs["sentiment"] = config["sentiment"]

    cfg = TrainConfig(epochs=config["epochs"], batch_size=config["batch_size"],
                      seed=config["seed"])
    specs = [ModelSpec.for_kind(k) for k in kinds]
    reports = []
    plain_specs = [s for s in specs if s.input_features == config["window"]]
    fused_specs = [s for s in specs if s.input_features == config["window"] + 1]
    if len(plain_specs) + len(fused_specs) != len(specs):
        raise ConfigError(
            f"window {config['window']} is incompatible with models {kinds}")
    if plain_specs:
        data = build_dataset(series, window=config["window"],
                             train_fraction=config["train_fraction"],
                             scaler_fit=config["scaler_fit"])
        reports.append(run_trials(plain_specs, data, cfg, config["trials"],
                                  workers=config["workers"]))
    if fused_specs:
        data = build_dataset(series, window=config["window"],
                             train_fraction=config["train_fraction"],
                             scaler_fit=config["scaler_fit"],
                             sentiment=sentiment,
                             sentiment_lag=config["sentiment_lag"])
        reports.append(run_trials(fused_specs, data, cfg, config["trials"],
                                  workers=config["workers"]))
    report = combine_reports(reports, kinds)

    emit_report(report, out_dir)
    for kind in kinds:
        if kind in report.checkpoints:
            (out_dir / f"checkpoint_{kind}.json").write_text(
                json.dumps(report.checkpoints[kind], indent=1) + "\n")
            sidecar = {
                "spec": dataclasses.asdict(ModelSpec.for_kind(kind)),
                "config": dataclasses.asdict(cfg),
                "trials": config["trials"],
                "inputs": {name: _sha256(path) for name, path in inputs.items()},
            }
            (out_dir / f"model_{kind}.json").write_text(
                json.dumps(sidecar, indent=1, sort_keys=True) + "\n")
    _write_manifest(out_dir, "train-eval", config, inputs)

    print(f"{'model':<14}{'trials':>7}{'MAE':>14}{'MAPE':>12}{'Accuracy':>12}")
    failed = False
    for name, res in report.models.items():
        if res.trials == 0:
            failed = True
            print(f"{name:<14}{res.trials:>7}{'diverged':>14}{'-':>12}{'-':>12}")
        else:
            print(f"{name:<14}{res.trials:>7}{res.mae_mean:>14.4f}"
                  f"{res.mape_mean:>12.6f}{res.accuracy_mean:>12.6f}")
    return EXIT_DIVERGENCE if failed else EXIT_OK


# --- entry point ----------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--seed", type=int, help="base random seed (default 0)")
    parser.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fincast",
                     description="Price forecasting with news sentiment fusion")
    parser.add_argument("--version", action="version", version=f"fincast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate and align prices and news")
    p_ingest.add_argument("--prices", help="CSV with header date,close")
    p_ingest.add_argument("--news", help="NDJSON with date and headlines fields")
    p_ingest.add_argument("--policy", choices=ALIGN_POLICIES,
                          help="non-trading-day news handling (default carry_forward)")
    p_ingest.add_argument("--cap", type=int, help="max headlines per day (default 10)")
    p_ingest.add_argument("--fetch-symbol", dest="fetch_symbol",
                          help="fetch prices for this symbol instead of --prices")
    p_ingest.add_argument("--start", help="fetch range start (YYYY-MM-DD)")
    p_ingest.add_argument("--end", help="fetch range end (YYYY-MM-DD)")
    p_ingest.add_argument("--cache-dir", dest="cache_dir",
                          help="fetch cache directory (default <out>/cache)")
    _add_common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_sent = sub.add_parser("sentiment", help="score news into a daily sentiment CSV")
    p_sent.add_argument("--news", help="aligned NDJSON produced by `ingest`")
    p_sent.add_argument("--backend",
                        choices=["stub", "remote", "headline_file", "daily_file"],
                        help="scoring backend (default stub)")
    p_sent.add_argument("--backend-file", dest="backend_file",
                        help="lookup file for headline_file/daily_file backends")
    p_sent.add_argument("--remote-url", dest="remote_url",
                        help=f"scoring service base URL (or ${SENTIMENT_URL_ENV})")
    p_sent.add_argument("--cap", type=int, help="max headlines per day (default 10)")
    _add_common(p_sent)
    p_sent.set_defaults(func=cmd_sentiment)

    p_te = sub.add_parser("train-eval", help="train the requested models and compare them")
    p_te.add_argument("--prices", help="CSV with header date,close")
    p_te.add_argument("--sentiment", help="daily sentiment CSV (date,value)")
    p_te.add_argument("--models", help="comma list from mlp,lstm,finbert_lstm")
    p_te.add_argument("--trials", type=int, help="trials per model (default 1)")
    p_te.add_argument("--epochs", type=int, help="training epochs (default 100)")
    p_te.add_argument("--batch-size", dest="batch_size", type=int,
                      help="mini-batch size (default 32)")
    p_te.add_argument("--window", type=int, help="rolling window length (default 10)")
    p_te.add_argument("--train-fraction", dest="train_fraction", type=float,
                      help="chronological train share (default 0.85)")
    p_te.add_argument("--scaler-fit", dest="scaler_fit", choices=["train", "all"],
                      help="fit the price scaler on the train range or the whole series")
    p_te.add_argument("--sentiment-lag", dest="sentiment_lag", type=int, choices=[0, 1],
                      help="0: sentiment of the target day; 1: of the last window day")
    p_te.add_argument("--workers", type=int, help="parallel trial processes (default 1)")
    _add_common(p_te)
    p_te.set_defaults(func=cmd_train_eval)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fincast: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"fincast: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"fincast: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
