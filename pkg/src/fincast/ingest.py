"""Load, validate, and align daily closing prices and news headlines.

On-disk formats are deliberately plain so fixtures stay diffable:
prices are CSV with header ``date,close`` (ISO dates, decimal closes),
news is NDJSON with one ``{"date": ..., "headlines": [...]}`` per line.
"""

import bisect
import csv
import datetime as dt
import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

DEFAULT_HEADLINE_CAP = 10

ALIGN_POLICIES = ("carry_forward", "drop")


@dataclass(frozen=True)
class PriceBar:
    date: dt.date
    close: float

    def __post_init__(self):
        object.__setattr__(self, "close", float(self.close))
        if not (np.isfinite(self.close) and self.close > 0):
            raise DataError(f"close must be a positive finite number, got {self.close!r}")
        if not isinstance(self.date, dt.date) or isinstance(self.date, dt.datetime):
            raise DataError(f"date must be a calendar date, got {self.date!r}")


class PriceSeries:
    """Ordered daily closes; dates strictly increasing, no duplicates."""

    def __init__(self, bars: Sequence[PriceBar]):
        bars = tuple(bars)
        for prev, cur in zip(bars, bars[1:]):
            if cur.date == prev.date:
                raise DataError(f"duplicate date {cur.date.isoformat()}")
            if cur.date < prev.date:
                raise DataError(
                    f"dates not ascending: {cur.date.isoformat()} after {prev.date.isoformat()}")
        self.bars = bars

    @property
    def dates(self) -> Tuple[dt.date, ...]:
        return tuple(b.date for b in self.bars)

    @property
    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.bars)

    def __iter__(self):
        return iter(self.bars)

    def __getitem__(self, idx):
        return self.bars[idx]

    def __eq__(self, other) -> bool:
        return isinstance(other, PriceSeries) and self.bars == other.bars

    def __repr__(self) -> str:
        if not self.bars:
            return "PriceSeries(empty)"
        return (f"PriceSeries({len(self.bars)} bars, "
                f"{self.bars[0].date.isoformat()}..{self.bars[-1].date.isoformat()})")


def _parse_date(raw: str, context: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except (ValueError, AttributeError) as exc:
        raise DataError(f"{context}: invalid date {raw!r}") from exc


def load_prices(path) -> PriceSeries:
    """Parse and validate a ``date,close`` CSV, sorted ascending by date."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"price file not found: {path}")
    rows: List[Tuple[dt.date, float, int]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header] != ["date", "close"]:
            raise DataError(f"{path} line 1: expected header 'date,close', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path} line {lineno}: expected 2 fields, got {len(row)}")
            date = _parse_date(row[0], f"{path} line {lineno}")
            try:
                close = float(row[1])
            except ValueError:
                raise DataError(f"{path} line {lineno}: invalid close {row[1]!r}") from None
            if not (np.isfinite(close) and close > 0):
                raise DataError(f"{path} line {lineno}: non-positive close {close}")
            rows.append((date, close, lineno))
    if not rows:
        raise DataError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    for (d1, _, l1), (d2, _, l2) in zip(rows, rows[1:]):
        if d1 == d2:
            raise DataError(
                f"{path}: duplicate date {d1.isoformat()} (lines {l1} and {l2})")
    return PriceSeries([PriceBar(d, c) for d, c, _ in rows])


def write_prices(series: PriceSeries, path) -> None:
    """Canonical CSV form; load_prices round-trips it exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "close"])
        for bar in series:
            writer.writerow([bar.date.isoformat(), repr(bar.close)])


@dataclass(frozen=True)
class NewsDay:
    date: dt.date
    headlines: Tuple[str, ...]


def load_news(path, cap: int = DEFAULT_HEADLINE_CAP) -> List[NewsDay]:
    """Parse NDJSON news records into one NewsDay per distinct date.

    Records sharing a date are merged in file order; merged lists longer than
    `cap` are truncated keeping the earliest entries (logged, not an error).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"news file not found: {path}")
    merged: Dict[dt.date, List[str]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path} line {lineno}: unparseable record: {exc}") from None
            if not isinstance(record, dict) or "date" not in record or "headlines" not in record:
                raise DataError(
                    f"{path} line {lineno}: record needs 'date' and 'headlines' fields")
            date = _parse_date(str(record["date"]), f"{path} line {lineno}")
            headlines = record["headlines"]
            if not isinstance(headlines, list) or any(
                    not isinstance(h, str) or not h for h in headlines):
                raise DataError(
                    f"{path} line {lineno}: headlines must be non-empty strings")
            merged.setdefault(date, []).extend(headlines)
    days: List[NewsDay] = []
    for date in sorted(merged):
        headlines = merged[date]
        if len(headlines) > cap:
            logger.warning("%s: %s has %d headlines, keeping first %d",
                           path, date.isoformat(), len(headlines), cap)
            headlines = headlines[:cap]
        days.append(NewsDay(date, tuple(headlines)))
    return days


def write_news(days: Sequence[NewsDay], path) -> None:
    with open(path, "w") as fh:
        for day in days:
            fh.write(json.dumps({"date": day.date.isoformat(),
                                 "headlines": list(day.headlines)}) + "\n")


@dataclass(frozen=True)
class AlignedSeries:
    """Prices joined with per-trading-day headline lists (possibly empty)."""

    bars: PriceSeries
    news: Dict[dt.date, Tuple[str, ...]]

    def news_days(self) -> List[NewsDay]:
        return [NewsDay(d, self.news[d]) for d in self.bars.dates]

    def total_headlines(self) -> int:
        return sum(len(h) for h in self.news.values())


def align(prices: PriceSeries, news: Sequence[NewsDay],
          policy: str = "carry_forward",
          cap: int = DEFAULT_HEADLINE_CAP) -> AlignedSeries:
    """Attach headlines to trading days.

    carry_forward moves headlines dated on non-trading days to the next
    trading day (merged chronologically, cap applies); drop discards them.
    News dated after the final trading day has no home under either policy
    and is dropped with a warning.
    """
    if policy not in ALIGN_POLICIES:
        raise ConfigError(f"unknown align policy {policy!r}")
    trading_dates = list(prices.dates)
    trading_set = set(trading_dates)
    buckets: Dict[dt.date, List[str]] = {d: [] for d in trading_dates}
    for day in sorted(news, key=lambda nd: nd.date):
        if day.date in trading_set:
            buckets[day.date].extend(day.headlines)
            continue
        if policy == "drop":
            continue
        pos = bisect.bisect_left(trading_dates, day.date)
        if pos == len(trading_dates):
            logger.warning("news on %s falls after the last trading day; dropped",
                           day.date.isoformat())
            continue
        buckets[trading_dates[pos]].extend(day.headlines)
    aligned: Dict[dt.date, Tuple[str, ...]] = {}
    for date, headlines in buckets.items():
        if len(headlines) > cap:
            logger.warning("%s: %d headlines after alignment, keeping first %d",
                           date.isoformat(), len(headlines), cap)
            headlines = headlines[:cap]
        aligned[date] = tuple(headlines)
    return AlignedSeries(prices, aligned)


class UnknownSymbolError(DataError):
    """The remote price source does not know the requested symbol."""


# price fetches share one on-disk cache; serialize access to it
_cache_lock = threading.Lock()

PRICE_URL_ENV = "FINCAST_PRICE_URL"
PRICE_API_KEY_ENV = "FINCAST_PRICE_API_KEY"
DEFAULT_PRICE_URL = ("https://stooq.com/q/d/l/"
                     "?s={symbol}&d1={start:%Y%m%d}&d2={end:%Y%m%d}&i=d")

Transport = Callable[[str, dt.date, dt.date], str]


def _http_transport(symbol: str, start: dt.date, end: dt.date) -> str:
    """Default transport: GET a CSV from the URL template in the environment."""
    import requests

    url = os.environ.get(PRICE_URL_ENV, DEFAULT_PRICE_URL).format(
        symbol=symbol, start=start, end=end)
    headers = {}
    api_key = os.environ.get(PRICE_API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        resp = requests.get(url, headers=headers, timeout=30)
    except requests.RequestException as exc:
        raise DataError(f"network failure fetching {symbol}: {exc}") from exc
    if resp.status_code == 404:
        raise UnknownSymbolError(f"unknown symbol {symbol!r}")
    if resp.status_code != 200:
        raise DataError(f"price fetch for {symbol} failed with HTTP {resp.status_code}")
    return resp.text


def fetch_prices(symbol: str, start: dt.date, end: dt.date,
                 cache_dir, transport: Optional[Transport] = None) -> PriceSeries:
    """Fetch a close series, caching the validated CSV so repeats are offline.

    The transport returns raw ``date,close`` CSV text; pass a recorded one in
    tests. Cached responses are keyed by (symbol, start, end).
    """
    if start >= end:
        raise ConfigError(f"empty range: start {start} must precede end {end}")
    if not symbol or not symbol.strip():
        raise ConfigError("symbol must be non-empty")
    cache_dir = Path(cache_dir)
    cache_file = cache_dir / f"{symbol.lower()}_{start.isoformat()}_{end.isoformat()}.csv"
    with _cache_lock:
        if cache_file.exists():
            return load_prices(cache_file)
        text = (transport or _http_transport)(symbol, start, end)
        cache_dir.mkdir(parents=True, exist_ok=True)
        tmp = cache_file.with_suffix(".tmp")
        tmp.write_text(text)
        series = load_prices(tmp)  # validate before the cache entry exists
        tmp.rename(cache_file)
    return series
