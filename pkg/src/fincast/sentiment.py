"""Per-headline sentiment classification reduced to one signed daily scalar.

Three interchangeable scoring backends: a deterministic keyword lexicon (no
model, no network; the whole test suite runs on it), a precomputed
per-headline lookup file, and an HTTP client for a remote scoring service.

Daily aggregation is the signed mean: positive scores count +score, negative
-score, neutral 0, averaged in list order. The keyword table, the reduction,
and the ``date,value`` CSV form are a convention shared with the standalone
scoring service, which reimplements them and is cross-tested byte-for-byte.
"""

import csv
import datetime as dt
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import DataError

LABELS = ("positive", "negative", "neutral")

MAX_REMOTE_BATCH = 64


@dataclass(frozen=True)
class HeadlineSentiment:
    label: str
    score: float

    def __post_init__(self):
        if self.label not in LABELS:
            raise DataError(f"label must be one of {LABELS}, got {self.label!r}")
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class DailySentiment:
    date: dt.date
    value: float

    def __post_init__(self):
        if not -1.0 <= self.value <= 1.0:
            raise DataError(f"daily sentiment must be in [-1, 1], got {self.value}")


def signed_score(hs: HeadlineSentiment) -> float:
    """positive -> +score, negative -> -score, neutral -> 0."""
    if hs.label == "positive":
        return hs.score
    if hs.label == "negative":
        return -hs.score
    return 0.0


def aggregate_day(date: dt.date, items: Sequence[HeadlineSentiment]) -> DailySentiment:
    """Signed mean over the day's classifications; no headlines scores 0.0.

    Summation runs left to right in list order so independent implementations
    of this convention produce bit-identical values.
    """
    if not items:
        return DailySentiment(date, 0.0)
    total = 0.0
    for hs in items:
        total += signed_score(hs)
    return DailySentiment(date, total / len(items))


# --- keyword lexicon backend -------------------------------------------------
# Shared stub convention (same table and arithmetic as the scoring service's
# stub mode): tokens are lowercase [a-z0-9]+ runs; with p positive hits and
# n negative hits, the label follows sign(p - n) and the score is 0.5 for
# neutral, else min(1, 0.5 + 0.125*|p - n|).

POSITIVE_WORDS = frozenset("""
acquisition acquisitions beat beats boom bullish expansion gain gained gains
growth hire hires hiring jump jumped jumps profit profits raise raised raises
rally rebound record soar soared soars strong surge surged surges upgrade
upgraded
""".split())

NEGATIVE_WORDS = frozenset("""
bankruptcy bankruptcies bearish crash crashed crashes cut cuts decline
declined declines default defaults downgrade downgraded drop dropped drops
fraud investigation lawsuit lawsuits layoff layoffs loss losses miss missed
misses plunge plunged plunges probe recession selloff slump slumped slumps
tumble tumbled tumbles weak
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9]+")

STUB_MODEL_ID = "keyword-lexicon/1"


def lexicon_score(headline: str) -> HeadlineSentiment:
    tokens = _TOKEN_RE.findall(headline.lower())
    hits = sum(t in POSITIVE_WORDS for t in tokens) - sum(t in NEGATIVE_WORDS for t in tokens)
    if hits == 0:
        return HeadlineSentiment("neutral", 0.5)
    label = "positive" if hits > 0 else "negative"
    return HeadlineSentiment(label, min(1.0, 0.5 + 0.125 * abs(hits)))


class LexiconProvider:
    """Deterministic keyword-rule scoring; needs no model and no network."""

    backend = "lexicon_stub"
    model_id = STUB_MODEL_ID

    def score(self, headlines: Sequence[str]) -> List[HeadlineSentiment]:
        return [lexicon_score(h) for h in headlines]


class HeadlineFileProvider:
    """Precomputed per-headline results from an NDJSON lookup file.

    Each line is ``{"headline": ..., "label": ..., "score": ...}``; scoring a
    headline absent from the file is an error.
    """

    backend = "precomputed_file"

    def __init__(self, path):
        self.path = Path(path)
        self.model_id = f"precomputed:{self.path.name}"
        self._table: Dict[str, HeadlineSentiment] = {}
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    self._table[rec["headline"]] = HeadlineSentiment(
                        rec["label"], float(rec["score"]))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DataError(
                        f"{self.path} line {lineno}: bad precomputed record: {exc}") from None

    def score(self, headlines: Sequence[str]) -> List[HeadlineSentiment]:
        out = []
        for h in headlines:
            try:
                out.append(self._table[h])
            except KeyError:
                raise DataError(f"headline not found in {self.path}: {h!r}") from None
        return out


# transport(url, payload) -> (http status, parsed JSON body)
RemoteTransport = Callable[[str, dict], Tuple[int, dict]]


def _requests_transport(url: str, payload: dict) -> Tuple[int, dict]:
    import requests

    try:
        resp = requests.post(url, json=payload, timeout=60)
    except requests.RequestException as exc:
        raise DataError(f"sentiment service unreachable at {url}: {exc}") from exc
    try:
        body = resp.json()
    except ValueError:
        body = {}
    return resp.status_code, body


class RemoteProvider:
    """Client for the scoring service's ``POST /v1/score`` endpoint.

    Sends ``{"headlines": [...]}`` in chunks of at most 64 and reassembles
    the order-matching ``results`` lists. In-flight requests are bounded.
    """

    backend = "remote_service"

    def __init__(self, base_url: str, transport: Optional[RemoteTransport] = None,
                 max_inflight: int = 4):
        self.url = base_url.rstrip("/") + "/v1/score"
        self.transport = transport or _requests_transport
        self.max_inflight = max(1, max_inflight)
        self.model_id = f"remote:{base_url}"

    def _score_chunk(self, chunk: List[str]) -> List[HeadlineSentiment]:
        status, body = self.transport(self.url, {"headlines": chunk})
        if status != 200:
            raise DataError(f"sentiment service returned HTTP {status}: {body}")
        try:
            results = [HeadlineSentiment(r["label"], float(r["score"]))
                       for r in body["results"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed sentiment response: {exc}") from None
        if len(results) != len(chunk):
            raise DataError(
                f"sentiment service returned {len(results)} results for {len(chunk)} headlines")
        return results

    def score(self, headlines: Sequence[str]) -> List[HeadlineSentiment]:
        chunks = [list(headlines[i:i + MAX_REMOTE_BATCH])
                  for i in range(0, len(headlines), MAX_REMOTE_BATCH)]
        if len(chunks) <= 1:
            return self._score_chunk(chunks[0]) if chunks else []
        with ThreadPoolExecutor(max_workers=self.max_inflight) as pool:
            parts = list(pool.map(self._score_chunk, chunks))
        return [hs for part in parts for hs in part]


def score_headlines(provider, headlines: Sequence[str]) -> List[HeadlineSentiment]:
    """Score every headline with the given backend, order-preserving."""
    for h in headlines:
        if not isinstance(h, str) or not h:
            raise DataError(f"headlines must be non-empty strings, got {h!r}")
    results = provider.score(list(headlines))
    if len(results) != len(headlines):
        raise DataError(f"backend returned {len(results)} results for {len(headlines)} headlines")
    return results


# --- daily sentiment CSV (canonical `date,value` form) ------------------------

def load_sentiment_csv(path) -> List[DailySentiment]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"sentiment file not found: {path}")
    out: List[DailySentiment] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header] != ["date", "value"]:
            raise DataError(f"{path} line 1: expected header 'date,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path} line {lineno}: expected 2 fields")
            try:
                date = dt.date.fromisoformat(row[0].strip())
                value = float(row[1])
            except ValueError as exc:
                raise DataError(f"{path} line {lineno}: {exc}") from None
            try:
                out.append(DailySentiment(date, value))
            except DataError as exc:
                raise DataError(f"{path} line {lineno}: {exc}") from None
    return out


def write_sentiment_csv(rows: Sequence[DailySentiment], path) -> None:
    """Canonical form: header ``date,value``, repr floats, newline endings."""
    with open(path, "w", newline="") as fh:
        fh.write("date,value\n")
        for row in rows:
            fh.write(f"{row.date.isoformat()},{row.value!r}\n")
