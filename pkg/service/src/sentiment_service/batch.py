"""Offline batch mode: news NDJSON in, daily sentiment CSV out.

Applies the same conventions as the fincast pipeline so the two
implementations are interchangeable byte-for-byte: records sharing a date
merge in file order and cap at 10 headlines (earliest first), the daily
value is the signed mean of per-headline scores summed left to right
(positive +score, negative -score, neutral 0; no headlines -> 0.0), and the
CSV is ``date,value`` with repr-formatted floats. The output is written via
a temp file and atomic rename; the backend identifier goes to a
``<out>.meta.json`` sidecar, keeping the CSV itself convention-clean.
"""

import datetime as dt
import json
import os
from pathlib import Path
from typing import Dict, List, Tuple

DEFAULT_CAP = 10


class BatchInputError(ValueError):
    """Unreadable or malformed news input."""


def read_news(path, cap: int = DEFAULT_CAP) -> List[Tuple[dt.date, List[str]]]:
    path = Path(path)
    if not path.exists():
        raise BatchInputError(f"news file not found: {path}")
    merged: Dict[dt.date, List[str]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                date = dt.date.fromisoformat(str(record["date"]))
                headlines = record["headlines"]
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise BatchInputError(f"{path} line {lineno}: {exc}") from None
            if not isinstance(headlines, list) or any(
                    not isinstance(h, str) or not h for h in headlines):
                raise BatchInputError(
                    f"{path} line {lineno}: headlines must be non-empty strings")
            merged.setdefault(date, []).extend(headlines)
    return [(date, merged[date][:cap]) for date in sorted(merged)]


def signed_mean(results: List[Tuple[str, float]]) -> float:
    if not results:
        return 0.0
    total = 0.0
    for label, score in results:
        if label == "positive":
            total += score
        elif label == "negative":
            total -= score
    return total / len(results)


def batch_score(in_path, out_path, backend, cap: int = DEFAULT_CAP) -> int:
    """Score every day in the news file and write the daily CSV atomically.

    Returns the number of day rows written.
    """
    days = read_news(in_path, cap=cap)
    rows = []
    for date, headlines in days:
        results = backend.score(headlines) if headlines else []
        rows.append((date, signed_mean(results)))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_name(out_path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write("date,value\n")
        for date, value in rows:
            fh.write(f"{date.isoformat()},{value!r}\n")
    os.replace(tmp, out_path)
    meta = {"model": backend.model_id, "source": str(in_path), "days": len(rows)}
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return len(rows)
