"""Min-max scaling, rolling-window construction, sentiment fusion, and splits.

Everything here is pure: datasets are immutable after construction (their
arrays are marked read-only) and every function returns new objects.
"""

import csv
import datetime as dt
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError
from .ingest import PriceSeries
from .sentiment import DailySentiment


@dataclass(frozen=True)
class Scaler:
    """Affine map of [min_val, max_val] onto [0, 1]."""

    min_val: float
    max_val: float

    def __post_init__(self):
        if not self.max_val > self.min_val:
            raise DataError(
                f"degenerate scaler range [{self.min_val}, {self.max_val}]")


def fit_scaler(values: Sequence[float]) -> Scaler:
    """Scaler over the observed extrema; rejects constant input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise DataError("need at least 2 values to fit a scaler")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        raise DataError(f"all {arr.size} values equal {lo}: degenerate range")
    return Scaler(lo, hi)


def normalize(s: Scaler, x):
    """(x - min) / (max - min); out-of-range input maps outside [0, 1]."""
    return (x - s.min_val) / (s.max_val - s.min_val)


def denormalize(s: Scaler, xn):
    """Exact algebraic inverse of normalize."""
    return xn * (s.max_val - s.min_val) + s.min_val


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    target: float
    target_date: dt.date


class WindowedDataset:
    """Supervised rolling-window samples over one normalized price scale.

    features is (n, feature_count); row k holds the normalized closes of the
    window ending just before target_dates[k] (plus, after attach_sentiment,
    a trailing sentiment value). series_dates keeps the full trading-day
    calendar the windows were cut from, so date arithmetic stays possible
    after splitting.
    """

    def __init__(self, features: np.ndarray, targets: np.ndarray,
                 target_dates: Sequence[dt.date], scaler: Scaler,
                 series_dates: Sequence[dt.date]):
        if features.ndim != 2 or not (len(features) == len(targets) == len(target_dates)):
            raise ValueError("inconsistent dataset arrays")
        self.features = np.ascontiguousarray(features, dtype=np.float64)
        self.targets = np.ascontiguousarray(targets, dtype=np.float64)
        self.features.flags.writeable = False
        self.targets.flags.writeable = False
        self.target_dates: Tuple[dt.date, ...] = tuple(target_dates)
        self.scaler = scaler
        self.series_dates: Tuple[dt.date, ...] = tuple(series_dates)

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def samples(self) -> List[Sample]:
        return [Sample(self.features[k], float(self.targets[k]), self.target_dates[k])
                for k in range(len(self))]

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def to_csv(self, path) -> None:
        """One row per sample: feature columns, target, target_date."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"f{i + 1}" for i in range(self.feature_count)]
                            + ["target", "target_date"])
            for k in range(len(self)):
                writer.writerow([repr(v) for v in self.features[k]]
                                + [repr(float(self.targets[k])),
                                   self.target_dates[k].isoformat()])


@dataclass(frozen=True)
class SplitDataset:
    train: WindowedDataset
    test: WindowedDataset


def make_windows(series: PriceSeries, window: int = 10,
                 scaler: Optional[Scaler] = None) -> WindowedDataset:
    """Cut n - window samples: closes of days k..k+window-1 predict day k+window.

    Features and targets are stored normalized with a single scaler, fitted
    on the whole series when none is supplied (pass a scaler fitted on the
    training range to avoid test leakage; see build_dataset).
    """
    n = len(series)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if n <= window:
        raise DataError(f"series of length {n} too short for window {window}")
    closes = series.closes
    if scaler is None:
        scaler = fit_scaler(closes)
    norm = normalize(scaler, closes)
    count = n - window
    features = np.empty((count, window))
    for k in range(count):
        features[k] = norm[k:k + window]
    targets = norm[window:].copy()
    target_dates = series.dates[window:]
    return WindowedDataset(features, targets, target_dates, scaler, series.dates)


def attach_sentiment(ds: WindowedDataset, daily: Sequence[DailySentiment],
                     lag: int = 0) -> WindowedDataset:
    """Append one sentiment feature per sample; price features stay untouched.

    With lag=0 the value is the sentiment of the sample's target day; lag=1
    uses the last window day instead (no information from the target day
    leaks into the features). Dates missing from `daily` contribute 0.0.
    """
    if ds.feature_count != len(ds.features[0]) or lag < 0:
        raise ValueError("invalid dataset or lag")
    by_date = {d.date: d.value for d in daily}
    date_index = {d: i for i, d in enumerate(ds.series_dates)}
    col = np.empty((len(ds), 1))
    for k, target_date in enumerate(ds.target_dates):
        idx = date_index[target_date] - lag
        lookup = ds.series_dates[idx] if idx >= 0 else None
        col[k, 0] = by_date.get(lookup, 0.0)
    features = np.hstack([ds.features, col])
    return WindowedDataset(features, ds.targets.copy(), ds.target_dates,
                           ds.scaler, ds.series_dates)


def split(ds: WindowedDataset, train_fraction: float = 0.85) -> SplitDataset:
    """Chronological split at floor(train_fraction * n); never shuffles."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(ds)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    cut = math.floor(train_fraction * n)
    if cut == 0 or cut == n:
        raise DataError(
            f"split of {n} samples at fraction {train_fraction} leaves an empty partition")
    return SplitDataset(
        train=WindowedDataset(ds.features[:cut].copy(), ds.targets[:cut].copy(),
                              ds.target_dates[:cut], ds.scaler, ds.series_dates),
        test=WindowedDataset(ds.features[cut:].copy(), ds.targets[cut:].copy(),
                             ds.target_dates[cut:], ds.scaler, ds.series_dates),
    )


def build_dataset(series: PriceSeries, window: int = 10,
                  train_fraction: float = 0.85, scaler_fit: str = "train",
                  sentiment: Optional[Sequence[DailySentiment]] = None,
                  sentiment_lag: int = 0) -> SplitDataset:
    """Full pipeline: fit scaler, cut windows, fuse sentiment, split.

    scaler_fit="train" fits the scaler only on closes visible to the training
    partition (its windows and targets); "all" fits on the whole series.
    """
    if scaler_fit not in ("train", "all"):
        raise ValueError(f"scaler_fit must be 'train' or 'all', got {scaler_fit!r}")
    n = len(series)
    if n <= window:
        raise DataError(f"series of length {n} too short for window {window}")
    if scaler_fit == "train":
        n_train = math.floor(train_fraction * (n - window))
        # the last training sample's target is close index window + n_train - 1,
        # so the training partition sees exactly the first window + n_train closes
        scaler = fit_scaler(series.closes[:window + n_train])
    else:
        scaler = fit_scaler(series.closes)
    ds = make_windows(series, window=window, scaler=scaler)
    if sentiment is not None:
        ds = attach_sentiment(ds, sentiment, lag=sentiment_lag)
    return split(ds, train_fraction)
