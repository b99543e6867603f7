"""Forecast metrics, multi-seed trials, and comparison report files.

Metrics are computed on denormalized prices: error magnitudes are only
meaningful at price scale. A trial is one train+evaluate run under one seed;
run_trials aggregates means and standard deviations over seeds (the report
records that the aggregation is the mean).
"""

import csv
import datetime as dt
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError, DivergenceError
from .models import ModelSpec, TrainConfig, build, predict, train
from .preprocess import SplitDataset, denormalize

Trace = List[Tuple[dt.date, float, float]]  # (date, actual, predicted)


def _as_arrays(pred, actual) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.ndim != 1:
        raise DataError(f"prediction/actual length mismatch: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise DataError("empty inputs")
    return p, a


def mae(pred: Sequence[float], actual: Sequence[float]) -> float:
    """Mean absolute distance between predictions and targets."""
    p, a = _as_arrays(pred, actual)
    return float(np.mean(np.abs(p - a)))


def mape(pred: Sequence[float], actual: Sequence[float]) -> float:
    """Mean of |error| as a fraction of the target; targets must be nonzero."""
    p, a = _as_arrays(pred, actual)
    if np.any(a == 0.0):
        raise DataError("mape undefined: actual contains 0")
    return float(np.mean(np.abs((p - a) / a)))


def accuracy(mape_value: float) -> float:
    """1 - MAPE."""
    if mape_value < 0:
        raise DataError(f"mape must be >= 0, got {mape_value}")
    return 1.0 - mape_value


def relative_improvement(candidate: float, baseline: float, kind: str = "error") -> float:
    """Improvement of candidate over baseline, as a fraction of baseline.

    For error metrics lower is better: (baseline - candidate) / baseline.
    For accuracy higher is better: (candidate - baseline) / baseline.
    """
    if baseline == 0:
        raise DataError("relative improvement undefined for zero baseline")
    if kind == "error":
        return (baseline - candidate) / baseline
    if kind == "accuracy":
        return (candidate - baseline) / baseline
    raise ValueError(f"kind must be 'error' or 'accuracy', got {kind!r}")


@dataclass(frozen=True)
class MetricSet:
    mae: float
    mape: float
    accuracy: float

    @classmethod
    def from_predictions(cls, pred, actual) -> "MetricSet":
        m = mape(pred, actual)
        return cls(mae=mae(pred, actual), mape=m, accuracy=accuracy(m))


@dataclass
class ModelResult:
    """Aggregated trial statistics for one model kind."""

    trials: int
    seeds: List[int]
    failures: int
    mae_mean: float
    mae_std: float
    mape_mean: float
    mape_std: float
    accuracy_mean: float


@dataclass
class ComparisonReport:
    models: Dict[str, ModelResult]
    improvements: List[dict]
    traces: Dict[str, Trace]
    checkpoints: Dict[str, dict] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def _run_one_trial(spec: ModelSpec, data: SplitDataset, cfg: TrainConfig,
                   seed: int) -> Tuple[MetricSet, Trace, dict]:
    trial_cfg = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size,
                            seed=seed, early_stop_patience=cfg.early_stop_patience)
    model = train(build(spec, seed), data, trial_cfg)
    predictions = predict(model, data.test)
    actual = denormalize(data.test.scaler, data.test.targets)
    predicted = np.array([p for _, p in predictions])
    metrics = MetricSet.from_predictions(predicted, actual)
    trace = [(date, float(act), float(pred))
             for (date, pred), act in zip(predictions, actual)]
    return metrics, trace, model.network.to_dict()


def run_trials(specs: Sequence[ModelSpec], data: SplitDataset, cfg: TrainConfig,
               n_trials: int, workers: int = 1) -> ComparisonReport:
    """Train each spec under seeds cfg.seed..cfg.seed+n_trials-1 and compare.

    Every trial evaluates on the same fixed test partition. Diverged trials
    are excluded from the statistics and counted. The kept trace per model is
    the first successful trial's predictions.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    seeds = [cfg.seed + i for i in range(n_trials)]
    jobs = [(spec, seed) for spec in specs for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_trial_job, [(s, data, cfg, seed) for s, seed in jobs]))
    else:
        outcomes = [_trial_job((s, data, cfg, seed)) for s, seed in jobs]

    models: Dict[str, ModelResult] = {}
    traces: Dict[str, Trace] = {}
    checkpoints: Dict[str, dict] = {}
    per_spec = len(seeds)
    for i, spec in enumerate(specs):
        spec_outcomes = outcomes[i * per_spec:(i + 1) * per_spec]
        ok = [(m, t, c) for m, t, c in spec_outcomes if m is not None]
        failures = per_spec - len(ok)
        if ok:
            maes = np.array([m.mae for m, _, _ in ok])
            mapes = np.array([m.mape for m, _, _ in ok])
            accs = np.array([m.accuracy for m, _, _ in ok])
            result = ModelResult(
                trials=len(ok), seeds=seeds, failures=failures,
                mae_mean=float(maes.mean()), mae_std=float(maes.std()),
                mape_mean=float(mapes.mean()), mape_std=float(mapes.std()),
                accuracy_mean=float(accs.mean()))
            traces[spec.kind] = ok[0][1]
            checkpoints[spec.kind] = ok[0][2]
        else:
            result = ModelResult(trials=0, seeds=seeds, failures=failures,
                                 mae_mean=float("nan"), mae_std=float("nan"),
                                 mape_mean=float("nan"), mape_std=float("nan"),
                                 accuracy_mean=float("nan"))
        models[spec.kind] = result

    report = ComparisonReport(models=models, improvements=[], traces=traces,
                              checkpoints=checkpoints,
                              metadata={"aggregation": "mean", "n_trials": n_trials,
                                        "base_seed": cfg.seed})
    report.improvements = _pairwise_improvements(models, [s.kind for s in specs])
    return report


def _pairwise_improvements(models: Dict[str, ModelResult],
                           names: Sequence[str]) -> List[dict]:
    """All ordered (candidate, baseline) pairs over mae, mape, and accuracy means."""
    improvements = []
    for cand in names:
        for base in names:
            if cand == base or models[cand].trials == 0 or models[base].trials == 0:
                continue
            improvements.append({
                "candidate": cand, "baseline": base, "metric": "mae",
                "improvement_fraction": relative_improvement(
                    models[cand].mae_mean, models[base].mae_mean, "error")})
            improvements.append({
                "candidate": cand, "baseline": base, "metric": "mape",
                "improvement_fraction": relative_improvement(
                    models[cand].mape_mean, models[base].mape_mean, "error")})
            improvements.append({
                "candidate": cand, "baseline": base, "metric": "accuracy",
                "improvement_fraction": relative_improvement(
                    models[cand].accuracy_mean, models[base].accuracy_mean, "accuracy")})
    return improvements


def combine_reports(reports: Sequence[ComparisonReport],
                    order: Sequence[str]) -> ComparisonReport:
    """Merge reports produced on identical test targets into one comparison.

    Pairwise improvements are recomputed across the union; model order in
    the output follows `order`.
    """
    merged_models: Dict[str, ModelResult] = {}
    merged_traces: Dict[str, Trace] = {}
    merged_ckpts: Dict[str, dict] = {}
    metadata: dict = {}
    for rep in reports:
        merged_models.update(rep.models)
        merged_traces.update(rep.traces)
        merged_ckpts.update(rep.checkpoints)
        metadata.update(rep.metadata)
    models = {name: merged_models[name] for name in order if name in merged_models}
    traces = {name: merged_traces[name] for name in order if name in merged_traces}
    ckpts = {name: merged_ckpts[name] for name in order if name in merged_ckpts}
    return ComparisonReport(models=models,
                            improvements=_pairwise_improvements(models, list(models)),
                            traces=traces, checkpoints=ckpts, metadata=metadata)


def _trial_job(args) -> Tuple[Optional[MetricSet], Optional[Trace], Optional[dict]]:
    spec, data, cfg, seed = args
    try:
        return _run_one_trial(spec, data, cfg, seed)
    except DivergenceError:
        return None, None, None


def emit_report(report: ComparisonReport, out_dir) -> List[Path]:
    """Write metrics.csv, improvements.csv and per-model prediction traces.

    Files are plain CSV with repr-formatted floats, so re-emitting the same
    report is byte-identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    metrics_path = out_dir / "metrics.csv"
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "trials", "mae_mean", "mae_std",
                         "mape_mean", "mape_std", "accuracy_mean"])
        for name, res in report.models.items():
            writer.writerow([name, res.trials, repr(res.mae_mean), repr(res.mae_std),
                             repr(res.mape_mean), repr(res.mape_std),
                             repr(res.accuracy_mean)])
    written.append(metrics_path)

    improvements_path = out_dir / "improvements.csv"
    with open(improvements_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["candidate", "baseline", "metric", "improvement_fraction"])
        for imp in report.improvements:
            writer.writerow([imp["candidate"], imp["baseline"], imp["metric"],
                             repr(imp["improvement_fraction"])])
    written.append(improvements_path)

    for name, trace in report.traces.items():
        trace_path = out_dir / f"trace_{name}.csv"
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["date", "actual", "predicted"])
            for date, actual, predicted in trace:
                writer.writerow([date.isoformat(), repr(actual), repr(predicted)])
        written.append(trace_path)
    return written
