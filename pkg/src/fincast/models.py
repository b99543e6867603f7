"""The three forecasting architectures: assembly, training, prediction.

Fixed presets (widths, dropout rates, learning rates, input sizes) define
each model kind; training runs mini-batch Adam on normalized windows and is
bit-reproducible from (spec, data, config).
"""

import dataclasses
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DivergenceError
from .nn import Adam, Dense, Dropout, LstmLayer, Network, mse_loss, mse_loss_grad
from .preprocess import Scaler, SplitDataset, WindowedDataset, denormalize

MODEL_KINDS = ("mlp", "lstm", "finbert_lstm")

# kind -> (layer sizes, dropout rates, learning rate, input features)
_PRESETS = {
    "mlp": ((50, 30, 20, 1), (0.1, 0.05, 0.01), 0.01, 10),
    "lstm": ((50, 30, 20, 1), (0.1, 0.05, 0.01), 0.02, 10),
    "finbert_lstm": ((70, 30, 10, 1), (), 0.02, 11),
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    layer_sizes: Tuple[int, ...]
    dropout_rates: Tuple[float, ...]
    learning_rate: float
    input_features: int

    @classmethod
    def for_kind(cls, kind: str) -> "ModelSpec":
        if kind not in _PRESETS:
            raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
        sizes, rates, lr, feats = _PRESETS[kind]
        return cls(kind, sizes, rates, lr, feats)

    def validate(self) -> None:
        if self.kind not in _PRESETS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        sizes, rates, lr, feats = _PRESETS[self.kind]
        if (tuple(self.layer_sizes), tuple(self.dropout_rates),
                self.learning_rate, self.input_features) != (sizes, rates, lr, feats):
            raise ConfigError(f"spec does not match the fixed {self.kind} preset: {self}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    early_stop_patience: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


def assemble(kind: str, layer_sizes, dropout_rates, input_features: int,
             rng: np.random.Generator) -> Network:
    """Build the layer stack for a model kind at arbitrary widths.

    build() routes the fixed presets through here; tests reuse it at reduced
    widths. MLP: dense(relu) hiddens with interleaved dropout and a linear
    head over the flat feature vector. LSTM kinds: stacked tanh LSTM layers
    over the features as a univariate sequence, intermediate layers returning
    sequences, optional dropout after each, and a linear head on the last
    hidden state.
    """
    sizes = list(layer_sizes)
    if sizes[-1] != 1:
        raise ConfigError(f"output layer must have 1 unit, got {sizes[-1]}")
    hidden = sizes[:-1]
    rates = list(dropout_rates)
    if rates and len(rates) != len(hidden):
        raise ConfigError(
            f"{len(rates)} dropout rates for {len(hidden)} hidden layers")
    layers: List = []
    if kind == "mlp":
        n_in = input_features
        for i, width in enumerate(hidden):
            layers.append(Dense(n_in, width, activation="relu", rng=rng))
            if rates:
                layers.append(Dropout(rates[i]))
            n_in = width
    elif kind in ("lstm", "finbert_lstm"):
        n_in = 1
        for i, width in enumerate(hidden):
            last = i == len(hidden) - 1
            layers.append(LstmLayer(n_in, width, return_sequences=not last, rng=rng))
            if rates:
                layers.append(Dropout(rates[i]))
            n_in = width
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    layers.append(Dense(hidden[-1], 1, activation="linear", rng=rng))
    return Network(layers)


def build(spec: ModelSpec, seed: int) -> Network:
    """Deterministic untrained network for a validated spec."""
    spec.validate()
    net = assemble(spec.kind, spec.layer_sizes, spec.dropout_rates,
                   spec.input_features, np.random.default_rng(seed))
    net.spec = spec
    return net


def model_inputs(kind: str, features: np.ndarray) -> np.ndarray:
    """MLP consumes the flat feature vector; LSTM kinds a (B, T, 1) sequence."""
    if kind == "mlp":
        return features
    return features[:, :, np.newaxis]


@dataclass
class TrainedModel:
    spec: ModelSpec
    network: Network
    scaler: Scaler
    loss_history: List[float] = field(default_factory=list)
    config: Optional[TrainConfig] = None

    def save(self, checkpoint_path, sidecar_path=None, extra: Optional[dict] = None) -> None:
        """Checkpoint plus an optional JSON sidecar recording the run recipe."""
        self.network.save(checkpoint_path)
        if sidecar_path is not None:
            sidecar = {
                "spec": dataclasses.asdict(self.spec),
                "config": dataclasses.asdict(self.config) if self.config else None,
                "scaler": dataclasses.asdict(self.scaler),
                "final_loss": self.loss_history[-1] if self.loss_history else None,
                "epochs_run": len(self.loss_history),
            }
            if extra:
                sidecar.update(extra)
            Path(sidecar_path).write_text(json.dumps(sidecar, indent=1, sort_keys=True) + "\n")


def train(network: Network, data: SplitDataset, cfg: TrainConfig) -> TrainedModel:
    """Mini-batch Adam on the normalized train partition.

    Deterministic given (spec, data, cfg): batch order and dropout masks come
    from one generator seeded by cfg.seed. Records the mean train loss per
    epoch; aborts on a non-finite loss or gradient.
    """
    spec: Optional[ModelSpec] = getattr(network, "spec", None)
    if spec is None:
        raise ConfigError("network was not produced by build(); spec unknown")
    train_ds = data.train
    if len(train_ds) == 0:
        raise ConfigError("training partition is empty")
    if train_ds.feature_count != spec.input_features:
        raise ConfigError(
            f"{spec.kind} expects {spec.input_features} features, "
            f"dataset has {train_ds.feature_count}")
    X = model_inputs(spec.kind, train_ds.features)
    y = train_ds.targets[:, np.newaxis]
    n = len(train_ds)
    rng = np.random.default_rng([cfg.seed, 1])
    optimizer = Adam(network.params(), lr=spec.learning_rate)
    history: List[float] = []
    best, since_best = math.inf, 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            pred = network.forward(X[idx], training=True, rng=rng)
            loss = mse_loss(pred, y[idx])
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch + 1}, "
                    f"batch {lo // cfg.batch_size + 1} ({spec.kind})")
            network.zero_grad()
            network.backward(mse_loss_grad(pred, y[idx]))
            optimizer.step(network.grads())
            total += loss * len(idx)
            seen += len(idx)
        epoch_loss = total / seen
        history.append(epoch_loss)
        if cfg.early_stop_patience is not None:
            if epoch_loss < best:
                best, since_best = epoch_loss, 0
            else:
                since_best += 1
                if since_best >= cfg.early_stop_patience:
                    break
    return TrainedModel(spec, network, train_ds.scaler, history, cfg)


def predict(model: TrainedModel, dataset: WindowedDataset) -> List[Tuple[dt.date, float]]:
    """Denormalized next-day price predictions, in dataset order.

    Inference mode: dropout is off, so repeated calls are identical.
    """
    if dataset.feature_count != model.spec.input_features:
        raise ConfigError(
            f"{model.spec.kind} expects {model.spec.input_features} features, "
            f"dataset has {dataset.feature_count}")
    X = model_inputs(model.spec.kind, dataset.features)
    pred = model.network.forward(X, training=False)[:, 0]
    prices = denormalize(model.scaler, pred)
    return list(zip(dataset.target_dates, prices.tolist()))
