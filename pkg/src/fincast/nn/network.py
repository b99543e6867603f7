"""Layer stacks with a shared forward/backward protocol and JSON checkpoints."""

import json
from pathlib import Path
from typing import List, Optional

import numpy as np

from .layers import Dense, Dropout, LstmLayer


class Network:
    """An ordered stack of layers trained end to end."""

    def __init__(self, layers: List):
        self.layers = list(layers)

    def forward(self, x: np.ndarray, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self) -> List[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def grads(self) -> List[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def num_params(self) -> int:
        return sum(p.size for p in self.params())

    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            if isinstance(layer, Dense):
                layers.append({
                    "kind": "dense",
                    "n_in": layer.n_in,
                    "n_out": layer.n_out,
                    "activation": layer.activation,
                    "W": layer.W.tolist(),
                    "b": layer.b.tolist(),
                })
            elif isinstance(layer, LstmLayer):
                layers.append({
                    "kind": "lstm",
                    "n_in": layer.n_in,
                    "hidden": layer.hidden,
                    "return_sequences": layer.return_sequences,
                    "W": layer.cell.W.tolist(),
                    "b": layer.cell.b.tolist(),
                })
            elif isinstance(layer, Dropout):
                layers.append({"kind": "dropout", "rate": layer.rate})
            else:
                raise TypeError(f"cannot serialize layer {layer!r}")
        return {"format": "fincast-checkpoint", "version": 1, "layers": layers}

    def save(self, path) -> None:
        """Write a checkpoint whose reload reproduces predictions bit-exactly.

        JSON floats are written with repr, which round-trips float64 exactly,
        and re-emitting the same network yields byte-identical files.
        """
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        if data.get("format") != "fincast-checkpoint":
            raise ValueError("not a fincast checkpoint")
        layers = []
        for spec in data["layers"]:
            kind = spec["kind"]
            if kind == "dense":
                layer = Dense(spec["n_in"], spec["n_out"], spec["activation"])
                layer.W = np.asarray(spec["W"], dtype=np.float64)
                layer.b = np.asarray(spec["b"], dtype=np.float64)
                layer.dW = np.zeros_like(layer.W)
                layer.db = np.zeros_like(layer.b)
            elif kind == "lstm":
                layer = LstmLayer(spec["n_in"], spec["hidden"],
                                  return_sequences=spec["return_sequences"])
                layer.cell.W = np.asarray(spec["W"], dtype=np.float64)
                layer.cell.b = np.asarray(spec["b"], dtype=np.float64)
                layer.dW = np.zeros_like(layer.cell.W)
                layer.db = np.zeros_like(layer.cell.b)
            elif kind == "dropout":
                layer = Dropout(spec["rate"])
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
            layers.append(layer)
        return cls(layers)

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_dict(json.loads(Path(path).read_text()))
