"""Pretrained financial-sentiment transformer backend.

Loads a text-classification checkpoint (ProsusAI/finbert by default) lazily;
inference is serialized behind a lock since the underlying pipeline is not
thread-safe. Import of the heavy ML stack happens only inside load(), so the
service and its stub mode work without those packages installed.
"""

import os
import threading
from typing import List, Sequence, Tuple

MODEL_ENV = "SENTIMENT_MODEL"
DEFAULT_MODEL = "ProsusAI/finbert"

ALLOWED_LABELS = ("positive", "negative", "neutral")


class ModelLoadError(RuntimeError):
    """The checkpoint could not be loaded; the service must refuse to start."""


class FinbertBackend:
    def __init__(self, model_name: str = None):
        self.model_id = model_name or os.environ.get(MODEL_ENV, DEFAULT_MODEL)
        self._pipeline = None
        self._lock = threading.Lock()

    def load(self) -> None:
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise ModelLoadError(
                f"transformers is not installed; cannot serve {self.model_id} "
                "(install the [model] extra or run in stub mode)") from exc
        try:
            self._pipeline = pipeline("text-classification", model=self.model_id,
                                      top_k=1)
        except Exception as exc:
            raise ModelLoadError(f"failed to load {self.model_id}: {exc}") from exc

    def score(self, headlines: Sequence[str]) -> List[Tuple[str, float]]:
        if self._pipeline is None:
            raise RuntimeError("backend not loaded")
        with self._lock:
            raw = self._pipeline(list(headlines))
        results = []
        for item in raw:
            top = item[0] if isinstance(item, list) else item
            label = str(top["label"]).lower()
            if label not in ALLOWED_LABELS:
                raise RuntimeError(f"model produced unknown label {label!r}")
            results.append((label, max(0.0, min(1.0, float(top["score"])))))
        return results
