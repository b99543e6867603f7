"""Headline sentiment scoring service: HTTP endpoint plus offline batch mode."""

__version__ = "0.1.0"

from .app import create_app, create_stub_app
from .batch import batch_score, read_news, signed_mean
from .stub import STUB_MODEL_ID, StubBackend, score_headline
