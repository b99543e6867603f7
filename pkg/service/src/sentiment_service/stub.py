"""Deterministic keyword-rule scoring backend.

This is the shared stub convention also implemented by the fincast
pipeline's lexicon backend: tokens are lowercase [a-z0-9]+ runs; with p
positive and n negative keyword hits, the label follows sign(p - n) and the
score is 0.5 for neutral, otherwise min(1, 0.5 + 0.125*|p - n|). The word
tables must stay identical on both sides; the cross-implementation test
pins byte-for-byte equality of the aggregated output.
"""

import re
from typing import List, Sequence, Tuple

STUB_MODEL_ID = "keyword-lexicon/1"

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


def score_headline(text: str) -> Tuple[str, float]:
    tokens = _TOKEN_RE.findall(text.lower())
    hits = sum(t in POSITIVE_WORDS for t in tokens) - \
        sum(t in NEGATIVE_WORDS for t in tokens)
    if hits == 0:
        return "neutral", 0.5
    label = "positive" if hits > 0 else "negative"
    return label, min(1.0, 0.5 + 0.125 * abs(hits))


class StubBackend:
    """Instant-loading, fully deterministic backend for tests and CI."""

    model_id = STUB_MODEL_ID

    def load(self) -> None:
        pass

    def score(self, headlines: Sequence[str]) -> List[Tuple[str, float]]:
        return [score_headline(h) for h in headlines]
