"""Mapping classifier probabilities to rule weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

PROB_FLOOR = 1e-6


def clamp_probability(p: float) -> float:
    return min(max(float(p), PROB_FLOOR), 1.0 - PROB_FLOOR)


def lor_weight(p: float) -> float:
    """Log odds ratio ``log(p / (1 - p))`` with ``p`` clamped away from 0 and 1."""
    p = clamp_probability(p)
    return math.log(p / (1.0 - p))


def cm_weight(p: float, k: float = 10.0) -> float:
    """Constant-multiplier weight ``k * p``."""
    return k * float(p)


def pipeline_reliability(mention_i, mention_j) -> float:
    """Product of the two mentions' highest entity-type probabilities."""
    return mention_i.max_score * mention_j.max_score


@dataclass(frozen=True)
class WeightStrategy:
    """``kind`` is ``"lor"`` or ``"cm"``; ``k`` is the CM multiplier."""

    kind: str = "lor"
    k: float = 10.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in ("lor", "cm"):
            raise ValueError(f"unknown weight strategy {self.kind!r}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError(f"K must be a positive real, got {self.k}")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def lor(cls):
        return cls("lor")

    @classmethod
    def cm(cls, k=10.0):
        return cls("cm", k)

    def weight(self, p: float) -> float:
        return lor_weight(p) if self.kind == "lor" else cm_weight(p, self.k)

    def pipeline_weight(self, p: float, reliability: float) -> float:
        """Weight of a pipeline-classifier rule scaled by the pair's reliability."""
        if self.kind == "cm":
            return self.k * float(p) * reliability
        # a zero reliability would give log(0); floor it like a probability
        p = clamp_probability(p)
        return math.log(max(reliability, PROB_FLOOR) * p / (1.0 - p))

    def invalid_weight(self, p: float) -> float:
        """Weight of ``ETFinal(i,NONE)`` for a second-sequence candidate."""
        return lor_weight(1.0 - p) if self.kind == "lor" else cm_weight(1.0 - p, self.k)
