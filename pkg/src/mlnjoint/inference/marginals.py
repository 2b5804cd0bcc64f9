from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

from ..errors import MissingMarginal
from ..logic import GroundAtom


@dataclass(frozen=True)
class BpConfig:
    max_iterations: int = 1000
    damping: float = 0.5
    convergence_tolerance: float = 1e-6
    schedule: str = "sequential"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if not self.convergence_tolerance > 0:
            raise ValueError("convergence_tolerance must be positive")
        if self.schedule not in ("sequential", "synchronous"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class MarginalTable(Mapping):
    """P(atom = true) for every query grounding, plus run metadata."""

    probabilities: Mapping[GroundAtom, float]
    method: str
    iterations: int = 0
    max_residual: float = 0.0
    converged: bool = True
    log_partition: float | None = None
    extra: dict = field(default_factory=dict)

    def __getitem__(self, atom):
        try:
            return self.probabilities[atom]
        except KeyError:
            raise MissingMarginal(f"no marginal for {atom}") from None

    def __iter__(self):
        return iter(self.probabilities)

    def __len__(self):
        return len(self.probabilities)

    def get_prob(self, predicate, *args):
        return self[GroundAtom(predicate, tuple(str(a) for a in args))]

    def to_dict(self):
        return {
            "method": self.method,
            "iterations": self.iterations,
            "max_residual": self.max_residual,
            "converged": self.converged,
            "log_partition": self.log_partition,
            "marginals": {str(a): p for a, p in self.probabilities.items()},
        }
