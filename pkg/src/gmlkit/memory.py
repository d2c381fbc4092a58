"""Memory carriers: the per-regime memory kind and the runtime memory value."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

from .symbolic import Theory


@dataclass(frozen=True)
class Inert:
    """Memory with no admissibility-relevant content."""


@dataclass(frozen=True)
class RetainedCompetence:
    floor: float
    metric: str = "retained"

    def __post_init__(self):
        if not math.isfinite(self.floor):
            raise ValueError("retained-competence floor must be finite")


@dataclass(frozen=True)
class BackgroundTheory:
    theory_id: str


MemorySpec = Union[Inert, RetainedCompetence, BackgroundTheory]


@dataclass(frozen=True)
class MemoryState:
    """Runtime memory: named competence summaries plus an optional background theory."""

    metrics: Mapping[str, float] = field(default_factory=dict)
    theory: Theory | None = None

    def __post_init__(self):
        object.__setattr__(self, "metrics", {str(k): float(v) for k, v in dict(self.metrics).items()})

    def rename(self, sigma: Mapping[str, str]) -> "MemoryState":
        metrics = {sigma.get(k, k): v for k, v in self.metrics.items()}
        theory = self.theory.rename(sigma) if self.theory is not None else None
        return MemoryState(metrics, theory)


EMPTY_MEMORY = MemoryState()
