"""Costs and admissibility certificates.

Costs are either nonnegative floats or the :data:`INFINITE` sentinel. The
sentinel is deliberately not ``float('inf')`` so that arithmetic on costs is
always explicit about absorption.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Union


class _Infinite:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __reduce__(self):
        return (_Infinite, ())


INFINITE = _Infinite()

Cost = Union[float, _Infinite]


def is_finite_cost(c: Cost) -> bool:
    return c is not INFINITE


def check_cost(c) -> Cost:
    if c is INFINITE:
        return c
    c = float(c)
    if math.isnan(c) or c < 0:
        raise ValueError(f"cost must be a nonnegative real or INFINITE, got {c!r}")
    if math.isinf(c):
        return INFINITE
    return c


def add_costs(*costs: Cost) -> Cost:
    total = 0.0
    for c in costs:
        if c is INFINITE:
            return INFINITE
        total += c
    return total


def sum_costs(costs: Iterable[Cost]) -> Cost:
    return add_costs(*costs)


def cost_to_json(c: Cost):
    return "INFINITE" if c is INFINITE else c


def cost_from_json(v) -> Cost:
    if isinstance(v, str) and v.strip().lower() in ("infinite", "inf"):
        return INFINITE
    return check_cost(v)


class FailureReason(enum.Enum):
    """One member per clause of the admissibility certificate."""

    ILL_TYPED = "IllTyped"
    TRANSPORT_UNREALIZABLE = "TransportUnrealizable"
    EVALUATOR_INCOMPATIBLE = "EvaluatorIncompatible"
    PROTECTED_VIOLATED = "ProtectedViolated"
    COMPARISON_UNDEFINED = "ComparisonUndefined"
    COMPOSITION_INELIGIBLE = "CompositionIneligible"


@dataclass(frozen=True)
class Failure:
    reason: FailureReason
    detail: str = ""
    segment: int | None = None

    def to_json(self):
        return {"reason": self.reason.value, "detail": self.detail, "segment": self.segment}


@dataclass(frozen=True)
class Certificate:
    """Outcome of the admissibility gate.

    ``admissible`` is false exactly when ``reasons`` is nonempty.
    """

    admissible: bool
    cost: Cost = 0.0
    reasons: tuple[Failure, ...] = field(default=())

    def __post_init__(self):
        if self.admissible == bool(self.reasons):
            raise ValueError("admissible must be False exactly when reasons are present")
        object.__setattr__(self, "cost", check_cost(self.cost))

    @classmethod
    def ok(cls, cost: Cost = 0.0) -> "Certificate":
        return cls(True, cost, ())

    @classmethod
    def rejected(cls, reasons: Iterable[Failure]) -> "Certificate":
        return cls(False, INFINITE, tuple(reasons))

    @property
    def reason_kinds(self) -> tuple[FailureReason, ...]:
        return tuple(f.reason for f in self.reasons)

    def to_json(self):
        return {
            "admissible": self.admissible,
            "cost": cost_to_json(self.cost),
            "reasons": [f.to_json() for f in self.reasons],
        }
