"""Protected evaluative cores, their evaluation, and protected equivalence."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import DimensionMismatch, MissingMemoryField
from .memory import MemoryState
from .symbolic import Goal, Theory, entails, least_model

EQUIVALENCE_TOL = 1e-12


def _vector(x) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)).ravel())


@dataclass(frozen=True)
class ScalarFloor:
    """Trust-region floor: satisfied iff ``||s - anchor|| <= radius``."""

    anchor: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "anchor", _vector(self.anchor))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be a positive real, got {self.radius!r}")


@dataclass(frozen=True)
class RetentionFloor:
    """Satisfied iff the named retained-competence summary in memory is at least ``floor``."""

    metric: str
    floor: float

    def __post_init__(self):
        if not math.isfinite(self.floor):
            raise ValueError("retention floor must be finite")


@dataclass(frozen=True)
class LogicalCore:
    """Satisfied iff hypothesis together with the background theory entails ``goal``."""

    goal: Goal


@dataclass(frozen=True)
class EvaluatorIdentity:
    """The whole evaluator is protected; carries no extra constraint."""


ProtectedCore = Union[ScalarFloor, RetentionFloor, LogicalCore, EvaluatorIdentity]


@dataclass(frozen=True)
class ProtectedClass:
    kind: str
    params: tuple


def evaluate_core(core: ProtectedCore, state, memory: MemoryState | None = None) -> bool:
    if isinstance(core, ScalarFloor):
        s = np.atleast_1d(np.asarray(state, dtype=float))
        if s.shape != (len(core.anchor),):
            raise DimensionMismatch(f"state has shape {s.shape}, anchor has dimension {len(core.anchor)}")
        return bool(np.linalg.norm(s - np.asarray(core.anchor)) <= core.radius)
    if isinstance(core, RetentionFloor):
        if memory is None or core.metric not in memory.metrics:
            raise MissingMemoryField(f"memory lacks retained-competence metric {core.metric!r}")
        return memory.metrics[core.metric] >= core.floor
    if isinstance(core, LogicalCore):
        if memory is None or memory.theory is None:
            raise MissingMemoryField("memory carries no background theory")
        hypothesis = state if isinstance(state, Theory) else Theory()
        return entails(hypothesis | memory.theory, core.goal)
    if isinstance(core, EvaluatorIdentity):
        return True
    raise TypeError(f"unknown protected core {core!r}")


def protected_equivalent(
    a: ProtectedCore,
    b: ProtectedCore,
    background: Theory | None = None,
    tol: float = EQUIVALENCE_TOL,
) -> bool:
    """Protected equivalence.

    Scalar parameters are compared with absolute tolerance ``tol``. Logical
    cores are equivalent iff each goal entails the other over ``background``.
    """
    if type(a) is not type(b):
        return False
    if isinstance(a, ScalarFloor):
        return (
            len(a.anchor) == len(b.anchor)
            and abs(a.radius - b.radius) <= tol
            and all(abs(x - y) <= tol for x, y in zip(a.anchor, b.anchor))
        )
    if isinstance(a, RetentionFloor):
        return a.metric == b.metric and abs(a.floor - b.floor) <= tol
    if isinstance(a, LogicalCore):
        bg = background if background is not None else Theory()
        return entails(bg | a.goal.as_facts(), b.goal) and entails(bg | b.goal.as_facts(), a.goal)
    return True


def protected_class(core: ProtectedCore, background: Theory | None = None) -> ProtectedClass:
    """Canonical form of a core.

    For logical cores the canonical parameter is the closure of the goal under
    the background, so bi-entailing goals share a class. Scalar parameters are
    kept exactly; classes agree with :func:`protected_equivalent` on
    tolerance-free inputs.
    """
    if isinstance(core, ScalarFloor):
        return ProtectedClass("scalar", (core.anchor, core.radius))
    if isinstance(core, RetentionFloor):
        return ProtectedClass("retention", (core.metric, core.floor))
    if isinstance(core, LogicalCore):
        bg = background if background is not None else Theory()
        return ProtectedClass("logical", (least_model(bg | core.goal.as_facts()),))
    return ProtectedClass("evaluator", ())


def rename_core(core: ProtectedCore, sigma: Mapping[str, str]) -> ProtectedCore:
    if isinstance(core, LogicalCore):
        return LogicalCore(core.goal.rename(sigma))
    if isinstance(core, RetentionFloor):
        return RetentionFloor(sigma.get(core.metric, core.metric), core.floor)
    return core
