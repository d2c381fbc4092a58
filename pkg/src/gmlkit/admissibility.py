"""The admissibility gate for single transitions and for chains of them."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .certificates import INFINITE, Certificate, Cost, Failure, FailureReason, sum_costs
from .core import (
    AdmissibilityConfig,
    AnchorShift,
    ComposedMap,
    Declared,
    EntailmentGate,
    GmlSystem,
    ProxyScore,
    EvaluatorSpec,
    Regime,
    ReplaceMemory,
    RenameMemory,
    SyntacticInclusion,
    Transition,
    compose_renames,
    regime_anchor,
    state_map_problems,
    system_from,
    transport,
)
from .errors import (
    DimensionMismatch,
    MissingMemoryField,
    NonComposable,
    NonInjectiveRename,
    OutOfRangeDelta,
    SingularDesign,
    TransportUnrealizable,
)
from .memory import MemoryState, RetainedCompetence
from .protected import ProtectedCore, RetentionFloor, evaluate_core, protected_equivalent, rename_core

__all__ = [
    "AdmissibilityConfig",
    "AnchorShift",
    "CandidateUpdate",
    "Declared",
    "EntailmentGate",
    "certify",
    "chain_certify",
    "pac_chain_bound",
    "retention_gate_demo",
    "simulate_pac_chain",
]

ILL_TYPED = FailureReason.ILL_TYPED
UNREALIZABLE = FailureReason.TRANSPORT_UNREALIZABLE
INCOMPATIBLE = FailureReason.EVALUATOR_INCOMPATIBLE
VIOLATED = FailureReason.PROTECTED_VIOLATED
UNDEFINED = FailureReason.COMPARISON_UNDEFINED
INELIGIBLE = FailureReason.COMPOSITION_INELIGIBLE


def _state_rename(t: Transition) -> dict[str, str]:
    m = t.state_map
    if isinstance(m, SyntacticInclusion):
        return dict(m.rename)
    if isinstance(m, ComposedMap):
        sigma: dict[str, str] = {}
        for step, _ in m.steps:
            if isinstance(step, SyntacticInclusion):
                sigma = compose_renames(sigma, step.rename)
        return sigma
    return {}


def _memory_rename(t: Transition) -> dict[str, str]:
    return dict(t.memory_map.rename) if isinstance(t.memory_map, RenameMemory) else {}


def transport_core(core: ProtectedCore, t: Transition) -> ProtectedCore:
    """Express a source-regime core in the target vocabulary of ``t``."""
    return rename_core(rename_core(core, _state_rename(t)), _memory_rename(t))


def _assign_cost(system: GmlSystem, t: Transition, src: Regime, dst: Regime) -> tuple[Cost, list[Failure]]:
    mode = system.config.cost_mode
    if isinstance(mode, Declared):
        return t.structural_cost, []
    if isinstance(mode, EntailmentGate):
        return 1.0, []
    try:
        mu_src, mu_dst = regime_anchor(src), regime_anchor(dst)
    except SingularDesign as e:
        return INFINITE, [Failure(UNDEFINED, f"anchor undefined: {e}")]
    if mu_src is None or mu_dst is None or mu_src.shape != mu_dst.shape:
        return INFINITE, [Failure(UNDEFINED, "regime anchors missing or of different dimension")]
    return mode.c0 * float(np.sum((mu_dst - mu_src) ** 2)), []


def certify(system: GmlSystem, t: Transition, state, memory: MemoryState | None = None) -> Certificate:
    """Decide admissibility of ``t`` applied to ``(state, memory)`` and assign its cost.

    Every failing clause is reported. The protected clause is evaluated on the
    transported state and memory against the target regime's core.
    """
    memory = memory if memory is not None else MemoryState()
    graph = system.graph
    src, dst = graph.regime(t.source), graph.regime(t.target)
    failures: list[Failure] = []

    failures += [Failure(ILL_TYPED, p) for p in state_map_problems(t, graph, state)]

    moved = None
    if not failures:
        try:
            moved = transport(t, state, memory, graph)
        except (TransportUnrealizable, NonInjectiveRename, DimensionMismatch) as e:
            failures.append(Failure(UNREALIZABLE, str(e)))

    if not t.gauge.is_monotone:
        failures.append(Failure(INCOMPATIBLE, f"gauge scale {t.gauge.scale!r} is not strictly positive"))
    src_core, dst_core = src.evaluator.protected, dst.evaluator.protected
    for r, core in ((src, src_core), (dst, dst_core)):
        if core is None:
            failures.append(Failure(INCOMPATIBLE, f"regime {r.id!r} declares no protected core"))

    if moved is not None and src_core is not None and dst_core is not None:
        new_state, new_memory = moved
        try:
            if not evaluate_core(dst_core, new_state, new_memory):
                failures.append(Failure(VIOLATED, "transported state violates the target protected core"))
        except MissingMemoryField as e:
            failures.append(Failure(UNREALIZABLE, str(e)))
        except DimensionMismatch as e:
            failures.append(Failure(ILL_TYPED, str(e)))
        if not protected_equivalent(transport_core(src_core, t), dst_core, new_memory.theory):
            failures.append(Failure(VIOLATED, "source and target protected cores are not protected-equivalent"))

    if not t.gauge.is_defined:
        failures.append(Failure(UNDEFINED, "gauge parameters are not finite"))
    if not t.composition_eligible:
        failures.append(Failure(INELIGIBLE, "transition is not flagged as composition-eligible"))

    if not failures:
        cost, cost_failures = _assign_cost(system, t, src, dst)
        failures += cost_failures
    if failures:
        return Certificate.rejected(failures)
    return Certificate.ok(cost)


def chain_certify(system: GmlSystem, path: Sequence[Transition], state, memory: MemoryState | None = None) -> Certificate:
    """Certify a composable path segment by segment on the evolving state and memory.

    Besides each segment's own certificate, every intermediate regime's core
    must stay protected-equivalent to the starting core carried along the
    path. Failures carry the index of the segment that produced them.
    """
    for k in range(len(path) - 1):
        if path[k].target != path[k + 1].source:
            raise NonComposable(f"segment {k} ends at {path[k].target!r}, segment {k + 1} starts at {path[k + 1].source!r}")
    if not path:
        return Certificate.ok(0.0)

    graph = system.graph
    memory = memory if memory is not None else MemoryState()
    failures: list[Failure] = []
    costs: list[Cost] = []
    carried = graph.regime(path[0].source).evaluator.protected
    s, m = state, memory
    for k, t in enumerate(path):
        cert = certify(system, t, s, m)
        failures += [replace(f, segment=k) for f in cert.reasons]
        costs.append(cert.cost)
        try:
            s, m = transport(t, s, m, graph)
        except (TransportUnrealizable, NonInjectiveRename, DimensionMismatch):
            break
        if carried is None:
            continue
        carried = transport_core(carried, t)
        here = graph.regime(t.target).evaluator.protected
        if k < len(path) - 1 and (here is None or not protected_equivalent(carried, here, m.theory)):
            failures.append(Failure(INELIGIBLE, f"core at intermediate regime {t.target!r} drifted from the starting core", k))
    if failures:
        return Certificate.rejected(failures)
    return Certificate.ok(sum_costs(costs))


def pac_chain_bound(deltas: Sequence[float]) -> tuple[float, float]:
    """Chain success lower bounds: product of ``1 - delta_k`` and the union bound."""
    for d in deltas:
        if not (0.0 <= d <= 1.0):
            raise OutOfRangeDelta(f"delta {d!r} outside [0, 1]")
    product = math.prod(1.0 - d for d in deltas)
    union = max(0.0, 1.0 - math.fsum(deltas))
    return product, union


def simulate_pac_chain(deltas: Sequence[float], trials: int, seed: int) -> float:
    """Empirical frequency with which every step of the chain is admissible.

    Step ``k`` succeeds independently with probability ``1 - delta_k``.
    """
    pac_chain_bound(deltas)
    rng = np.random.default_rng(seed)
    fails = rng.random((trials, len(deltas))) < np.asarray(deltas, dtype=float)
    return float(np.mean(~fails.any(axis=1))) if trials else 1.0


@dataclass(frozen=True)
class CandidateUpdate:
    """A candidate update summarized by its proxy gain and the competence it retains."""

    retained: float
    proxy_gain: float


def retention_gate_demo(
    proxy_gain: float,
    candidate_a: CandidateUpdate,
    candidate_b: CandidateUpdate,
    floor: float,
    metric: str = "retained",
) -> tuple[Certificate, Certificate]:
    """Certify two equal-gain updates against a retained-competence floor."""
    for c in (candidate_a, candidate_b):
        if c.proxy_gain != proxy_gain:
            raise ValueError("both candidates must have the shared proxy gain")
    core = RetentionFloor(metric, floor)
    memory_spec = RetainedCompetence(floor, metric)
    old = Regime("old", 0, EvaluatorSpec(ProxyScore("old-task"), core), memory_spec)
    new = Regime("new", 0, EvaluatorSpec(ProxyScore("new-task"), core), memory_spec)
    arrows = [
        Transition(name, "old", "new", memory_map=ReplaceMemory(MemoryState({metric: c.retained})))
        for name, c in (("a", candidate_a), ("b", candidate_b))
    ]
    system = system_from([old, new], arrows, label="retention-gate")
    start = MemoryState({metric: max(floor, candidate_a.retained, candidate_b.retained)})
    return tuple(certify(system, t, np.zeros(0), start) for t in arrows)

