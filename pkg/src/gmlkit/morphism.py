"""Structure-preserving maps between learning systems, and the one-regime collapse.

Preservation and reflection are universally quantified over continuous state
spaces, so they are checked on finitely many regime pairs exhaustively and on
sampled ``(arrow, state, memory)`` triples. Reports say which of the two kinds
of evidence a verdict rests on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .admissibility import certify, chain_certify
from .certificates import Certificate
from .core import (
    Declared,
    AdmissibilityConfig,
    EntailmentGate,
    EvaluatorSpec,
    GmlSystem,
    IdentityMap,
    KeepMemory,
    Linear,
    MemoryMap,
    ProxyScore,
    QuadraticLoss,
    Regime,
    RegimeId,
    StateMap,
    Transition,
    apply_memory_map,
    apply_state_map,
    compose_memory_maps,
    compose_state_maps,
    system_from,
)
from .errors import PartialMap
from .memory import BackgroundTheory, Inert, MemoryState, RetainedCompetence
from .protected import (
    EvaluatorIdentity,
    LogicalCore,
    RetentionFloor,
    ScalarFloor,
    protected_equivalent,
)

Sample = tuple  # (arrow name or Transition, state, memory)


@dataclass(frozen=True)
class GmlMorphism:
    regime_map: Mapping[RegimeId, RegimeId]
    transition_map: Mapping[str, str]
    state_maps: Mapping[RegimeId, StateMap] = field(default_factory=dict)
    memory_maps: Mapping[RegimeId, MemoryMap] = field(default_factory=dict)
    faithful: bool = False

    def map_state(self, rid: RegimeId, state, src: GmlSystem):
        return apply_state_map(self.state_maps.get(rid, IdentityMap()), state, src.graph, rid)

    def map_memory(self, rid: RegimeId, memory: MemoryState) -> MemoryState:
        return apply_memory_map(self.memory_maps.get(rid, KeepMemory()), memory)


def identity_morphism(system: GmlSystem) -> GmlMorphism:
    return GmlMorphism(
        {rid: rid for rid in system.regimes},
        {t.name: t.name for t in system.graph.arrows},
        faithful=True,
    )


def compose_morphisms(m1: GmlMorphism, m2: GmlMorphism) -> GmlMorphism:
    """The morphism applying ``m1`` first and ``m2`` second."""
    state_maps, memory_maps = {}, {}
    for rid, mid in m1.regime_map.items():
        state_maps[rid] = compose_state_maps(
            m1.state_maps.get(rid, IdentityMap()), rid, m2.state_maps.get(mid, IdentityMap()), mid
        )
        memory_maps[rid] = compose_memory_maps(
            m1.memory_maps.get(rid, KeepMemory()), m2.memory_maps.get(mid, KeepMemory())
        )
    return GmlMorphism(
        {rid: m2.regime_map[mid] for rid, mid in m1.regime_map.items()},
        {a: m2.transition_map[b] for a, b in m1.transition_map.items()},
        state_maps,
        memory_maps,
        faithful=m1.faithful and m2.faithful,
    )


@dataclass(frozen=True)
class Counterexample:
    arrow: str
    state: object
    source_certificate: Certificate
    image_certificate: Certificate


@dataclass(frozen=True)
class MorphismReport:
    passed: bool
    structural_failures: tuple[str, ...]
    equivalence_failures: tuple[tuple[RegimeId, RegimeId], ...]
    counterexamples: tuple[Counterexample, ...]
    samples_checked: int
    admissible_samples: int

    @property
    def evidence(self) -> str:
        if not self.passed:
            return "counterexample found"
        if self.admissible_samples == 0:
            return "verified structurally"
        return "verified structurally; sampled, no counterexample found"


def _check_total(src: GmlSystem, dst: GmlSystem, m: GmlMorphism) -> None:
    missing = [rid for rid in src.regimes if rid not in m.regime_map]
    missing += [t.name for t in src.graph.arrows if t.name not in m.transition_map]
    if missing:
        raise PartialMap(f"morphism undefined on {missing!r}")
    for rid in m.regime_map.values():
        dst.graph.regime(rid)
    names = {t.name for t in dst.graph.arrows}
    bad = [b for b in m.transition_map.values() if b not in names]
    if bad:
        raise PartialMap(f"transition map targets unknown arrows {bad!r}")


def _as_transition(system: GmlSystem, a) -> Transition:
    return a if isinstance(a, Transition) else system.graph.arrow(a)


def _core(system: GmlSystem, rid: RegimeId):
    return system.graph.regime(rid).evaluator.protected


def _equivalent(a, b) -> bool:
    return a is not None and b is not None and protected_equivalent(a, b)


def _mapped_certificates(src, dst, m, samples: Iterable[Sample]):
    for a, state, memory in samples:
        t = _as_transition(src, a)
        memory = memory if memory is not None else MemoryState()
        src_cert = certify(src, t, state, memory)
        image = dst.graph.arrow(m.transition_map[t.name])
        img_cert = certify(dst, image, m.map_state(t.source, state, src), m.map_memory(t.source, memory))
        yield t, state, src_cert, img_cert


def check_morphism(src: GmlSystem, dst: GmlSystem, m: GmlMorphism, samples: Iterable[Sample] = ()) -> MorphismReport:
    """Check that ``m`` preserves protected equivalence and admissibility."""
    _check_total(src, dst, m)
    structural = []
    for t in src.graph.arrows:
        image = dst.graph.arrow(m.transition_map[t.name])
        want = (m.regime_map[t.source], m.regime_map[t.target])
        if (image.source, image.target) != want:
            structural.append(f"{t.name!r} maps to {image.name!r} on {image.source!r}->{image.target!r}, expected {want[0]!r}->{want[1]!r}")
    equiv = []
    for r1, r2 in itertools.combinations(sorted(src.regimes, key=str), 2):
        if _equivalent(_core(src, r1), _core(src, r2)) and not _equivalent(
            _core(dst, m.regime_map[r1]), _core(dst, m.regime_map[r2])
        ):
            equiv.append((r1, r2))
    counter, checked, admissible = [], 0, 0
    for t, state, src_cert, img_cert in _mapped_certificates(src, dst, m, samples):
        checked += 1
        if not src_cert.admissible:
            continue
        admissible += 1
        if not img_cert.admissible:
            counter.append(Counterexample(t.name, state, src_cert, img_cert))
    passed = not (structural or equiv or counter)
    return MorphismReport(passed, tuple(structural), tuple(equiv), tuple(counter), checked, admissible)


def is_protected_faithful(src: GmlSystem, dst: GmlSystem, m: GmlMorphism, samples: Iterable[Sample] = ()) -> bool:
    """True iff on all regime pairs and samples ``m`` also reflects equivalence and admissibility.

    Any collapse of inequivalent cores counts as unfaithful; no target-side
    certification of collapses is recognized.
    """
    _check_total(src, dst, m)
    for r1, r2 in itertools.combinations(sorted(src.regimes, key=str), 2):
        if _equivalent(_core(dst, m.regime_map[r1]), _core(dst, m.regime_map[r2])) and not _equivalent(
            _core(src, r1), _core(src, r2)
        ):
            return False
    return all(src_cert.admissible or not img_cert.admissible for _, _, src_cert, img_cert in _mapped_certificates(src, dst, m, samples))


@dataclass(frozen=True)
class TrajectoryImage:
    path: tuple[Transition, ...]
    source_certificate: Certificate
    certificate: Certificate
    claim: bool

    @property
    def falsified(self) -> bool:
        """True when an admissible source path has an inadmissible image."""
        return self.claim and not self.certificate.admissible


def map_trajectory(
    m: GmlMorphism,
    src: GmlSystem,
    dst: GmlSystem,
    path: Sequence[Transition],
    state,
    memory: MemoryState | None = None,
) -> TrajectoryImage:
    """Map a path through ``m`` and certify the image in ``dst``.

    ``claim`` is False when the source path is itself inadmissible, in which
    case nothing is asserted about the image.
    """
    memory = memory if memory is not None else MemoryState()
    src_cert = chain_certify(src, path, state, memory)
    image = tuple(dst.graph.arrow(m.transition_map[t.name]) for t in path)
    if path:
        first = path[0].source
        state, memory = m.map_state(first, state, src), m.map_memory(first, memory)
    return TrajectoryImage(image, src_cert, chain_certify(dst, image, state, memory), src_cert.admissible)


def sample_transitions(system: GmlSystem, n: int, seed: int, spread: float = 1.5, memory: MemoryState | None = None) -> list[Sample]:
    """Random ``(arrow, state, memory)`` triples over vector-state arrows.

    States are drawn uniformly from a ball around the source regime's
    protected anchor with ``spread`` times its radius, so both admissible and
    inadmissible starts occur.
    """
    rng = np.random.default_rng(seed)
    arrows = [t for t in system.graph.arrows if system.graph.regime(t.source).state_dim > 0]
    out = []
    for _ in range(n if arrows else 0):
        t = arrows[rng.integers(len(arrows))]
        r = system.graph.regime(t.source)
        core = r.evaluator.protected
        center = np.asarray(core.anchor) if isinstance(core, ScalarFloor) else np.zeros(r.state_dim)
        radius = spread * (core.radius if isinstance(core, ScalarFloor) else 1.0)
        direction = rng.normal(size=r.state_dim)
        direction /= np.linalg.norm(direction) or 1.0
        out.append((t.name, center + radius * rng.random() ** (1.0 / r.state_dim) * direction, memory))
    return out


# -- one-regime collapse -----------------------------------------------------------------


@dataclass(frozen=True)
class MitchellTuple:
    experience: str
    task: str
    evaluator: EvaluatorSpec


ADMISSIBILITY_CRITICAL_MEMORY = "admissibility-critical memory"
QUOTIENT_RESTRICTED = "quotient-restricted comparability"
NON_AGGREGABLE = "non-aggregable protected cores"


@dataclass(frozen=True)
class CollapseReport:
    assumption: Mapping[str, bool]
    reducibility: Mapping[str, bool]
    verdict: str
    obstructions: tuple[str, ...]
    image: GmlSystem
    morphism: GmlMorphism
    notes: tuple[str, ...] = ()

    def to_json(self):
        return {
            "verdict": self.verdict,
            "obstructions": list(self.obstructions),
            "degeneration_conditions": dict(self.assumption),
            "reducibility_conditions": dict(self.reducibility),
            "notes": list(self.notes),
        }


def protected_classes(system: GmlSystem) -> list[list[RegimeId]]:
    """Group regimes by protected equivalence (exact partition when equivalence is exact)."""
    classes: list[list[RegimeId]] = []
    for rid in system.regimes:
        core = _core(system, rid)
        for cls in classes:
            if _equivalent(_core(system, cls[0]), core):
                cls.append(rid)
                break
        else:
            classes.append([rid])
    return classes


IMAGE_REGIME = "mitchell"


def mitchell_collapse(src: GmlSystem) -> tuple[MitchellTuple, CollapseReport]:
    """Collapse ``src`` to one regime with identity arrows and a trivial gate.

    Reports which degeneration conditions hold, whether the sufficient
    conditions for a faithful fixed-ontology reduction hold, and which
    obstruction applies when they do not.
    """
    regimes = list(src.regimes.values())
    arrows = src.graph.arrows
    cores = [r.evaluator.protected for r in regimes]
    kinds = [r.evaluator.kind for r in regimes]

    classes = protected_classes(src)
    class_of = {rid: i for i, cls in enumerate(classes) for rid in cls}
    cross_class = any(class_of[t.source] != class_of[t.target] for t in arrows)
    retention = any(isinstance(c, RetentionFloor) for c in cores) or any(
        isinstance(r.memory, RetainedCompetence) for r in regimes
    )
    hard_logical = isinstance(src.config.cost_mode, EntailmentGate) or any(isinstance(c, LogicalCore) for c in cores)
    theory_memory = any(isinstance(r.memory, BackgroundTheory) for r in regimes)
    scalar = all(isinstance(k, (QuadraticLoss, ProxyScore)) for k in kinds)
    common = len(set(kinds)) <= 1
    identity_arrows = all(
        t.source == t.target and isinstance(t.state_map, IdentityMap)
        and isinstance(t.memory_map, KeepMemory) and t.gauge.is_identity
        for t in arrows
    )
    gauges_ordinary = all(t.gauge.is_identity for t in arrows)

    assumption = {
        "single_regime": len(regimes) == 1,
        "identity_transitions_only": identity_arrows,
        "inert_memory": all(isinstance(r.memory, Inert) for r in regimes) and not retention,
        "single_scalar_evaluator": scalar and common,
        "core_is_evaluator": all(isinstance(c, EvaluatorIdentity) for c in cores),
        "fixed_task_and_experience": len(regimes) == 1 and identity_arrows,
    }
    reducibility = {
        "single_protected_class": len(classes) <= 1,
        "transitions_trivial_on_core": not cross_class,
        "memory_absorbable": not retention and not theory_memory,
        "common_scalar_representative": scalar and common and not hard_logical,
        "ordinary_comparison": gauges_ordinary,
    }
    obstructions = []
    if retention:
        obstructions.append(ADMISSIBILITY_CRITICAL_MEMORY)
    if len(classes) > 1 and cross_class:
        obstructions.append(QUOTIENT_RESTRICTED)
    if hard_logical:
        obstructions.append(NON_AGGREGABLE)
    verdict = "FAITHFUL" if all(reducibility.values()) else "LOSSY"

    first = regimes[0] if regimes else None
    dim = first.state_dim if first else 0
    evaluator = EvaluatorSpec(first.evaluator.kind if first else ProxyScore("P"), EvaluatorIdentity())
    image_regime = Regime(IMAGE_REGIME, dim, evaluator)
    image_arrows = [Transition(t.name, IMAGE_REGIME, IMAGE_REGIME) for t in arrows]
    image = system_from([image_regime], image_arrows, config=AdmissibilityConfig(Declared()), label=f"{src.label}/collapsed")

    notes = []
    if verdict == "LOSSY" and not obstructions:
        failed = ", ".join(k for k, v in reducibility.items() if not v)
        notes.append(f"no named obstruction applies; failed reducibility conditions: {failed}")
    state_maps = {}
    for r in regimes:
        if r.state_dim != dim:
            state_maps[r.id] = Linear(np.zeros((dim, r.state_dim)))
            notes.append(f"regime {r.id!r} has state_dim {r.state_dim}; its state is discarded in the image")
    morphism = GmlMorphism(
        {r.id: IMAGE_REGIME for r in regimes},
        {t.name: t.name for t in arrows},
        state_maps,
        {r.id: KeepMemory() for r in regimes},
        faithful=verdict == "FAITHFUL",
    )
    label = src.label or "system"
    mt = MitchellTuple(f"{label}:experience", f"{label}:task", evaluator)
    return mt, CollapseReport(assumption, reducibility, verdict, tuple(obstructions), image, morphism, tuple(notes))
