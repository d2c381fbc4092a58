"""The expanded learning-system tuple: regimes, typed transitions, and the regime graph.

All values are immutable. Vectors and matrices are stored as tuples of floats
so that model values compare and round-trip exactly; numeric code converts
them to numpy arrays on use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

import numpy as np

from .certificates import INFINITE, Cost, add_costs, check_cost
from .errors import (
    DimensionMismatch,
    DuplicateRegimeId,
    NonComposable,
    SingularDesign,
    TransportUnrealizable,
    UnknownRegime,
)
from .memory import BackgroundTheory, Inert, MemorySpec, MemoryState, RetainedCompetence
from .protected import LogicalCore, ProtectedCore, RetentionFloor, ScalarFloor
from .symbolic import Goal, Theory, check_injective

RegimeId = Union[str, int]
Vector = tuple[float, ...]
Matrix = tuple[tuple[float, ...], ...]


def as_vector(x) -> Vector:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)).ravel())


def as_matrix(x) -> Matrix:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got array of shape {a.shape}")
    return tuple(tuple(float(v) for v in row) for row in a)


# -- evaluators ---------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticLoss:
    """Squared loss ``0.5 * ||X w - y||^2``."""

    X: Matrix
    y: Vector

    def __post_init__(self):
        object.__setattr__(self, "X", as_matrix(self.X))
        object.__setattr__(self, "y", as_vector(self.y))
        if len(self.X) != len(self.y):
            raise DimensionMismatch(f"X has {len(self.X)} rows but y has {len(self.y)} entries")

    @property
    def n_features(self) -> int:
        return len(self.X[0]) if self.X else 0

    def loss(self, w) -> float:
        r = np.asarray(self.X) @ np.asarray(w, dtype=float) - np.asarray(self.y)
        return 0.5 * float(r @ r)

    def gradient(self, w) -> np.ndarray:
        X = np.asarray(self.X)
        return X.T @ (X @ np.asarray(w, dtype=float) - np.asarray(self.y))

    def minimizer(self) -> np.ndarray:
        X = np.asarray(self.X)
        gram = X.T @ X
        if np.linalg.matrix_rank(gram) < gram.shape[0]:
            raise SingularDesign("X^T X is singular; the least-squares minimizer is not unique")
        return np.linalg.solve(gram, X.T @ np.asarray(self.y))


@dataclass(frozen=True)
class ProxyScore:
    name: str


@dataclass(frozen=True)
class LogicalGoal:
    goal: Goal


EvaluatorKind = Union[QuadraticLoss, ProxyScore, LogicalGoal]


@dataclass(frozen=True)
class EvaluatorSpec:
    kind: EvaluatorKind
    protected: ProtectedCore | None = None


# -- state maps -----------------------------------------------------------------


@dataclass(frozen=True)
class IdentityMap:
    pass


@dataclass(frozen=True)
class Linear:
    """``s -> A s + b``."""

    A: Matrix
    b: Vector = ()

    def __post_init__(self):
        A = as_matrix(self.A)
        b = as_vector(self.b) if len(self.b) else (0.0,) * len(A)
        if len(b) != len(A):
            raise DimensionMismatch(f"offset has length {len(b)}, A has {len(A)} rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def in_dim(self) -> int:
        return len(self.A[0]) if self.A else 0

    @property
    def out_dim(self) -> int:
        return len(self.A)


@dataclass(frozen=True)
class GradientStep:
    """One gradient step on the source regime's quadratic loss."""

    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"step size must be positive, got {self.eta!r}")


@dataclass(frozen=True)
class SyntacticInclusion:
    """Carries a hypothesis theory across by renaming its atoms."""

    rename: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ComposedMap:
    """Sequential application; each step remembers the regime it acts in."""

    steps: tuple[tuple["StateMap", RegimeId], ...]


StateMap = Union[IdentityMap, Linear, GradientStep, SyntacticInclusion, ComposedMap]


def contraction_map(anchor, alpha: float) -> Linear:
    """Linear map ``mu + sqrt(1 - alpha) (s - mu)`` as ``A s + b``."""
    mu = np.asarray(as_vector(anchor))
    k = math.sqrt(1.0 - alpha)
    return Linear(k * np.eye(len(mu)), (1.0 - k) * mu)


def compose_renames(s1: Mapping[str, str], s2: Mapping[str, str]) -> dict[str, str]:
    out = {}
    for a in sorted(set(s1) | set(s2)):
        mid = s1.get(a, a)
        image = s2.get(mid, mid)
        if image != a:
            out[a] = image
    return out


def _flatten(m: StateMap, regime: RegimeId):
    if isinstance(m, ComposedMap):
        return m.steps
    return ((m, regime),)


def compose_state_maps(m1: StateMap, src1: RegimeId, m2: StateMap, src2: RegimeId) -> StateMap:
    """Map equal to applying ``m1`` (acting in ``src1``) and then ``m2`` (acting in ``src2``)."""
    if isinstance(m1, IdentityMap):
        return m2 if not isinstance(m2, GradientStep) else ComposedMap(((m2, src2),))
    if isinstance(m2, IdentityMap):
        return m1 if not isinstance(m1, GradientStep) else ComposedMap(((m1, src1),))
    if isinstance(m1, Linear) and isinstance(m2, Linear) and m2.in_dim == m1.out_dim:
        A1, A2 = np.asarray(m1.A), np.asarray(m2.A)
        return Linear(A2 @ A1, A2 @ np.asarray(m1.b) + np.asarray(m2.b))
    if isinstance(m1, SyntacticInclusion) and isinstance(m2, SyntacticInclusion):
        return SyntacticInclusion(compose_renames(m1.rename, m2.rename))
    return ComposedMap(_flatten(m1, src1) + _flatten(m2, src2))


# -- memory maps and gauges -------------------------------------------------------


@dataclass(frozen=True)
class KeepMemory:
    pass


@dataclass(frozen=True)
class RenameMemory:
    rename: Mapping[str, str]


@dataclass(frozen=True)
class ReplaceMemory:
    """Replace the memory contents wholesale, e.g. with an updated background theory."""

    memory: MemoryState


MemoryMap = Union[KeepMemory, RenameMemory, ReplaceMemory]


def apply_memory_map(m: MemoryMap, memory: MemoryState) -> MemoryState:
    if isinstance(m, KeepMemory):
        return memory
    if isinstance(m, RenameMemory):
        return memory.rename(m.rename)
    return m.memory


def compose_memory_maps(m1: MemoryMap, m2: MemoryMap) -> MemoryMap:
    if isinstance(m1, KeepMemory):
        return m2
    if isinstance(m2, KeepMemory):
        return m1
    if isinstance(m2, ReplaceMemory):
        return m2
    if isinstance(m1, ReplaceMemory):
        return ReplaceMemory(m1.memory.rename(m2.rename))
    return RenameMemory(compose_renames(m1.rename, m2.rename))


@dataclass(frozen=True)
class Gauge:
    """Positive-affine comparison transport ``y -> scale * y + shift``."""

    scale: float = 1.0
    shift: float = 0.0

    def __call__(self, y: float) -> float:
        return self.scale * y + self.shift

    @property
    def is_monotone(self) -> bool:
        return math.isfinite(self.scale) and self.scale > 0

    @property
    def is_defined(self) -> bool:
        return math.isfinite(self.scale) and math.isfinite(self.shift)

    @property
    def is_identity(self) -> bool:
        return self.scale == 1.0 and self.shift == 0.0

    def then(self, other: "Gauge") -> "Gauge":
        """Gauge equal to applying ``self`` first and ``other`` second."""
        return Gauge(other.scale * self.scale, other.scale * self.shift + other.shift)


IDENTITY_GAUGE = Gauge()


# -- regimes, transitions, graph --------------------------------------------------


@dataclass(frozen=True)
class Regime:
    id: RegimeId
    state_dim: int
    evaluator: EvaluatorSpec
    memory: MemorySpec = Inert()
    obs_dim: int = 0
    act_dim: int = 0
    anchor: Vector | None = None
    update: StateMap = IdentityMap()

    def __post_init__(self):
        if self.state_dim < 0 or self.obs_dim < 0 or self.act_dim < 0:
            raise ValueError("carrier dimensions must be nonnegative")
        if self.anchor is not None:
            object.__setattr__(self, "anchor", as_vector(self.anchor))
            if len(self.anchor) != self.state_dim:
                raise DimensionMismatch(f"regime {self.id!r}: anchor dimension != state_dim")
        kind = self.evaluator.kind
        if isinstance(kind, QuadraticLoss) and kind.n_features != self.state_dim:
            raise DimensionMismatch(f"regime {self.id!r}: X has {kind.n_features} columns, state_dim={self.state_dim}")
        core = self.evaluator.protected
        if isinstance(core, ScalarFloor) and len(core.anchor) != self.state_dim:
            raise DimensionMismatch(f"regime {self.id!r}: protected anchor dimension != state_dim")
        if isinstance(core, RetentionFloor) and not isinstance(self.memory, RetainedCompetence):
            raise ValueError(f"regime {self.id!r}: retention floor needs retained-competence memory")
        if isinstance(core, LogicalCore) and not isinstance(self.memory, BackgroundTheory):
            raise ValueError(f"regime {self.id!r}: logical core needs background-theory memory")


def regime_anchor(regime: Regime) -> np.ndarray | None:
    """Declared anchor, else the least-squares minimizer of a quadratic evaluator."""
    if regime.anchor is not None:
        return np.asarray(regime.anchor)
    if isinstance(regime.evaluator.kind, QuadraticLoss):
        return regime.evaluator.kind.minimizer()
    return None


@dataclass(frozen=True)
class Transition:
    name: str
    source: RegimeId
    target: RegimeId
    state_map: StateMap = IdentityMap()
    memory_map: MemoryMap = KeepMemory()
    gauge: Gauge = IDENTITY_GAUGE
    structural_cost: Cost = 0.0
    composition_eligible: bool = True

    def __post_init__(self):
        object.__setattr__(self, "structural_cost", check_cost(self.structural_cost))


def concat_path(t1: Transition, t2: Transition) -> Transition:
    """Path-level concatenation: apply ``t1`` then ``t2``."""
    if t1.target != t2.source:
        raise NonComposable(f"{t1.name!r} ends at {t1.target!r} but {t2.name!r} starts at {t2.source!r}")
    return Transition(
        name=f"{t1.name};{t2.name}",
        source=t1.source,
        target=t2.target,
        state_map=compose_state_maps(t1.state_map, t1.source, t2.state_map, t2.source),
        memory_map=compose_memory_maps(t1.memory_map, t2.memory_map),
        gauge=t1.gauge.then(t2.gauge),
        structural_cost=add_costs(t1.structural_cost, t2.structural_cost),
        composition_eligible=t1.composition_eligible and t2.composition_eligible,
    )


@dataclass(frozen=True)
class RegimeGraph:
    regimes: Mapping[RegimeId, Regime] = field(default_factory=dict)
    arrows: tuple[Transition, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "regimes", dict(self.regimes))
        object.__setattr__(self, "arrows", tuple(self.arrows))
        for rid, r in self.regimes.items():
            if rid != r.id:
                raise ValueError(f"regime stored under {rid!r} has id {r.id!r}")
        names = set()
        for t in self.arrows:
            for end in (t.source, t.target):
                if end not in self.regimes:
                    raise UnknownRegime(f"arrow {t.name!r} references unknown regime {end!r}")
            if t.name in names:
                raise ValueError(f"duplicate arrow name {t.name!r}")
            names.add(t.name)

    def regime(self, rid: RegimeId) -> Regime:
        try:
            return self.regimes[rid]
        except KeyError:
            raise UnknownRegime(f"no regime {rid!r}") from None

    def arrow(self, name: str) -> Transition:
        for t in self.arrows:
            if t.name == name:
                return t
        raise KeyError(f"no arrow named {name!r}")


def add_regime(graph: RegimeGraph, r: Regime) -> RegimeGraph:
    if r.id in graph.regimes:
        raise DuplicateRegimeId(f"regime {r.id!r} already present")
    return RegimeGraph({**graph.regimes, r.id: r}, graph.arrows)


def add_arrow(graph: RegimeGraph, t: Transition) -> RegimeGraph:
    return RegimeGraph(graph.regimes, graph.arrows + (t,))


def finite_cost_subgraph(graph: RegimeGraph) -> RegimeGraph:
    return RegimeGraph(graph.regimes, tuple(t for t in graph.arrows if t.structural_cost is not INFINITE))


# -- admissibility configuration ------------------------------------------------------


@dataclass(frozen=True)
class Declared:
    """Cost is the transition's declared structural cost."""


@dataclass(frozen=True)
class AnchorShift:
    """Cost is ``c0 * ||mu(target) - mu(source)||^2``."""

    c0: float

    def __post_init__(self):
        if not (math.isfinite(self.c0) and self.c0 > 0):
            raise ValueError("c0 must be a positive real")


@dataclass(frozen=True)
class EntailmentGate:
    """Cost is 1.0 for admissible transitions and INFINITE otherwise."""


CostMode = Union[Declared, AnchorShift, EntailmentGate]


@dataclass(frozen=True)
class AdmissibilityConfig:
    cost_mode: CostMode = Declared()


@dataclass(frozen=True)
class GmlSystem:
    graph: RegimeGraph
    config: AdmissibilityConfig = AdmissibilityConfig()
    label: str = ""

    @property
    def regimes(self) -> Mapping[RegimeId, Regime]:
        return self.graph.regimes

    def with_graph(self, graph: RegimeGraph) -> "GmlSystem":
        return replace(self, graph=graph)


def system_from(regimes: Sequence[Regime], arrows: Sequence[Transition] = (), **kw) -> GmlSystem:
    graph = RegimeGraph()
    for r in regimes:
        graph = add_regime(graph, r)
    return GmlSystem(RegimeGraph(graph.regimes, tuple(arrows)), **kw)


def validate_system(system: GmlSystem) -> list[str]:
    problems = []
    for rid, r in system.regimes.items():
        if r.evaluator.protected is None:
            problems.append(f"regime {rid!r} declares no protected core; every regime must declare one")
    return problems


# -- applying maps ---------------------------------------------------------------------


def _state_dims_problems(m: StateMap, src: Regime, dst: Regime, graph: RegimeGraph) -> list[str]:
    if isinstance(m, Linear):
        if (m.out_dim, m.in_dim) != (dst.state_dim, src.state_dim):
            return [f"linear map is {m.out_dim}x{m.in_dim}, expected {dst.state_dim}x{src.state_dim}"]
    elif isinstance(m, (IdentityMap, GradientStep)):
        if src.state_dim != dst.state_dim:
            return [f"{type(m).__name__} needs equal state dimensions, got {src.state_dim} -> {dst.state_dim}"]
    elif isinstance(m, ComposedMap):
        problems = []
        for i, (step, rid) in enumerate(m.steps):
            a = graph.regime(rid)
            b = graph.regime(m.steps[i + 1][1]) if i + 1 < len(m.steps) else dst
            problems += _state_dims_problems(step, a, b, graph)
        if m.steps and m.steps[0][1] != src.id:
            problems.append("composed map does not start in the source regime")
        return problems
    return []


def state_map_problems(t: Transition, graph: RegimeGraph, state) -> list[str]:
    """Typing problems of ``t`` against its endpoint regimes and the given state."""
    src, dst = graph.regime(t.source), graph.regime(t.target)
    problems = _state_dims_problems(t.state_map, src, dst, graph)
    if isinstance(state, Theory):
        if src.state_dim != 0:
            problems.append(f"theory-valued state in regime {src.id!r} with state_dim={src.state_dim}")
    else:
        s = np.atleast_1d(np.asarray(state, dtype=float))
        if s.shape != (src.state_dim,):
            problems.append(f"state has shape {s.shape}, regime {src.id!r} has state_dim={src.state_dim}")
    return problems


def apply_state_map(m: StateMap, state, graph: RegimeGraph, source: RegimeId):
    if isinstance(m, IdentityMap):
        return state if isinstance(state, Theory) else np.array(state, dtype=float)
    if isinstance(m, ComposedMap):
        for step, rid in m.steps:
            state = apply_state_map(step, state, graph, rid)
        return state
    if isinstance(m, SyntacticInclusion):
        if not isinstance(state, Theory):
            raise TransportUnrealizable("syntactic inclusion needs a theory-valued state")
        check_injective(m.rename, state.atoms())
        return state.rename(m.rename)
    if isinstance(state, Theory):
        raise TransportUnrealizable(f"{type(m).__name__} cannot act on a theory-valued state")
    s = np.atleast_1d(np.asarray(state, dtype=float))
    if isinstance(m, Linear):
        if s.shape != (m.in_dim,):
            raise DimensionMismatch(f"linear map expects dimension {m.in_dim}, got {s.shape}")
        return np.asarray(m.A) @ s + np.asarray(m.b)
    if isinstance(m, GradientStep):
        kind = graph.regime(source).evaluator.kind
        if not isinstance(kind, QuadraticLoss):
            raise TransportUnrealizable(f"gradient step needs a quadratic loss in regime {source!r}")
        return s - m.eta * kind.gradient(s)
    raise TypeError(f"unknown state map {m!r}")


def transport(t: Transition, state, memory: MemoryState, graph: RegimeGraph):
    """Apply the state and memory components of ``t``."""
    return apply_state_map(t.state_map, state, graph, t.source), apply_memory_map(t.memory_map, memory)
