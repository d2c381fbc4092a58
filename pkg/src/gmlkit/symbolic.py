"""Definite propositional Horn logic.

Entailment is decided by forward chaining to the least model, which is
linear in the total size of the theory. The logic has no negation, so adding
clauses can never retract a consequence.

Text format, one item per line::

    # comment
    -> p            fact
    p -> q          rule
    p q -> r        rule with a conjunctive body
    ? r s           goal (conjunction of atoms)
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .certificates import Certificate, Failure, FailureReason
from .errors import NonInjectiveRename, NotASuperset

Atom = str


@dataclass(frozen=True, order=True)
class HornClause:
    head: Atom
    body: frozenset[Atom] = frozenset()

    def __post_init__(self):
        if not self.head:
            raise ValueError("clause head must be a nonempty atom")
        object.__setattr__(self, "body", frozenset(self.body))

    @property
    def is_fact(self) -> bool:
        return not self.body

    def atoms(self) -> frozenset[Atom]:
        return self.body | {self.head}

    def rename(self, sigma: Mapping[Atom, Atom]) -> "HornClause":
        return HornClause(sigma.get(self.head, self.head), frozenset(sigma.get(a, a) for a in self.body))

    def __str__(self):
        return " ".join(sorted(self.body) + ["->", self.head])


def fact(atom: Atom) -> HornClause:
    return HornClause(atom)


def rule(body: Iterable[Atom] | Atom, head: Atom) -> HornClause:
    if isinstance(body, str):
        body = [body]
    return HornClause(head, frozenset(body))


@dataclass(frozen=True)
class Theory:
    clauses: frozenset[HornClause] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "clauses", frozenset(self.clauses))

    @classmethod
    def of(cls, *clauses: HornClause) -> "Theory":
        return cls(frozenset(clauses))

    def atoms(self) -> frozenset[Atom]:
        out: set[Atom] = set()
        for c in self.clauses:
            out |= c.atoms()
        return frozenset(out)

    def heads(self) -> frozenset[Atom]:
        return frozenset(c.head for c in self.clauses)

    def __or__(self, other: "Theory") -> "Theory":
        return Theory(self.clauses | other.clauses)

    def __sub__(self, other: "Theory") -> "Theory":
        return Theory(self.clauses - other.clauses)

    def __le__(self, other: "Theory") -> bool:
        return self.clauses <= other.clauses

    def __len__(self):
        return len(self.clauses)

    def rename(self, sigma: Mapping[Atom, Atom]) -> "Theory":
        return Theory(frozenset(c.rename(sigma) for c in self.clauses))


@dataclass(frozen=True)
class Goal:
    """A conjunction of atoms; the safety formula a logical core protects."""

    atoms: frozenset[Atom]

    def __post_init__(self):
        atoms = frozenset([self.atoms] if isinstance(self.atoms, str) else self.atoms)
        if not atoms:
            raise ValueError("goal must contain at least one atom")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def of(cls, *atoms: Atom) -> "Goal":
        return cls(frozenset(atoms))

    def rename(self, sigma: Mapping[Atom, Atom]) -> "Goal":
        return Goal(frozenset(sigma.get(a, a) for a in self.atoms))

    def as_facts(self) -> Theory:
        return Theory(frozenset(HornClause(a) for a in self.atoms))

    def __str__(self):
        return "? " + " ".join(sorted(self.atoms))


def least_model(theory: Theory) -> frozenset[Atom]:
    """Forward-chaining fixpoint, counting unsatisfied body atoms per clause."""
    remaining = {}
    watchers: dict[Atom, list[HornClause]] = defaultdict(list)
    queue: deque[Atom] = deque()
    for c in theory.clauses:
        remaining[c] = len(c.body)
        for a in c.body:
            watchers[a].append(c)
        if not c.body:
            queue.append(c.head)
    derived: set[Atom] = set()
    while queue:
        a = queue.popleft()
        if a in derived:
            continue
        derived.add(a)
        for c in watchers[a]:
            remaining[c] -= 1
            if remaining[c] == 0 and c.head not in derived:
                queue.append(c.head)
    return frozenset(derived)


def entails(theory: Theory, goal: Goal) -> bool:
    return goal.atoms <= least_model(theory)


def check_injective(sigma: Mapping[Atom, Atom], atoms: Iterable[Atom]) -> None:
    seen: dict[Atom, Atom] = {}
    for a in sorted(set(atoms)):
        image = sigma.get(a, a)
        if image in seen and seen[image] != a:
            raise NonInjectiveRename(f"rename sends both {seen[image]!r} and {a!r} to {image!r}")
        seen[image] = a


def certify_symbolic(
    H: Theory,
    B_src: Theory,
    B_dst: Theory,
    sigma: Mapping[Atom, Atom],
    goal: Goal,
) -> Certificate:
    """Gate a symbolic regime transition on preservation of the protected entailment.

    The hypothesis and goal are transported by ``sigma``; the transition is
    admissible iff ``sigma(H) | B_dst`` still entails ``sigma(goal)``.
    Admissible transitions cost 1.0, inadmissible ones INFINITE. ``B_src`` is
    only used to report whether the source regime satisfied the core.
    """
    check_injective(sigma, H.atoms() | goal.atoms)
    moved_goal = goal.rename(sigma)
    if entails(H.rename(sigma) | B_dst, moved_goal):
        return Certificate.ok(1.0)
    held = "held" if entails(H | B_src, goal) else "did not hold"
    return Certificate.rejected([
        Failure(
            FailureReason.PROTECTED_VIOLATED,
            f"goal {sorted(moved_goal.atoms)} no longer entailed (source core {held})",
        )
    ])


def conservative_extension_check(B: Theory, B_ext: Theory) -> bool:
    """Fresh-head criterion: every added clause concludes an atom unused by ``B``."""
    if not B <= B_ext:
        raise NotASuperset("extension must contain every clause of the base theory")
    old = B.atoms()
    return all(c.head not in old for c in (B_ext - B).clauses)


def monotonicity_check(T: Theory, T_extra: Theory, goal: Goal) -> bool:
    return not (entails(T, goal) and not entails(T | T_extra, goal))


def parse_theory(text: str) -> tuple[Theory, list[Goal]]:
    clauses = []
    goals = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("?"):
            atoms = line[1:].split()
            if not atoms:
                raise ValueError(f"line {lineno}: empty goal")
            goals.append(Goal(frozenset(atoms)))
            continue
        if line.count("->") != 1:
            raise ValueError(f"line {lineno}: expected exactly one '->' in {raw!r}")
        body, head = line.split("->")
        head_atoms = head.split()
        if len(head_atoms) != 1:
            raise ValueError(f"line {lineno}: clause head must be a single atom")
        clauses.append(HornClause(head_atoms[0], frozenset(body.split())))
    return Theory(frozenset(clauses)), goals


def format_theory(theory: Theory, goals: Iterable[Goal] = ()) -> str:
    lines = [str(c) for c in sorted(theory.clauses, key=lambda c: (sorted(c.body), c.head))]
    lines += [str(g) for g in goals]
    return "\n".join(lines) + ("\n" if lines else "")
