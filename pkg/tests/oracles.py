"""Reference computations that share no code with the package under test."""
from __future__ import annotations

import itertools
import math

import numpy as np


def truth_table_least_model(clauses, atoms):
    """Least Herbrand model by brute force: the intersection of all models.

    ``clauses`` is a list of ``(head, body_atoms)`` pairs over ``atoms``.
    """
    atoms = sorted(atoms)
    n = len(atoms)
    if n == 0:
        return frozenset()
    index = {a: i for i, a in enumerate(atoms)}
    bits = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(bool)
    is_model = np.ones(len(bits), dtype=bool)
    for head, body in clauses:
        fired = np.ones(len(bits), dtype=bool)
        for b in body:
            fired &= bits[:, index[b]]
        is_model &= ~fired | bits[:, index[head]]
    in_all = bits[is_model].all(axis=0)
    return frozenset(a for a in atoms if in_all[index[a]])


def random_horn(rng, n_atoms: int, n_clauses: int, prefix: str = "p", max_body: int = 3):
    atoms = [f"{prefix}{i}" for i in range(n_atoms)]
    clauses = []
    for _ in range(n_clauses):
        head = atoms[rng.integers(n_atoms)]
        k = int(rng.integers(0, min(max_body, n_atoms) + 1))
        body = frozenset(rng.choice(atoms, size=k, replace=False).tolist()) if k else frozenset()
        clauses.append((head, body))
    return atoms, clauses


def greedy_net_size(points: np.ndarray, eps: float) -> int:
    """Size of a greedy eps-separated net; every point ends within eps of a center."""
    centers = np.empty((0, points.shape[1]))
    for p in points:
        if len(centers) == 0 or np.min(np.linalg.norm(centers - p, axis=1)) > eps:
            centers = np.vstack([centers, p])
    return len(centers)


def hypercube_grid(d: int, side: float, per_axis: int) -> np.ndarray:
    axis = np.linspace(0.0, side, per_axis)
    return np.array(list(itertools.product(axis, repeat=d)))


def drift_recurrence_holds(w, costs, alpha, beta, rtol=1e-9) -> bool:
    for t in range(len(costs)):
        rhs = (1.0 - alpha) * w[t] + beta * costs[t]
        if w[t + 1] > rhs + rtol * max(1.0, abs(rhs)):
            return False
    return True


def witness_overhead(alpha: float, mu_a, mu_b) -> float:
    """Young's-inequality overhead with the midpoint splitting constant."""
    eps = 1.0 if alpha == 1.0 else 0.5 * alpha / (1.0 - alpha)
    diff = np.asarray(mu_a, float) - np.asarray(mu_b, float)
    return (1.0 + 1.0 / eps) * float(diff @ diff)


def union_bound(deltas) -> float:
    return max(0.0, 1.0 - math.fsum(deltas))
