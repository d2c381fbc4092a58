"""Anchor-based convex quadratic witness and the two-regime regression example.

Within a regime the state contracts toward the regime's anchor ``mu(r)``, so
``W_t = ||s_t - mu(r)||^2`` shrinks by exactly ``1 - alpha`` per step. On a
switch ``r -> r'`` Young's inequality splits the new discrepancy into a
contracted source term and the overhead ``(1 + 1/eps) ||mu(r) - mu(r')||^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .certificates import Certificate, Failure, FailureReason
from .core import RegimeId, as_matrix, as_vector
from .errors import DimensionMismatch, InvalidAlpha, InvalidResolution, SingularDesign
from .stability import DriftParams, TrajectoryRecord


@dataclass(frozen=True)
class AnchoredRegime:
    regime: RegimeId
    anchor: tuple[float, ...]
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "anchor", as_vector(self.anchor))
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidAlpha(f"alpha must lie in (0, 1], got {self.alpha!r}")


def contractive_step(s, r: AnchoredRegime) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    mu = np.asarray(r.anchor)
    if s.shape != mu.shape:
        raise DimensionMismatch(f"state shape {s.shape} does not match anchor shape {mu.shape}")
    return mu + math.sqrt(1.0 - r.alpha) * (s - mu)


def epsilon_range(alpha: float) -> tuple[float, float]:
    """Open interval of Young splitting constants keeping ``(1 + eps)(1 - alpha) < 1``.

    The upper endpoint is ``math.inf`` when ``alpha == 1``.
    """
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must lie in (0, 1], got {alpha!r}")
    if alpha == 1.0:
        return (0.0, math.inf)
    return (0.0, alpha / (1.0 - alpha))


def default_epsilon(alpha: float) -> float:
    """Midpoint of :func:`epsilon_range`, or 1 when the range is unbounded."""
    lo, hi = epsilon_range(alpha)
    return 1.0 if math.isinf(hi) else 0.5 * (lo + hi)


def transport_overhead(eps: float, mu_src, mu_dst) -> float:
    if eps <= 0:
        raise ValueError("eps must be positive")
    a, b = np.atleast_1d(np.asarray(mu_src, dtype=float)), np.atleast_1d(np.asarray(mu_dst, dtype=float))
    if a.shape != b.shape:
        raise DimensionMismatch("anchors differ in dimension")
    return (1.0 + 1.0 / eps) * float(np.sum((a - b) ** 2))


def witness_drift_params(regimes: Sequence[AnchoredRegime]) -> DriftParams:
    """Drift parameters every witness trajectory over ``regimes`` satisfies.

    The contraction is the worst effective rate ``1 - (1 + eps)(1 - alpha)``
    over regimes, with ``delta = 0`` and ``beta = 1`` because the recorded cost
    already is the full overhead ``beta * d``.
    """
    rates = [1.0 - (1.0 + default_epsilon(r.alpha)) * (1.0 - r.alpha) for r in regimes]
    return DriftParams(alpha=min(rates), delta=0.0, beta=1.0)


def simulate_witness(
    regimes: Sequence[AnchoredRegime],
    switch_schedule: Sequence[int],
    s0,
    n: int,
) -> TrajectoryRecord:
    """Contract within the active regime and switch to the next one at scheduled steps.

    The run starts in ``regimes[0]``; the ``j``-th scheduled step moves to
    ``regimes[(j + 1) % len(regimes)]``. A switch at step ``t`` contracts in the
    departing regime and then measures ``W_{t+1}`` against the new anchor.
    """
    if not regimes:
        raise ValueError("need at least one regime")
    dims = {len(r.anchor) for r in regimes}
    s = np.atleast_1d(np.asarray(s0, dtype=float))
    if len(dims) != 1 or s.shape != (dims.pop(),):
        raise DimensionMismatch("all anchors and the initial state must share one dimension")
    schedule = sorted(set(switch_schedule))
    if schedule and (schedule[0] < 0 or schedule[-1] >= n):
        raise ValueError("switch steps must lie in [0, n)")
    switches = set(schedule)

    idx = 0
    current = regimes[0]
    w = [float(np.sum((s - np.asarray(current.anchor)) ** 2))]
    costs = []
    active = [current.regime]
    for t in range(n):
        s = contractive_step(s, current)
        cost = 0.0
        if t in switches:
            idx = (idx + 1) % len(regimes)
            nxt = regimes[idx]
            cost = transport_overhead(default_epsilon(current.alpha), current.anchor, nxt.anchor)
            current = nxt
        costs.append(cost)
        w.append(float(np.sum((s - np.asarray(current.anchor)) ** 2)))
        active.append(current.regime)
    return TrajectoryRecord(tuple(w), tuple(costs), regimes=tuple(active))


# -- two-regime linear regression ---------------------------------------------------


@dataclass(frozen=True)
class RegressionRegime:
    X: tuple[tuple[float, ...], ...]
    y: tuple[float, ...]
    eta: float
    w_bar: tuple[float, ...]
    rho: float
    c0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "X", as_matrix(self.X))
        object.__setattr__(self, "y", as_vector(self.y))
        object.__setattr__(self, "w_bar", as_vector(self.w_bar))
        if len(self.X) != len(self.y) or len(self.X[0]) != len(self.w_bar):
            raise DimensionMismatch("X, y and w_bar are not dimensionally consistent")
        if not self.eta > 0:
            raise ValueError("step size must be positive")
        if not (self.rho > 0 and self.c0 > 0):
            raise ValueError("rho and c0 must be positive")

    def gradient(self, w) -> np.ndarray:
        X = np.asarray(self.X)
        return X.T @ (X @ w - np.asarray(self.y))

    def minimizer(self) -> np.ndarray:
        X = np.asarray(self.X)
        gram = X.T @ X
        if np.linalg.matrix_rank(gram) < gram.shape[0]:
            raise SingularDesign("X^T X is singular; the regime minimizer is undefined")
        return np.linalg.solve(gram, X.T @ np.asarray(self.y))


def _check_w(w, r: RegressionRegime) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != (len(r.w_bar),):
        raise DimensionMismatch(f"w has shape {w.shape}, expected ({len(r.w_bar)},)")
    return w


def gradient_transport(w, r: RegressionRegime) -> np.ndarray:
    w = _check_w(w, r)
    return w - r.eta * r.gradient(w)


def regression_contraction(r: RegressionRegime) -> float:
    """Contraction rate of ``||w - w*||^2`` under one gradient step.

    The gradient step maps ``w - w*`` through ``I - eta X^T X``, whose spectral
    radius ``q`` gives ``alpha = 1 - q^2``. Only meaningful when ``q < 1``.
    """
    X = np.asarray(r.X)
    lam = np.linalg.eigvalsh(X.T @ X)
    q = float(np.max(np.abs(1.0 - r.eta * lam)))
    return 1.0 - q * q


def toy_admissible(w, r: RegressionRegime, target: RegressionRegime | None = None) -> Certificate:
    """Trust-region gate on one gradient step in the source regime.

    Admissible iff the transported iterate stays within ``rho`` of ``w_bar``.
    With a target regime the cost is the anchor shift ``c0 ||w1* - w0*||^2``;
    without one it is 0.
    """
    moved = gradient_transport(w, r)
    gap = float(np.linalg.norm(moved - np.asarray(r.w_bar)))
    if gap > r.rho:
        return Certificate.rejected([
            Failure(FailureReason.PROTECTED_VIOLATED, f"||tau(w) - w_bar|| = {gap:.6g} exceeds rho = {r.rho:.6g}")
        ])
    if target is None:
        return Certificate.ok(0.0)
    shift = target.minimizer() - r.minimizer()
    return Certificate.ok(r.c0 * float(shift @ shift))


def sufficient_condition(w, r: RegressionRegime) -> bool:
    """Triangle-inequality sufficient condition for :func:`toy_admissible`."""
    w = _check_w(w, r)
    half = r.rho / 2.0
    return bool(np.linalg.norm(w - np.asarray(r.w_bar)) <= half and r.eta * np.linalg.norm(r.gradient(w)) <= half)


# -- scalarization obstruction ---------------------------------------------------------


@dataclass(frozen=True)
class ObstructionReport:
    penalty_argmax: float
    penalty_value: float
    gated_argmax: float | None
    gated_value: float | None
    divergence: bool

    def to_json(self):
        return dict(self.__dict__)


def scalarization_obstruction(u: float, b: float, lam: float, grid: Sequence[float]) -> ObstructionReport:
    """Compare the penalized objective ``u s - lam [s > b]`` with the gated one on a grid.

    Divergence means the penalized maximizer leaves the protected region
    ``s <= b``: the best violating score beats every compliant score.
    """
    grid = [float(s) for s in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    penalized = [(u * s - (lam if s > b else 0.0), s) for s in grid]
    p_val, p_arg = max(penalized, key=lambda v: (v[0], -v[1]))
    compliant = [(u * s, s) for s in grid if s <= b]
    violating = [u * s - lam for s in grid if s > b]
    g_val, g_arg = max(compliant) if compliant else (None, None)
    divergence = bool(violating) and (g_val is None or max(violating) > g_val)
    return ObstructionReport(p_arg, p_val, g_arg, g_val, divergence)


# -- capacity --------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacityCheck:
    dimension: int
    diameter: float
    resolution: float
    transport_regularity: float = 1.0
    innovation: float = 0.0


def covering_bound(c: CapacityCheck) -> float:
    """Upper bound on ``log N`` at resolution ``eps``, covering the transported set at ``eps / L``."""
    if not (c.resolution > 0 and math.isfinite(c.resolution)):
        raise InvalidResolution(f"resolution must be a positive real, got {c.resolution!r}")
    if c.dimension < 0 or c.diameter < 0 or c.transport_regularity <= 0 or c.innovation < 0:
        raise InvalidResolution("dimension, diameter and innovation must be nonnegative, regularity positive")
    eps = c.resolution / c.transport_regularity
    return c.dimension * math.log1p(2.0 * c.diameter / eps) + c.innovation


def witness_capacity(dimension: int, diameter: float, resolution: float) -> CapacityCheck:
    """Capacity data of the convex witness: transport is an isometry and adds no freedom."""
    return CapacityCheck(dimension, diameter, resolution, transport_regularity=1.0, innovation=0.0)
