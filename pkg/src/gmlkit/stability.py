"""Drift-bound template for protected discrepancy under admissible transport.

A discrepancy sequence ``W_t >= 0`` obeys the drift condition with
parameters ``(alpha, delta, beta)`` when

    E[W_{t+1} | F_t] <= (1 - alpha) W_t + delta + beta * d_t

where ``d_t`` is the certified cost of the transition taken at step ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InconsistentProfile, InvalidParams

# Relative slack for floating-point comparisons in pathwise drift checks.
DRIFT_RTOL = 1e-9


@dataclass(frozen=True)
class DriftParams:
    alpha: float
    delta: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidParams(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise InvalidParams(f"delta must be a nonnegative real, got {self.delta!r}")
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise InvalidParams(f"beta must be a nonnegative real, got {self.beta!r}")


@dataclass(frozen=True)
class TrajectoryRecord:
    w_values: tuple[float, ...]
    costs: tuple[float, ...]
    seed: int | None = None
    regimes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        w = tuple(float(v) for v in self.w_values)
        c = tuple(float(v) for v in self.costs)
        if not w:
            raise ValueError("trajectory needs at least W_0")
        if len(c) != len(w) - 1:
            raise ValueError(f"expected {len(w) - 1} costs for {len(w)} discrepancy values, got {len(c)}")
        if any(v < 0 or math.isnan(v) for v in w + c):
            raise ValueError("discrepancies and costs must be nonnegative")
        object.__setattr__(self, "w_values", w)
        object.__setattr__(self, "costs", c)
        object.__setattr__(self, "regimes", tuple(self.regimes))

    @property
    def n(self) -> int:
        return len(self.costs)

    def to_json(self):
        out = {"w_values": list(self.w_values), "costs": list(self.costs), "seed": self.seed}
        if self.regimes:
            out["regimes"] = list(self.regimes)
        return out


def _kernel(alpha: float, n: int) -> np.ndarray:
    """Weights ``(1 - alpha)^(n-1-k)`` for k = 0..n-1."""
    return (1.0 - alpha) ** np.arange(n - 1, -1, -1, dtype=float)


def theorem_bound(p: DriftParams, w0: float, costs: Sequence[float]) -> float:
    """Finite-horizon bound on ``E[W_n]`` with the noise sum relaxed to ``delta / alpha``."""
    n = len(costs)
    if w0 < 0:
        raise InvalidParams("W_0 must be nonnegative")
    if n == 0:
        return float(w0)
    transport = p.beta * float(_kernel(p.alpha, n) @ np.asarray(costs, dtype=float))
    return (1.0 - p.alpha) ** n * w0 + p.delta / p.alpha + transport


def exact_unroll(p: DriftParams, w0: float, costs: Sequence[float]) -> float:
    """The unrolled recurrence before the geometric-series relaxation of the noise term."""
    n = len(costs)
    if n == 0:
        return float(w0)
    k = _kernel(p.alpha, n)
    return (1.0 - p.alpha) ** n * w0 + p.delta * float(k.sum()) + p.beta * float(k @ np.asarray(costs, dtype=float))


@dataclass(frozen=True)
class UniformlyBounded:
    d_bar: float


@dataclass(frozen=True)
class Vanishing:
    pass


@dataclass(frozen=True)
class VanishingAndNoiseless:
    pass


CostProfile = Union[UniformlyBounded, Vanishing, VanishingAndNoiseless]


@dataclass(frozen=True)
class AsymptoticLimit:
    kind: str
    bound: float
    exact: bool = False


def asymptotic_class(p: DriftParams, profile: CostProfile) -> AsymptoticLimit:
    if isinstance(profile, UniformlyBounded):
        if profile.d_bar < 0:
            raise InvalidParams("cost bound must be nonnegative")
        return AsymptoticLimit("ultimately-bounded", (p.delta + p.beta * profile.d_bar) / p.alpha)
    if isinstance(profile, Vanishing):
        return AsymptoticLimit("noise-floor", p.delta / p.alpha)
    if isinstance(profile, VanishingAndNoiseless):
        if p.delta != 0:
            raise InconsistentProfile("a noiseless profile requires delta = 0")
        return AsymptoticLimit("exact-convergence", 0.0, exact=True)
    raise TypeError(f"unknown cost profile {profile!r}")


@dataclass(frozen=True)
class DriftReport:
    violations: tuple[int, ...]
    final_value: float
    final_bound: float
    final_ok: bool

    @property
    def ok(self) -> bool:
        return not self.violations and self.final_ok

    def to_json(self):
        return {
            "ok": self.ok,
            "violations": list(self.violations),
            "final_value": self.final_value,
            "final_bound": self.final_bound,
            "final_ok": self.final_ok,
        }


def _le(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + DRIFT_RTOL * max(1.0, abs(rhs))


def verify_drift(p: DriftParams, traj: TrajectoryRecord) -> DriftReport:
    """Pathwise check of the drift recurrence and of the final bound.

    A violation is reported at index ``t + 1`` when ``W_{t+1}`` exceeds the
    recurrence applied to ``W_t``.
    """
    w, d = traj.w_values, traj.costs
    violations = tuple(
        t + 1 for t in range(traj.n)
        if not _le(w[t + 1], (1.0 - p.alpha) * w[t] + p.delta + p.beta * d[t])
    )
    bound = theorem_bound(p, w[0], d)
    return DriftReport(violations, w[-1], bound, _le(w[-1], bound))


def simulate_recurrence(p: DriftParams, w0: float, costs: Sequence[float], noise=None) -> TrajectoryRecord:
    """Run ``W_{t+1} = (1 - alpha) W_t + beta d_t + xi_t`` with ``xi_t = noise[t]`` (zeros by default)."""
    n = len(costs)
    xi = np.zeros(n) if noise is None else np.asarray(noise, dtype=float)
    w = [float(w0)]
    for t in range(n):
        w.append((1.0 - p.alpha) * w[-1] + p.beta * costs[t] + xi[t])
    return TrajectoryRecord(tuple(w), tuple(costs))


def _batches(p: DriftParams, w0: float, costs, trials: int, seed: int, batch: int):
    """Yield ``(rows, W_t)`` per step and batch; noise is exponential with mean ``delta``."""
    costs = np.asarray(costs, dtype=float)
    n_batches = -(-trials // batch) if trials else 0
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n_batches)):
        rows = slice(i * batch, min(trials, (i + 1) * batch))
        size = rows.stop - rows.start
        rng = np.random.default_rng(child)
        w = np.full(size, float(w0))
        yield rows, 0, w
        for t in range(len(costs)):
            xi = rng.exponential(p.delta, size) if p.delta > 0 else 0.0
            w = (1.0 - p.alpha) * w + p.beta * costs[t] + xi
            yield rows, t + 1, w


def noisy_paths(p: DriftParams, w0: float, costs: Sequence[float], trials: int, seed: int, batch: int = 1024) -> np.ndarray:
    """Monte-Carlo paths of shape ``(trials, n + 1)``.

    Trials are drawn in fixed batches from child seeds spawned off ``seed``,
    so results depend only on ``seed`` and ``batch``, not on execution order.
    """
    out = np.empty((trials, len(costs) + 1))
    for rows, t, w in _batches(p, w0, costs, trials, seed, batch):
        out[rows, t] = w
    return out


def noisy_mean_path(p: DriftParams, w0: float, costs: Sequence[float], trials: int, seed: int, batch: int = 1024) -> np.ndarray:
    """Per-step sample mean of :func:`noisy_paths` without storing the paths."""
    total = np.zeros(len(costs) + 1)
    for _, t, w in _batches(p, w0, costs, trials, seed, batch):
        total[t] += w.sum()
    return total / max(trials, 1)
