"""Scenario files, gated trajectory execution, and run reports.

A scenario is a TOML document with the sections ``[system]``,
``[[regimes]]``, ``[[arrows]]``, ``[[schedule]]`` and an optional
``[drift]``. See the README for the full field reference.

Runs proceed one step at a time. At a scheduled step the named arrow is
certified against the current state and memory; an inadmissible arrow ends
the run at that step. Otherwise the arrow's transport replaces the regime's
local update for that step.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import tomli
import tomli_w

from .admissibility import certify
from .certificates import INFINITE, Certificate, Failure, cost_from_json, cost_to_json
from .core import (
    AdmissibilityConfig,
    AnchorShift,
    Declared,
    EntailmentGate,
    EvaluatorSpec,
    Gauge,
    GmlSystem,
    GradientStep,
    IdentityMap,
    KeepMemory,
    Linear,
    LogicalGoal,
    ProxyScore,
    QuadraticLoss,
    Regime,
    RegimeGraph,
    RenameMemory,
    ReplaceMemory,
    SyntacticInclusion,
    Transition,
    apply_state_map,
    as_vector,
    contraction_map,
    regime_anchor,
    transport,
    validate_system,
)
from .errors import GmlError, InvalidScenario, SingularDesign
from .memory import BackgroundTheory, Inert, MemoryState, RetainedCompetence
from .protected import EvaluatorIdentity, LogicalCore, RetentionFloor, ScalarFloor
from .stability import DriftParams, DriftReport, TrajectoryRecord, verify_drift
from .symbolic import Goal, Theory, format_theory, parse_theory


@dataclass(frozen=True)
class Scenario:
    """A validated run description; vector states are stored as tuples."""

    system: GmlSystem
    start: Any
    initial_state: tuple[float, ...] | Theory
    initial_memory: MemoryState = field(default_factory=MemoryState)
    schedule: tuple[tuple[int, str], ...] = ()
    horizon: int = 1
    drift: DriftParams | None = None
    seed: int = 0


# -- parsing ---------------------------------------------------------------------------


class _Problems(list):
    def need(self, table: Mapping, key: str, where: str):
        if key not in table:
            self.append(f"{where}: missing field {key!r}")
            return None
        return table[key]


def _parse_memory_spec(d: Mapping) -> Any:
    kind = d.get("kind", "inert")
    if kind == "inert":
        return Inert()
    if kind == "retained":
        return RetainedCompetence(float(d["floor"]), d.get("metric", "retained"))
    if kind == "background":
        return BackgroundTheory(str(d["theory_id"]))
    raise ValueError(f"unknown memory kind {kind!r}")


def _parse_evaluator(d: Mapping) -> Any:
    kind = d.get("kind")
    if kind == "quadratic":
        return QuadraticLoss(d["X"], d["y"])
    if kind == "proxy":
        return ProxyScore(str(d["name"]))
    if kind == "logical":
        return LogicalGoal(Goal(frozenset(d["goal"])))
    raise ValueError(f"unknown evaluator kind {kind!r}")


def _parse_core(d: Mapping) -> Any:
    kind = d.get("kind")
    if kind == "scalar_floor":
        return ScalarFloor(d["anchor"], float(d["radius"]))
    if kind == "retention_floor":
        return RetentionFloor(str(d["metric"]), float(d["floor"]))
    if kind == "logical":
        return LogicalCore(Goal(frozenset(d["goal"])))
    if kind == "evaluator":
        return EvaluatorIdentity()
    raise ValueError(f"unknown protected core kind {kind!r}")


def _parse_state_map(d: Mapping | None, anchor, ctx: str) -> Any:
    d = d or {"kind": "identity"}
    kind = d.get("kind", "identity")
    if kind == "identity":
        return IdentityMap()
    if kind == "linear":
        return Linear(d["A"], d.get("b", ()))
    if kind == "gradient":
        return GradientStep(float(d["eta"]))
    if kind == "contract":
        mu = d.get("anchor", anchor)
        if mu is None:
            raise ValueError(f"{ctx}: contraction needs an anchor")
        return contraction_map(mu, float(d["alpha"]))
    if kind == "inclusion":
        return SyntacticInclusion(dict(d.get("rename", {})))
    raise ValueError(f"unknown state map kind {kind!r}")


def _parse_memory_state(d: Mapping | None) -> MemoryState:
    d = d or {}
    theory = parse_theory(d["theory"])[0] if "theory" in d else None
    return MemoryState(dict(d.get("metrics", {})), theory)


def _parse_memory_map(d: Mapping | None) -> Any:
    d = d or {"kind": "keep"}
    kind = d.get("kind", "keep")
    if kind == "keep":
        return KeepMemory()
    if kind == "rename":
        return RenameMemory(dict(d["rename"]))
    if kind == "replace":
        return ReplaceMemory(_parse_memory_state(d))
    raise ValueError(f"unknown memory map kind {kind!r}")


def _parse_cost_mode(d: Mapping) -> Any:
    mode = d.get("cost_mode", "declared")
    if mode == "declared":
        return Declared()
    if mode == "anchor_shift":
        return AnchorShift(float(d.get("c0", 1.0)))
    if mode == "entailment_gate":
        return EntailmentGate()
    raise ValueError(f"unknown cost mode {mode!r}")


def scenario_from_dict(doc: Mapping) -> Scenario:
    """Build and validate a scenario; every problem found is reported at once."""
    problems = _Problems()
    sys_t = doc.get("system")
    if not isinstance(sys_t, Mapping):
        raise InvalidScenario(["missing [system] section"])
    reg_list = doc.get("regimes") or []
    if not reg_list:
        problems.append("at least one [[regimes]] entry is required")

    regimes = {}
    for i, d in enumerate(reg_list):
        where = f"regimes[{i}]"
        rid = problems.need(d, "id", where)
        if "protected" not in d:
            problems.append(f"{where} ({rid!r}): every regime must declare a protected core")
            continue
        try:
            anchor = d.get("anchor")
            regimes[rid] = Regime(
                id=rid,
                state_dim=int(d.get("state_dim", 0)),
                evaluator=EvaluatorSpec(_parse_evaluator(d.get("evaluator", {"kind": "proxy", "name": str(rid)})), _parse_core(d["protected"])),
                memory=_parse_memory_spec(d.get("memory", {})),
                obs_dim=int(d.get("obs_dim", 0)),
                act_dim=int(d.get("act_dim", 0)),
                anchor=anchor,
                update=_parse_state_map(d.get("update"), anchor, where),
            )
        except (KeyError, ValueError, TypeError, GmlError) as e:
            problems.append(f"{where}: {e}")
        if rid in regimes and sum(1 for r in reg_list if r.get("id") == rid) > 1:
            problems.append(f"{where}: duplicate regime id {rid!r}")

    arrows = []
    for i, d in enumerate(doc.get("arrows") or []):
        where = f"arrows[{i}]"
        try:
            src = d["source"]
            anchor = regimes[src].anchor if src in regimes else None
            arrows.append(Transition(
                name=str(d["name"]),
                source=src,
                target=d["target"],
                state_map=_parse_state_map(d.get("state_map"), anchor, where),
                memory_map=_parse_memory_map(d.get("memory_map")),
                gauge=Gauge(float(d.get("gauge", {}).get("scale", 1.0)), float(d.get("gauge", {}).get("shift", 0.0))),
                structural_cost=cost_from_json(d.get("cost", 0.0)),
                composition_eligible=bool(d.get("composition_eligible", True)),
            ))
        except (KeyError, ValueError, TypeError, GmlError) as e:
            problems.append(f"{where}: {e}")

    system = None
    if not problems:
        try:
            system = GmlSystem(RegimeGraph(regimes, tuple(arrows)), AdmissibilityConfig(_parse_cost_mode(sys_t)), str(sys_t.get("label", "")))
        except (ValueError, GmlError) as e:
            problems.append(f"system: {e}")
    if system is not None:
        problems += validate_system(system)

    horizon = sys_t.get("horizon")
    if not isinstance(horizon, int) or horizon <= 0:
        problems.append("system.horizon must be a positive integer")
        horizon = 0
    start = sys_t.get("start", reg_list[0].get("id") if reg_list else None)
    if start not in regimes and not problems:
        problems.append(f"system.start {start!r} is not a declared regime")

    schedule = []
    for i, d in enumerate(doc.get("schedule") or []):
        step, name = d.get("step"), d.get("arrow")
        if not isinstance(step, int):
            problems.append(f"schedule[{i}]: step must be an integer")
            continue
        schedule.append((step, str(name)))
    steps = [s for s, _ in schedule]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        problems.append("schedule steps must be strictly increasing")
    if any(s < 0 or s >= horizon for s in steps):
        problems.append(f"schedule steps must lie in [0, {horizon})")
    names = {t.name: t for t in arrows}
    at = start
    for step, name in schedule:
        if name not in names:
            problems.append(f"schedule step {step}: unknown arrow {name!r}")
            break
        if names[name].source != at:
            problems.append(f"schedule step {step}: arrow {name!r} leaves {names[name].source!r} but the run is in {at!r}")
            break
        at = names[name].target

    drift = None
    if "drift" in doc:
        try:
            dd = doc["drift"]
            drift = DriftParams(float(dd["alpha"]), float(dd.get("delta", 0.0)), float(dd.get("beta", 0.0)))
        except (KeyError, ValueError, TypeError) as e:
            problems.append(f"drift: {e}")

    if "initial_hypothesis" in sys_t:
        state: Any = parse_theory(sys_t["initial_hypothesis"])[0]
    else:
        state = as_vector(sys_t.get("initial_state", []))
        if start in regimes and len(state) != regimes[start].state_dim:
            problems.append(f"system.initial_state has dimension {len(state)}, start regime needs {regimes[start].state_dim}")
    if problems:
        raise InvalidScenario(problems)
    return Scenario(
        system=system,
        start=start,
        initial_state=state,
        initial_memory=_parse_memory_state(sys_t.get("memory")),
        schedule=tuple(schedule),
        horizon=horizon,
        drift=drift,
        seed=int(sys_t.get("seed", 0)),
    )


def parse_scenario(text: str) -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise InvalidScenario([f"not valid TOML: {e}"]) from None
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- serialization ---------------------------------------------------------------------


def _matrix(m) -> list:
    return [list(row) for row in m]


def _state_map_doc(m) -> dict:
    if isinstance(m, IdentityMap):
        return {"kind": "identity"}
    if isinstance(m, Linear):
        return {"kind": "linear", "A": _matrix(m.A), "b": list(m.b)}
    if isinstance(m, GradientStep):
        return {"kind": "gradient", "eta": m.eta}
    if isinstance(m, SyntacticInclusion):
        return {"kind": "inclusion", "rename": dict(m.rename)}
    raise ValueError(f"{type(m).__name__} has no scenario representation")


def _memory_state_doc(m: MemoryState) -> dict:
    out: dict = {}
    if m.metrics:
        out["metrics"] = dict(m.metrics)
    if m.theory is not None:
        out["theory"] = format_theory(m.theory)
    return out


def _memory_map_doc(m) -> dict:
    if isinstance(m, KeepMemory):
        return {"kind": "keep"}
    if isinstance(m, RenameMemory):
        return {"kind": "rename", "rename": dict(m.rename)}
    return {"kind": "replace", **_memory_state_doc(m.memory)}


def _evaluator_doc(k) -> dict:
    if isinstance(k, QuadraticLoss):
        return {"kind": "quadratic", "X": _matrix(k.X), "y": list(k.y)}
    if isinstance(k, ProxyScore):
        return {"kind": "proxy", "name": k.name}
    return {"kind": "logical", "goal": sorted(k.goal.atoms)}


def _core_doc(c) -> dict:
    if isinstance(c, ScalarFloor):
        return {"kind": "scalar_floor", "anchor": list(c.anchor), "radius": c.radius}
    if isinstance(c, RetentionFloor):
        return {"kind": "retention_floor", "metric": c.metric, "floor": c.floor}
    if isinstance(c, LogicalCore):
        return {"kind": "logical", "goal": sorted(c.goal.atoms)}
    return {"kind": "evaluator"}


def _memory_spec_doc(m) -> dict:
    if isinstance(m, RetainedCompetence):
        return {"kind": "retained", "floor": m.floor, "metric": m.metric}
    if isinstance(m, BackgroundTheory):
        return {"kind": "background", "theory_id": m.theory_id}
    return {"kind": "inert"}


def scenario_to_dict(s: Scenario) -> dict:
    mode = s.system.config.cost_mode
    sys_t: dict = {"label": s.system.label, "start": s.start, "horizon": s.horizon, "seed": s.seed}
    if isinstance(mode, AnchorShift):
        sys_t.update(cost_mode="anchor_shift", c0=mode.c0)
    else:
        sys_t["cost_mode"] = "entailment_gate" if isinstance(mode, EntailmentGate) else "declared"
    if isinstance(s.initial_state, Theory):
        sys_t["initial_hypothesis"] = format_theory(s.initial_state)
    else:
        sys_t["initial_state"] = [float(v) for v in np.atleast_1d(s.initial_state)]
    memory = _memory_state_doc(s.initial_memory)
    if memory:
        sys_t["memory"] = memory

    regimes = []
    for r in s.system.regimes.values():
        d = {
            "id": r.id,
            "state_dim": r.state_dim,
            "obs_dim": r.obs_dim,
            "act_dim": r.act_dim,
            "memory": _memory_spec_doc(r.memory),
            "evaluator": _evaluator_doc(r.evaluator.kind),
            "protected": _core_doc(r.evaluator.protected),
            "update": _state_map_doc(r.update),
        }
        if r.anchor is not None:
            d["anchor"] = list(r.anchor)
        regimes.append(d)
    arrows = [
        {
            "name": t.name,
            "source": t.source,
            "target": t.target,
            "state_map": _state_map_doc(t.state_map),
            "memory_map": _memory_map_doc(t.memory_map),
            "gauge": {"scale": t.gauge.scale, "shift": t.gauge.shift},
            "cost": "inf" if t.structural_cost is INFINITE else t.structural_cost,
            "composition_eligible": t.composition_eligible,
        }
        for t in s.system.graph.arrows
    ]
    doc: dict = {"system": sys_t, "regimes": regimes}
    if arrows:
        doc["arrows"] = arrows
    if s.schedule:
        doc["schedule"] = [{"step": k, "arrow": a} for k, a in s.schedule]
    if s.drift is not None:
        doc["drift"] = {"alpha": s.drift.alpha, "delta": s.drift.delta, "beta": s.drift.beta}
    return doc


def dump_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


# -- running ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    t: int
    regime: Any
    state: Any
    w: float | None
    cost: Any = 0.0
    certificate: Certificate | None = None
    arrow: str | None = None

    @property
    def admissible(self) -> bool:
        return self.certificate is None or self.certificate.admissible

    def to_json(self):
        state = (
            [str(c) for c in sorted(self.state.clauses, key=str)] if isinstance(self.state, Theory)
            else [float(v) for v in np.atleast_1d(self.state)]
        )
        return {
            "t": self.t,
            "regime": self.regime,
            "state": state,
            "W": self.w,
            "cost": cost_to_json(self.cost),
            "arrow": self.arrow,
            "certificate": self.certificate.to_json() if self.certificate else None,
        }


@dataclass(frozen=True)
class Completed:
    def to_json(self):
        return {"status": "COMPLETED"}


@dataclass(frozen=True)
class TerminatedAt:
    step: int
    reasons: tuple[Failure, ...]

    def to_json(self):
        return {"status": "TERMINATED", "step": self.step, "reasons": [f.to_json() for f in self.reasons]}


@dataclass(frozen=True)
class RunReport:
    steps: tuple[StepRecord, ...]
    verdict: Completed | TerminatedAt = Completed()
    drift: DriftReport | None = None
    notes: tuple[str, ...] = ()
    label: str = ""
    seed: int | None = None

    @property
    def completed(self) -> bool:
        return isinstance(self.verdict, Completed)

    @property
    def ok(self) -> bool:
        return self.completed and (self.drift is None or self.drift.ok)

    def trajectory(self) -> TrajectoryRecord | None:
        """Discrepancies and per-step costs, when every ``W_t`` is defined."""
        if not self.steps or any(r.w is None for r in self.steps):
            return None
        costs = [r.cost for r in self.steps[:-1]]
        if any(c is INFINITE for c in costs):
            return None
        return TrajectoryRecord(tuple(r.w for r in self.steps), tuple(costs), self.seed, tuple(r.regime for r in self.steps))


def discrepancy(regime: Regime, state) -> float | None:
    """``||s - mu(r)||^2`` against the regime anchor, or None when no anchor exists."""
    if isinstance(state, Theory):
        return None
    try:
        mu = regime_anchor(regime)
    except SingularDesign:
        return None
    if mu is None:
        return None
    return float(np.sum((np.atleast_1d(np.asarray(state, dtype=float)) - mu) ** 2))


def run_scenario(s: Scenario) -> RunReport:
    graph = s.system.graph
    schedule = dict(s.schedule)
    state = s.initial_state if isinstance(s.initial_state, Theory) else np.asarray(s.initial_state, dtype=float)
    memory = s.initial_memory
    rid = s.start
    records = []
    verdict: Completed | TerminatedAt = Completed()
    for t in range(s.horizon + 1):
        regime = graph.regime(rid)
        w = discrepancy(regime, state)
        if t in schedule:
            arrow = graph.arrow(schedule[t])
            cert = certify(s.system, arrow, state, memory)
            records.append(StepRecord(t, rid, state, w, cert.cost, cert, arrow.name))
            if not cert.admissible:
                verdict = TerminatedAt(t, cert.reasons)
                break
            state, memory = transport(arrow, state, memory, graph)
            rid = arrow.target
            continue
        records.append(StepRecord(t, rid, state, w))
        if t < s.horizon:
            state = apply_state_map(regime.update, state, graph, rid)

    report = RunReport(tuple(records), verdict, label=s.system.label, seed=s.seed)
    if s.drift is None or not report.completed:
        return report
    traj = report.trajectory()
    if traj is None:
        return RunReport(report.steps, verdict, None, ("drift check skipped: W_t undefined for some step",), report.label, s.seed)
    return RunReport(report.steps, verdict, verify_drift(s.drift, traj), (), report.label, s.seed)


# -- reports ---------------------------------------------------------------------------

CSV_HEADER = ("t", "regime", "W", "cost", "admissible")


def report_to_json(r: RunReport) -> dict:
    return {
        "label": r.label,
        "seed": r.seed,
        "verdict": r.verdict.to_json(),
        "steps": [s.to_json() for s in r.steps],
        "drift": r.drift.to_json() if r.drift else None,
        "notes": list(r.notes),
    }


def emit_report(r: RunReport, fmt: str = "json") -> bytes:
    """Deterministic serialization of a run report as JSON or CSV."""
    if fmt == "json":
        return (json.dumps(report_to_json(r), sort_keys=True, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in r.steps:
            writer.writerow([
                s.t,
                s.regime,
                "" if s.w is None else repr(s.w),
                "INFINITE" if s.cost is INFINITE else repr(float(s.cost)),
                "true" if s.admissible else "false",
            ])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def trajectory_from_csv(text: str) -> TrajectoryRecord:
    """Read back the ``(W, cost)`` columns of a CSV run report."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("trajectory CSV has no rows")
    w = [float(row["W"]) for row in rows]
    costs = [math.inf if row["cost"] == "INFINITE" else float(row["cost"]) for row in rows[:-1]]
    return TrajectoryRecord(tuple(w), tuple(costs))
