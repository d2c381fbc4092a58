"""Typed regime graphs, admissibility certificates and protected-drift bounds."""
from .admissibility import certify, chain_certify, pac_chain_bound, retention_gate_demo, simulate_pac_chain
from .certificates import INFINITE, Certificate, Failure, FailureReason
from .core import (
    AdmissibilityConfig,
    AnchorShift,
    Declared,
    EntailmentGate,
    EvaluatorSpec,
    Gauge,
    GmlSystem,
    Regime,
    RegimeGraph,
    Transition,
    system_from,
)
from .memory import MemoryState
from .morphism import check_morphism, map_trajectory, mitchell_collapse
from .protected import LogicalCore, RetentionFloor, ScalarFloor
from .scenario import Scenario, emit_report, load_scenario, parse_scenario, run_scenario
from .stability import DriftParams, TrajectoryRecord, theorem_bound, verify_drift
from .symbolic import Goal, HornClause, Theory, entails, least_model
from .witness import AnchoredRegime, simulate_witness, toy_admissible

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "AdmissibilityConfig",
    "AnchorShift",
    "AnchoredRegime",
    "Certificate",
    "Declared",
    "DriftParams",
    "EntailmentGate",
    "EvaluatorSpec",
    "Failure",
    "FailureReason",
    "Gauge",
    "GmlSystem",
    "Goal",
    "HornClause",
    "LogicalCore",
    "MemoryState",
    "Regime",
    "RegimeGraph",
    "RetentionFloor",
    "Scenario",
    "ScalarFloor",
    "Theory",
    "TrajectoryRecord",
    "Transition",
    "certify",
    "chain_certify",
    "check_morphism",
    "emit_report",
    "entails",
    "least_model",
    "load_scenario",
    "map_trajectory",
    "mitchell_collapse",
    "pac_chain_bound",
    "parse_scenario",
    "retention_gate_demo",
    "run_scenario",
    "simulate_pac_chain",
    "simulate_witness",
    "system_from",
    "theorem_bound",
    "toy_admissible",
    "verify_drift",
]
