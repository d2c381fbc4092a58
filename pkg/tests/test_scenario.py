import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmlkit.certificates import FailureReason
from gmlkit.errors import InvalidScenario
from gmlkit.scenario import (
    CSV_HEADER,
    Completed,
    RunReport,
    TerminatedAt,
    dump_scenario,
    emit_report,
    load_scenario,
    parse_scenario,
    run_scenario,
    trajectory_from_csv,
)
from gmlkit.stability import DriftParams, verify_drift

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

BASE = """
[system]
start = "a"
initial_state = [0.5]
horizon = 6

[[regimes]]
id = "a"
state_dim = 1
protected = { kind = "scalar_floor", anchor = [0.0], radius = 1.0 }

[[regimes]]
id = "b"
state_dim = 1
protected = { kind = "scalar_floor", anchor = [0.0], radius = 1.0 }

[[arrows]]
name = "ab"
source = "a"
target = "b"

[[arrows]]
name = "ba"
source = "b"
target = "a"
"""


def schedule(*pairs):
    return "".join(f'\n[[schedule]]\nstep = {k}\narrow = "{a}"\n' for k, a in pairs)


def test_witness_scenario_completes_without_violations():
    report = run_scenario(load_scenario(SCENARIOS / "witness.toml"))
    assert isinstance(report.verdict, Completed)
    assert len(report.steps) == 201
    assert report.drift is not None and report.drift.violations == () and report.drift.ok


def test_toy_regression_scenario_terminates_at_switch():
    report = run_scenario(load_scenario(SCENARIOS / "toy_regression.toml"))
    assert report.verdict == TerminatedAt(3, report.verdict.reasons)
    assert [f.reason for f in report.verdict.reasons] == [FailureReason.PROTECTED_VIOLATED]
    assert len(report.steps) == 4 and report.drift is None


def test_missing_protected_core_rejected():
    with pytest.raises(InvalidScenario) as err:
        load_scenario(SCENARIOS / "no_protected_core.toml")
    assert len(err.value.problems) == 2
    assert all("every regime must declare a protected core" in p for p in err.value.problems)


@pytest.mark.parametrize("extra,needle", [
    (schedule((2, "ab"), (2, "ba")), "strictly increasing"),
    (schedule((6, "ab")), "must lie in"),
    (schedule((1, "zz")), "unknown arrow"),
    (schedule((1, "ba")), "run is in"),
])
def test_schedule_problems_listed(extra, needle):
    with pytest.raises(InvalidScenario) as err:
        parse_scenario(BASE + extra)
    assert any(needle in p for p in err.value.problems)


def test_non_positive_horizon_rejected():
    with pytest.raises(InvalidScenario):
        parse_scenario(BASE.replace("horizon = 6", "horizon = 0"))


def test_bad_toml_reported_as_invalid_scenario():
    with pytest.raises(InvalidScenario):
        parse_scenario("[system\n")


def test_several_problems_reported_together():
    text = BASE.replace("horizon = 6", "horizon = -1").replace("initial_state = [0.5]", "initial_state = [0.5, 1.0]")
    with pytest.raises(InvalidScenario) as err:
        parse_scenario(text)
    assert len(err.value.problems) >= 2


def test_termination_is_at_first_inadmissible_step():
    text = BASE + """
[[arrows]]
name = "blocked"
source = "b"
target = "a"
composition_eligible = false
""" + schedule((1, "ab"), (3, "blocked"))
    report = run_scenario(parse_scenario(text))
    assert isinstance(report.verdict, TerminatedAt) and report.verdict.step == 3
    flags = [s.admissible for s in report.steps]
    assert flags.index(False) == 3 and len(flags) == 4


def test_completed_run_has_n_plus_one_rows():
    report = run_scenario(parse_scenario(BASE + schedule((1, "ab"), (4, "ba"))))
    rows = emit_report(report, "csv").decode().splitlines()
    assert rows[0] == ",".join(CSV_HEADER)
    assert len(rows) == 1 + 7


def test_empty_report_is_header_only():
    assert emit_report(RunReport(()), "csv").decode() == ",".join(CSV_HEADER) + "\n"


def test_terminated_csv_rows_stop_at_termination():
    report = run_scenario(load_scenario(SCENARIOS / "toy_regression.toml"))
    rows = emit_report(report, "csv").decode().splitlines()
    assert len(rows) == 1 + 4 and rows[-1].endswith("INFINITE,false")


def test_json_report_is_deterministic_and_complete():
    text = (SCENARIOS / "witness.toml").read_text()
    a = emit_report(run_scenario(parse_scenario(text)), "json")
    b = emit_report(run_scenario(parse_scenario(text)), "json")
    assert a == b
    doc = json.loads(a)
    assert doc["verdict"] == {"status": "COMPLETED"}
    assert doc["steps"][19]["certificate"]["admissible"] is True


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_report(RunReport(()), "xml")


@pytest.mark.parametrize("name", ["witness.toml", "toy_regression.toml"])
def test_file_round_trip(name):
    s = load_scenario(SCENARIOS / name)
    assert parse_scenario(dump_scenario(s)) == s


def test_symbolic_scenario_round_trip_and_run():
    text = """
[system]
cost_mode = "entailment_gate"
start = "src"
initial_hypothesis = "-> p\\n"
horizon = 3
memory = { theory = "p -> q\\n" }

[[regimes]]
id = "src"
memory = { kind = "background", theory_id = "B" }
evaluator = { kind = "logical", goal = ["q"] }
protected = { kind = "logical", goal = ["q"] }

[[regimes]]
id = "dst"
memory = { kind = "background", theory_id = "B2" }
evaluator = { kind = "logical", goal = ["Q"] }
protected = { kind = "logical", goal = ["Q"] }

[[arrows]]
name = "inc"
source = "src"
target = "dst"
state_map = { kind = "inclusion", rename = { p = "P", q = "Q" } }
memory_map = { kind = "replace", theory = "P -> Q\\nr -> s\\n" }

[[schedule]]
step = 1
arrow = "inc"
"""
    s = parse_scenario(text)
    assert parse_scenario(dump_scenario(s)) == s
    report = run_scenario(s)
    assert report.completed
    assert report.steps[1].cost == 1.0
    assert report.steps[0].w is None


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.05, 1.0),
    st.lists(st.floats(-1e3, 1e3, allow_subnormal=False), min_size=2, max_size=2),
    st.floats(1e-3, 1e6),
    st.integers(2, 50),
    st.integers(0, 2 ** 31),
)
def test_generated_round_trip(alpha, anchor, cost, horizon, seed):
    text = f"""
[system]
start = "r"
initial_state = [1.0, 2.0]
horizon = {horizon}
seed = {seed}

[[regimes]]
id = "r"
state_dim = 2
anchor = [{anchor[0]!r}, {anchor[1]!r}]
update = {{ kind = "contract", alpha = {alpha!r} }}
protected = {{ kind = "scalar_floor", anchor = [0.0, 0.0], radius = 1e9 }}

[[arrows]]
name = "loop"
source = "r"
target = "r"
cost = {cost!r}

[[schedule]]
step = 1
arrow = "loop"

[drift]
alpha = {alpha!r}
beta = 1.0
"""
    s = parse_scenario(text)
    assert parse_scenario(dump_scenario(s)) == s


def test_csv_trajectory_reads_back():
    report = run_scenario(load_scenario(SCENARIOS / "witness.toml"))
    traj = trajectory_from_csv(emit_report(report, "csv").decode())
    full = report.trajectory()
    assert (traj.w_values, traj.costs) == (full.w_values, full.costs)
    assert verify_drift(DriftParams(0.25, beta=1.0), traj).ok
