"""Command-line entry point.

Exit codes: 0 when a run completes or a check verifies, 2 when a run
terminates or a check finds violations, 1 on input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .admissibility import pac_chain_bound, simulate_pac_chain
from .errors import GmlError, InvalidScenario
from .morphism import mitchell_collapse
from .scenario import emit_report, load_scenario, run_scenario, trajectory_from_csv
from .stability import DriftParams, TrajectoryRecord, verify_drift
from .symbolic import Goal, entails, least_model, parse_theory
from .witness import AnchoredRegime, simulate_witness, witness_drift_params

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _write(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _dump(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_run(args) -> int:
    report = run_scenario(load_scenario(args.scenario))
    _write(emit_report(report, args.format), args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def _run_one(job: tuple[str, str, str]) -> tuple[str, bool]:
    path, fmt, out_dir = job
    report = run_scenario(load_scenario(path))
    Path(out_dir, Path(path).stem + "." + fmt).write_bytes(emit_report(report, fmt))
    return path, report.ok


def cmd_batch(args) -> int:
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(p, args.format, args.out_dir) for p in args.scenarios]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_run_one, jobs))
    for path, ok in results:
        print(f"{'ok' if ok else 'FAIL'}\t{path}")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL


def _load_trajectory(path: str) -> TrajectoryRecord:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".csv"):
        return trajectory_from_csv(text)
    doc = json.loads(text)
    return TrajectoryRecord(tuple(doc["w_values"]), tuple(doc["costs"]), doc.get("seed"))


def cmd_verify_bound(args) -> int:
    report = verify_drift(DriftParams(args.alpha, args.delta, args.beta), _load_trajectory(args.trajectory))
    _write(_dump(report.to_json()), args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_entail(args) -> int:
    theory, goals = parse_theory(Path(args.theory).read_text(encoding="utf-8"))
    if args.goal:
        goals = [Goal(frozenset(args.goal.split()))]
    if not goals:
        raise ValueError("no goal given: pass --goal or add a '? ...' line to the theory file")
    model = least_model(theory)
    results = [{"goal": str(g), "entailed": entails(theory, g)} for g in goals]
    _write(_dump({"least_model": sorted(model), "results": results}), None)
    return EXIT_OK if all(r["entailed"] for r in results) else EXIT_FAIL


def cmd_collapse(args) -> int:
    scenario = load_scenario(args.scenario)
    _, report = mitchell_collapse(scenario.system)
    _write(_dump(report.to_json()), args.out)
    return EXIT_OK


def cmd_witness(args) -> int:
    anchors = [_floats(a) for a in args.anchors.split(";") if a.strip()]
    regimes = [AnchoredRegime(f"r{i}", a, args.alpha) for i, a in enumerate(anchors)]
    s0 = _floats(args.start) if args.start else [v + 1.0 for v in anchors[0]]
    schedule = list(range(args.switch_every - 1, args.steps, args.switch_every)) if args.switch_every > 0 else []
    traj = simulate_witness(regimes, schedule, s0, args.steps)
    params = witness_drift_params(regimes)
    report = verify_drift(params, traj)
    doc = {
        "drift_params": {"alpha": params.alpha, "delta": params.delta, "beta": params.beta},
        "note": "costs hold the full transport overhead beta * d; verification therefore uses beta = 1",
        "report": report.to_json(),
        "trajectory": traj.to_json(),
    }
    _write(_dump(doc), args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_pac(args) -> int:
    deltas = _floats(args.deltas)
    product, union = pac_chain_bound(deltas)
    doc = {"deltas": deltas, "product_bound": product, "union_bound": union}
    if args.trials:
        doc.update(trials=args.trials, seed=args.seed, empirical=simulate_pac_chain(deltas, args.trials, args.seed))
    _write(_dump(doc), None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmlkit", description="Gated regime-transition runs and their stability checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario file through the admissibility gate")
    p.add_argument("scenario")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run independent scenarios in parallel")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("verify-bound", help="check a recorded trajectory against the drift recurrence")
    p.add_argument("trajectory", help="JSON with w_values/costs, or a CSV run report")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_bound)

    p = sub.add_parser("entail", help="decide Horn entailment by forward chaining")
    p.add_argument("theory")
    p.add_argument("--goal", help='space-separated atoms, e.g. "a b"')
    p.set_defaults(func=cmd_entail)

    p = sub.add_parser("collapse", help="one-regime collapse report for a scenario's system")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("witness", help="built-in convex witness simulation")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--anchors", default="0,0;3,0", help='semicolon-separated anchors, e.g. "0,0;3,0"')
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--switch-every", type=int, default=20)
    p.add_argument("--start", help="initial state, comma-separated (default: first anchor + 1)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("pac", help="chain success bounds for per-step failure probabilities")
    p.add_argument("--deltas", required=True, help="comma-separated, e.g. 0.01,0.02")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pac)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidScenario as e:
        print("invalid scenario:", file=sys.stderr)
        for problem in e.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_ERROR
    except (GmlError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
