import numpy as np
import pytest

from gmlkit.admissibility import certify
from gmlkit.core import (
    AdmissibilityConfig,
    EntailmentGate,
    EvaluatorSpec,
    Gauge,
    Linear,
    ProxyScore,
    Regime,
    Transition,
    system_from,
)
from gmlkit.errors import PartialMap
from gmlkit.memory import MemoryState, RetainedCompetence
from gmlkit.morphism import (
    ADMISSIBILITY_CRITICAL_MEMORY,
    NON_AGGREGABLE,
    QUOTIENT_RESTRICTED,
    GmlMorphism,
    check_morphism,
    compose_morphisms,
    identity_morphism,
    is_protected_faithful,
    map_trajectory,
    mitchell_collapse,
    protected_classes,
    sample_transitions,
)
from gmlkit.protected import RetentionFloor, ScalarFloor


def ring(radius=1.0, dim=2, label="ring"):
    regimes = [Regime(r, dim, EvaluatorSpec(ProxyScore("score"), ScalarFloor(np.zeros(dim), radius))) for r in "abc"]
    arrows = [
        Transition("ab", "a", "b", state_map=Linear(0.9 * np.eye(dim)), structural_cost=1.0),
        Transition("bc", "b", "c", state_map=Linear(np.eye(dim)), structural_cost=0.5),
        Transition("ca", "c", "a", state_map=Linear(1.2 * np.eye(dim))),
    ]
    return system_from(regimes, arrows, label=label)


def relabel(src, dst):
    return GmlMorphism({r: r for r in src.regimes}, {t.name: t.name for t in src.graph.arrows})


def test_identity_passes_and_is_faithful():
    sys = ring()
    samples = sample_transitions(sys, 100, seed=0)
    report = check_morphism(sys, sys, identity_morphism(sys), samples)
    assert report.passed and report.admissible_samples > 0
    assert report.evidence.startswith("verified structurally; sampled")
    assert is_protected_faithful(sys, sys, identity_morphism(sys), samples)


def test_enlarging_radius_preserves_but_does_not_reflect():
    src, dst = ring(1.0), ring(2.0)
    m = relabel(src, dst)
    samples = sample_transitions(src, 200, seed=1)
    assert check_morphism(src, dst, m, samples).passed
    assert not is_protected_faithful(src, dst, m, samples)


def test_shrinking_radius_gives_counterexample():
    src, dst = ring(1.0), ring(0.5)
    report = check_morphism(src, dst, relabel(src, dst), sample_transitions(src, 200, seed=2))
    assert not report.passed and report.counterexamples
    ce = report.counterexamples[0]
    assert ce.source_certificate.admissible and not ce.image_certificate.admissible
    assert report.evidence == "counterexample found"


def test_partial_map_raises():
    sys = ring()
    with pytest.raises(PartialMap):
        check_morphism(sys, sys, GmlMorphism({"a": "a"}, {}))


def test_structural_mismatch_detected():
    sys = ring()
    m = GmlMorphism({r: r for r in sys.regimes}, {"ab": "bc", "bc": "bc", "ca": "ca"})
    report = check_morphism(sys, sys, m)
    assert not report.passed and report.structural_failures


def test_composition_of_passing_morphisms_passes():
    a, b, c = ring(1.0), ring(1.5), ring(2.0)
    m = compose_morphisms(relabel(a, b), relabel(b, c))
    assert check_morphism(a, c, m, sample_transitions(a, 100, seed=3)).passed


def test_state_maps_compose():
    a = ring(1.0)
    b = ring(2.0)
    scale = GmlMorphism({r: r for r in a.regimes}, {t.name: t.name for t in a.graph.arrows},
                        {r: Linear(2.0 * np.eye(2)) for r in a.regimes})
    m = compose_morphisms(scale, relabel(b, b))
    np.testing.assert_allclose(m.map_state("a", np.array([1.0, 0.5]), a), [2.0, 1.0])


def test_map_trajectory():
    src, big, small = ring(1.0), ring(2.0), ring(0.5)
    path = list(src.graph.arrows)
    start = np.array([0.6, 0.0])
    good = map_trajectory(relabel(src, big), src, big, path, start)
    assert good.claim and good.certificate.admissible and not good.falsified
    bad = map_trajectory(relabel(src, small), src, small, path, start)
    assert bad.falsified
    outside = map_trajectory(relabel(src, big), src, big, path, np.array([1.5, 0.0]))
    assert not outside.claim and not outside.falsified


def single_regime():
    r = Regime("only", 1, EvaluatorSpec(ProxyScore("P"), ScalarFloor([0.0], 1.0)))
    return system_from([r], [Transition("stay", "only", "only")], label="fixed")


def test_single_regime_collapse_is_faithful():
    _, report = mitchell_collapse(single_regime())
    assert report.verdict == "FAITHFUL" and not report.obstructions
    assert report.assumption["single_regime"] and report.assumption["inert_memory"]
    assert len(report.assumption) == 6 and len(report.reducibility) == 5


def test_retention_gating_is_lossy():
    core, spec = RetentionFloor("acc", 0.8), RetainedCompetence(0.8, "acc")
    regimes = [Regime(r, 0, EvaluatorSpec(ProxyScore("P"), core), spec) for r in ("old", "new")]
    _, report = mitchell_collapse(system_from(regimes, [Transition("t", "old", "new")]))
    assert report.verdict == "LOSSY" and ADMISSIBILITY_CRITICAL_MEMORY in report.obstructions


def test_cross_class_arrows_are_lossy():
    regimes = [
        Regime("a", 1, EvaluatorSpec(ProxyScore("P"), ScalarFloor([0.0], 1.0))),
        Regime("b", 1, EvaluatorSpec(ProxyScore("P"), ScalarFloor([5.0], 1.0))),
    ]
    sys = system_from(regimes, [Transition("t", "a", "b")])
    assert len(protected_classes(sys)) == 2
    _, report = mitchell_collapse(sys)
    assert report.verdict == "LOSSY" and report.obstructions == (QUOTIENT_RESTRICTED,)


def test_entailment_gate_is_lossy():
    sys = single_regime()
    gated = system_from(list(sys.regimes.values()), list(sys.graph.arrows), config=AdmissibilityConfig(EntailmentGate()))
    _, report = mitchell_collapse(gated)
    assert report.verdict == "LOSSY" and NON_AGGREGABLE in report.obstructions


def test_lossy_without_obstruction_explains_itself():
    sys = ring()
    bent = system_from(list(sys.regimes.values()), [Transition("g", "a", "b", gauge=Gauge(2.0))])
    _, report = mitchell_collapse(bent)
    assert report.verdict == "LOSSY" and not report.obstructions
    assert "ordinary_comparison" in report.notes[0]


def test_collapse_image_admits_everything():
    for sys in (ring(), single_regime()):
        _, report = mitchell_collapse(sys)
        image = report.image
        assert len(image.regimes) == 1
        for t in image.graph.arrows:
            assert certify(image, t, np.full(image.graph.regime(t.source).state_dim, 7.0), MemoryState()).admissible


def test_faithful_reports_have_no_hard_gates():
    for sys in (ring(), single_regime()):
        _, report = mitchell_collapse(sys)
        if report.verdict == "FAITHFUL":
            cores = [r.evaluator.protected for r in sys.regimes.values()]
            assert not any(isinstance(c, RetentionFloor) for c in cores)
            assert not isinstance(sys.config.cost_mode, EntailmentGate)
            assert len(protected_classes(sys)) == 1


def test_collapse_report_json():
    _, report = mitchell_collapse(single_regime())
    doc = report.to_json()
    assert doc["verdict"] == "FAITHFUL"
    assert set(doc["degeneration_conditions"]) >= {"single_regime", "inert_memory"}
