import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmlkit.errors import InconsistentProfile, InvalidParams
from gmlkit.stability import (
    DriftParams,
    TrajectoryRecord,
    UniformlyBounded,
    Vanishing,
    VanishingAndNoiseless,
    asymptotic_class,
    exact_unroll,
    noisy_mean_path,
    noisy_paths,
    simulate_recurrence,
    theorem_bound,
    verify_drift,
)


def naive_unroll(alpha, delta, beta, w0, costs):
    w = w0
    for d in costs:
        w = (1 - alpha) * w + delta + beta * d
    return w


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5, float("nan")])
def test_alpha_range(alpha):
    with pytest.raises(InvalidParams):
        DriftParams(alpha)


def test_negative_noise_rejected():
    with pytest.raises(InvalidParams):
        DriftParams(0.5, delta=-1.0)


def test_bound_known_value():
    p = DriftParams(0.5, delta=0.1, beta=2.0)
    # 0.25 * 4 + 0.2 + 2 * (0.5 * 1 + 1 * 0.5)
    assert theorem_bound(p, 4.0, [1.0, 0.5]) == pytest.approx(3.2)


def test_empty_horizon_returns_initial_value():
    assert theorem_bound(DriftParams(0.3, delta=1.0), 2.0, []) == 2.0


alphas = st.floats(0.01, 1.0)
costs_st = st.lists(st.floats(0.0, 10.0), max_size=40)


@given(alphas, st.floats(0, 2), st.floats(0, 3), st.floats(0, 100), costs_st)
def test_exact_unroll_matches_loop(alpha, delta, beta, w0, costs):
    p = DriftParams(alpha, delta, beta)
    assert exact_unroll(p, w0, costs) == pytest.approx(naive_unroll(alpha, delta, beta, w0, costs), rel=1e-9, abs=1e-9)


@given(alphas, st.floats(0, 2), st.floats(0, 3), st.floats(0, 100), costs_st)
def test_bound_dominates_unroll_by_the_series_tail(alpha, delta, beta, w0, costs):
    p = DriftParams(alpha, delta, beta)
    n = len(costs)
    gap = theorem_bound(p, w0, costs) - exact_unroll(p, w0, costs)
    expected = delta * (1 - alpha) ** n / alpha if n else 0.0
    assert gap == pytest.approx(expected, rel=1e-6, abs=1e-9)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        TrajectoryRecord((1.0, 2.0), ())
    with pytest.raises(ValueError):
        TrajectoryRecord((-1.0,), ())
    with pytest.raises(ValueError):
        TrajectoryRecord((), ())


def test_verify_drift_flags_the_offending_index():
    p = DriftParams(0.5)
    traj = TrajectoryRecord((4.0, 2.0, 1.5, 0.5), (0.0, 0.0, 0.0))
    report = verify_drift(p, traj)
    assert report.violations == (2,)
    assert not report.ok


def test_verify_drift_accepts_simulated_recurrence():
    p = DriftParams(0.2, beta=1.5)
    traj = simulate_recurrence(p, 3.0, [0.1, 0.0, 2.0, 0.3])
    report = verify_drift(p, traj)
    assert report.ok and report.final_value == pytest.approx(report.final_bound)


def test_asymptotic_classes():
    p = DriftParams(0.5, delta=0.1, beta=2.0)
    assert asymptotic_class(p, UniformlyBounded(0.2)).bound == pytest.approx(1.0)
    assert asymptotic_class(p, Vanishing()).bound == pytest.approx(0.2)
    with pytest.raises(InconsistentProfile):
        asymptotic_class(p, VanishingAndNoiseless())
    exact = asymptotic_class(DriftParams(0.5), VanishingAndNoiseless())
    assert exact.bound == 0.0 and exact.exact


def test_noisy_paths_are_reproducible_and_batched():
    p = DriftParams(0.3, delta=0.2, beta=1.0)
    costs = [0.1] * 20
    a = noisy_paths(p, 1.0, costs, 50, seed=5, batch=16)
    b = noisy_paths(p, 1.0, costs, 50, seed=5, batch=16)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (50, 21)
    np.testing.assert_allclose(noisy_mean_path(p, 1.0, costs, 50, seed=5, batch=16), a.mean(axis=0))


def test_noisy_mean_tracks_expected_recurrence():
    p = DriftParams(0.4, delta=0.5, beta=1.0)
    costs = [0.2] * 30
    mean = noisy_mean_path(p, 2.0, costs, 20000, seed=1)
    expected = exact_unroll(p, 2.0, costs)
    assert mean[-1] == pytest.approx(expected, rel=0.02)
    assert mean[-1] <= theorem_bound(p, 2.0, costs) * 1.02
