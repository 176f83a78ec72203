import logging

import numpy as np
import pytest

from core.errors import InvalidParameterError
from core.types import Cohort, Criterion, resolve_target_rate
from modules.decision.rule import decide_cohort
from modules.metrics.bias import residual_bias
from modules.objective.smoothing import SmoothedObjectiveParams, objective_value
from modules.optimizer.sgd import (
    SgdConfig,
    build_context,
    fit,
    resolve_learning_rate,
    suboptimality_bound,
    tuned_suboptimality_bound,
)
from modules.oracle.qp import qp_oracle
from tests.conftest import make_cohort

GAMMA = 0.05


def _gap(cohort, criterion, model, gamma=GAMMA):
    params = SmoothedObjectiveParams(gamma=gamma, b=criterion.b)
    context = build_context(cohort, criterion, gamma)
    mu_star, _ = qp_oracle(cohort, criterion, gamma, box=True)
    return objective_value(model.mu, cohort, params, context) - objective_value(mu_star, cohort, params, context)


def _mean_gap(cohort, criterion, steps, seeds=20, gamma=GAMMA):
    return np.mean(
        [
            _gap(cohort, criterion, fit(cohort, criterion, gamma, SgdConfig(steps=steps, seed=s))[0], gamma)
            for s in range(seeds)
        ]
    )


def test_learning_rate_resolution():
    assert resolve_learning_rate("auto", 0.5, 0.0, 4, 100) == pytest.approx(0.3)
    assert resolve_learning_rate("auto", 0.5, 0.5, 4, 100) == pytest.approx(0.2)
    assert resolve_learning_rate("small", 0.5, 0.0, 4, 100) == pytest.approx(0.02)
    assert resolve_learning_rate(0.7, 0.5, 0.0, 4, 100) == 0.7


def test_tuned_bound_is_bound_at_auto_rate():
    alpha = resolve_learning_rate("auto", 0.1, 0.3, 5, 1000)
    assert suboptimality_bound(alpha, 5, 1000, 0.1, 0.3) == pytest.approx(tuned_suboptimality_bound(5, 1000, 0.1, 0.3))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(steps=0),
        dict(steps=10, learning_rate=-1.0),
        dict(steps=10, learning_rate="fast"),
        dict(steps=10, sampling="sorted"),
        dict(steps=10, trace_every=0),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SgdConfig(**kwargs)


def test_fit_is_deterministic(cohort, parity):
    config = SgdConfig(steps=2000, seed=7)
    first, trace_a = fit(cohort, parity, GAMMA, config)
    second, trace_b = fit(cohort, parity, GAMMA, config)
    assert first.mu == second.mu
    assert trace_a.to_frame().equals(trace_b.to_frame())

    other, _ = fit(cohort, parity, GAMMA, SgdConfig(steps=2000, seed=8))
    assert other.mu != first.mu


def test_iterates_stay_in_projection_box(cohort, parity):
    model, trace = fit(cohort, parity, GAMMA, SgdConfig(steps=3000, learning_rate=5.0, projection_bound=0.3, trace_every=1))
    assert all(abs(m) <= 0.3 for point in trace.points for m in point.mu)
    assert all(abs(m) <= 0.3 for m in model.mu)

    with pytest.raises(InvalidParameterError):
        fit(cohort, parity, GAMMA, SgdConfig(steps=10, projection_bound=2.0))


def test_averaged_iterate_equals_mean_of_iterates(cohort, parity):
    steps = 500
    model, trace = fit(cohort, parity, GAMMA, SgdConfig(steps=steps, learning_rate=0.2, trace_every=1))
    iterates = np.array([point.mu for point in trace.points[1:]])
    assert iterates.shape == (steps, 3)
    np.testing.assert_allclose(model.mu, iterates.mean(axis=0), atol=1e-12)
    assert sum(trace.update_counts) == steps


def test_trace_frame(cohort, parity):
    _, trace = fit(cohort, parity, GAMMA, SgdConfig(steps=1000, trace_every=100))
    frame = trace.to_frame()
    assert list(frame.columns) == ["step", "epoch", "objective", "mu_0", "mu_1", "mu_2"]
    assert frame["step"].tolist() == list(range(0, 1001, 100))
    assert frame["epoch"].iloc[-1] == pytest.approx(1000 / len(cohort))
    assert trace.smoothed_objective(windows=5).shape == (5,)


def test_shuffled_sampling_visits_every_example_once_per_epoch(cohort, parity):
    _, trace = fit(cohort, parity, GAMMA, SgdConfig(steps=2 * len(cohort), sampling="shuffled"))
    assert list(trace.update_counts) == (2 * cohort.group_sizes()).tolist()


def test_fit_records_metadata(cohort, parity):
    model, trace = fit(cohort, parity, GAMMA, SgdConfig(steps=400, seed=3))
    assert model.fit_info.n == len(cohort)
    assert model.fit_info.steps == 400
    assert model.fit_info.seed == 3
    assert model.fit_info.learning_rate == trace.learning_rate


def test_degenerate_group_keeps_zero_multiplier(caplog):
    cohort = Cohort(
        scores=[0.9, 0.8, -0.2, 0.4, -0.6, 0.1],
        group_ids=[0, 0, 0, 1, 1, 1],
        group_count=2,
        sensitive=[1, 1, 1, 1, 0, 0],
    )
    with caplog.at_level(logging.WARNING):
        model, _ = fit(cohort, Criterion.parity(), 0.1, SgdConfig(steps=500))
    assert model.mu[0] == 0.0
    assert model.degenerate == (True, False)
    assert "degenerate" in caplog.text


def test_unresolved_equality_rate_is_rejected(cohort):
    with pytest.raises(InvalidParameterError):
        fit(cohort, Criterion.equality(), GAMMA, SgdConfig(steps=10))


def test_equality_fit_moves_positive_rates_to_target(cohort):
    criterion = resolve_target_rate(Criterion.equality(), cohort)
    model, _ = fit(cohort, criterion, 0.1, SgdConfig(steps=50_000, seed=1))
    q = decide_cohort(cohort, model)
    rates = np.bincount(cohort.group_ids, weights=q) / cohort.group_sizes()
    np.testing.assert_allclose(rates, criterion.target_rate, atol=0.05)


ACCEPTANCE_GAMMA = 0.01


@pytest.fixture(scope="module")
def acceptance_cohort():
    return make_cohort(n=10_000, group_count=4, seed=13)


@pytest.mark.parametrize(
    "steps",
    [1_000, 10_000, pytest.param(100_000, marks=pytest.mark.slow)],
)
def test_expected_gap_within_bound(steps, acceptance_cohort, parity):
    bound = tuned_suboptimality_bound(4, steps, ACCEPTANCE_GAMMA)
    assert bound == pytest.approx(2 * (1 + ACCEPTANCE_GAMMA) * np.sqrt(4 / steps))
    assert _mean_gap(acceptance_cohort, parity, steps, gamma=ACCEPTANCE_GAMMA) <= bound


@pytest.mark.slow
def test_gap_shrinks_with_more_steps(parity):
    cohort = make_cohort(n=500, seed=12)
    short = _mean_gap(cohort, parity, 1_000, seeds=10)
    long = _mean_gap(cohort, parity, 30_000, seeds=10)
    assert long < short


def test_exact_fit_meets_the_constraints(acceptance_cohort, parity):
    solution = qp_oracle(acceptance_cohort, parity, ACCEPTANCE_GAMMA, box=False)
    context = build_context(acceptance_cohort, parity, ACCEPTANCE_GAMMA)
    residuals = residual_bias(acceptance_cohort, solution.q_star, context)
    assert np.max(residuals) <= 1e-6


@pytest.mark.slow
def test_residual_bias_after_long_run(acceptance_cohort, parity):
    # single runs land near 1e-2, the seed average stays below it
    worst = []
    for seed in range(10):
        model, _ = fit(acceptance_cohort, parity, ACCEPTANCE_GAMMA, SgdConfig(steps=100_000, seed=seed))
        worst.append(np.max(residual_bias(acceptance_cohort, decide_cohort(acceptance_cohort, model), model)))
    assert max(worst) <= 2e-2
    assert np.mean(worst) <= 1e-2
