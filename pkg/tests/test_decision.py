import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.errors import DataError
from core.types import Cohort, Criterion, ScoredExample, ThresholdModel
from modules.decision.rule import (
    DecisionProbability,
    apply_model,
    decide,
    decide_cohort,
    randomized_rule,
    sample,
    sample_labels,
    threshold,
    thresholds,
)

PARITY_MODEL = ThresholdModel(mu=(0.5, -0.2), rho=(0.25, 0.5), gamma=0.1, criterion=Criterion.parity())
EQUALITY_MODEL = ThresholdModel(mu=(0.3, -0.4), rho=(0.0, 0.0), gamma=0.2, criterion=Criterion.equality(0.4))


def test_ramp_branches_and_ties():
    q = randomized_rule([-0.5, 0.0, 0.05, 0.1, 0.5], [0.0] * 5, 0.1)
    np.testing.assert_allclose(q, [0.0, 0.0, 0.5, 1.0, 1.0])


@given(
    score=st.floats(-1.0, 1.0),
    theta=st.floats(-1.2, 1.2),
    gamma=st.floats(1e-4, 1.0),
)
def test_ramp_stays_in_unit_interval(score, theta, gamma):
    q = float(randomized_rule(score, theta, gamma))
    assert 0.0 <= q <= 1.0
    if score <= theta:
        assert q == 0.0
    if score >= theta + gamma:
        assert q == 1.0


def test_parity_threshold_uses_sensitive_offset():
    example = ScoredExample(score=0.4, group_id=0, sensitive=1)
    assert threshold(example, PARITY_MODEL) == pytest.approx(0.375)
    assert float(decide(example, PARITY_MODEL)) == pytest.approx(0.25)

    other = ScoredExample(score=0.4, group_id=0, sensitive=0)
    assert threshold(other, PARITY_MODEL) == pytest.approx(-0.125)
    assert decide(other, PARITY_MODEL).q == 1.0


def test_equality_threshold_is_group_multiplier():
    example = ScoredExample(score=0.4, group_id=0)
    assert threshold(example, EQUALITY_MODEL) == pytest.approx(0.3)
    assert decide(example, EQUALITY_MODEL).q == pytest.approx(0.5)
    assert decide(ScoredExample(score=-0.5, group_id=1), EQUALITY_MODEL).q == pytest.approx(0.0)


def test_decide_rejects_unknown_group():
    with pytest.raises(DataError):
        decide(ScoredExample(score=0.1, group_id=2, sensitive=0), PARITY_MODEL)


def test_decision_probability_bounds():
    with pytest.raises(ValueError):
        DecisionProbability(1.5)
    assert float(DecisionProbability(0.25)) == 0.25


def test_cohort_decisions_match_single_decisions(cohort):
    model = ThresholdModel(mu=(0.3, -0.1, 0.6), rho=(0.3, 0.4, 0.5), gamma=0.05, criterion=Criterion.parity())
    expected = [decide(example, model).q for example in cohort]
    np.testing.assert_allclose(decide_cohort(cohort, model), expected, atol=1e-15)


def test_group_universe_mismatch():
    cohort = Cohort(scores=[0.1, 0.2, 0.3], group_ids=[0, 1, 2], group_count=3, sensitive=[1, 0, 1])
    with pytest.raises(DataError):
        thresholds(cohort, PARITY_MODEL)


def test_parity_decisions_need_sensitive_flags():
    cohort = Cohort(scores=[0.1, 0.2], group_ids=[0, 1], group_count=2)
    with pytest.raises(DataError):
        decide_cohort(cohort, PARITY_MODEL)
    assert decide_cohort(cohort, EQUALITY_MODEL).shape == (2,)


def test_sampling():
    rng = np.random.default_rng(0)
    assert sample(DecisionProbability(0.0), rng) == 0
    assert sample(DecisionProbability(1.0), rng) == 1
    draws = sample_labels(np.full(100_000, 0.3), rng)
    assert draws.dtype == np.int8
    assert abs(draws.mean() - 0.3) < 0.01


def test_apply_model_table():
    cohort = Cohort(
        scores=[0.4, 0.4, -0.9, 0.9],
        group_ids=[0, 0, 1, 1],
        group_count=2,
        sensitive=[1, 0, 1, 0],
        group_labels=("a", "b"),
    )
    model = ThresholdModel(
        mu=PARITY_MODEL.mu, rho=PARITY_MODEL.rho, gamma=0.1, criterion=Criterion.parity(), group_labels=("a", "b")
    )
    table = apply_model(cohort, model, seed=3)
    assert list(table.columns) == ["group", "score", "theta", "q", "decision"]
    assert table["group"].tolist() == ["a", "a", "b", "b"]
    np.testing.assert_allclose(table["q"], [0.25, 1.0, 0.0, 1.0])
    assert table["decision"].iloc[2] == 0 and table["decision"].iloc[3] == 1
    assert table.equals(apply_model(cohort, model, seed=3))
