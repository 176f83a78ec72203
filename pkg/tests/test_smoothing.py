import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.errors import InvalidParameterError
from core.types import Criterion
from modules.objective.smoothing import (
    SmoothedObjectiveParams,
    full_gradient,
    objective_value,
    stochastic_gradient,
    xi,
    xi_prime,
)
from modules.optimizer.sgd import build_context
from tests.conftest import make_cohort

reals = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
gammas = st.floats(min_value=1e-3, max_value=1.0)


def test_xi_branches():
    assert xi(1.0, 0.5, 0.1) == 0.0
    assert xi(0.5, 0.5, 0.1) == 0.0
    assert xi(0.45, 0.5, 0.1) == pytest.approx(0.05 ** 2 / 0.2)
    assert xi(0.0, 0.5, 0.1) == pytest.approx(0.5 - 0.05)


def test_xi_is_continuous_at_branch_points():
    gamma, theta = 0.2, 0.3
    for z in (theta, theta - gamma):
        left = xi(z - 1e-12, theta, gamma)
        right = xi(z + 1e-12, theta, gamma)
        assert left == pytest.approx(right, abs=1e-10)


def test_xi_rejects_non_positive_gamma():
    with pytest.raises(InvalidParameterError):
        xi(0.0, 0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        xi_prime(0.0, 0.0, -1.0)


def test_xi_convex_on_random_triples():
    rng = np.random.default_rng(1)
    n = 100_000
    a, b = rng.uniform(-3, 3, n), rng.uniform(-3, 3, n)
    lam = rng.random(n)
    theta = rng.uniform(-1, 1, n)
    for gamma in (1e-3, 0.05, 1.0):
        lhs = xi(lam * a + (1 - lam) * b, theta, gamma)
        rhs = lam * xi(a, theta, gamma) + (1 - lam) * xi(b, theta, gamma)
        assert np.all(lhs <= rhs + 1e-12)


def test_xi_close_to_relu():
    rng = np.random.default_rng(2)
    z, theta = rng.uniform(-3, 3, 100_000), rng.uniform(-1, 1, 100_000)
    for gamma in (1e-3, 0.01, 0.1, 1.0):
        relu = np.maximum(0.0, theta - z)
        value = xi(z, theta, gamma)
        assert np.all(np.abs(value - relu) <= gamma / 2 + 1e-15)
        assert np.all(value <= relu)


def test_xi_prime_bounded():
    rng = np.random.default_rng(3)
    z, theta = rng.uniform(-5, 5, 100_000), rng.uniform(-1, 1, 100_000)
    derivative = xi_prime(z, theta, 0.01)
    assert np.all(derivative <= 0.0)
    assert np.all(derivative >= -1.0)


@given(z=reals, theta=reals, gamma=gammas)
def test_xi_prime_matches_finite_difference(z, theta, gamma):
    h = 1e-7
    if min(abs(z - theta), abs(z - (theta - gamma))) < 1e-4:
        return
    numeric = (xi(z + h, theta, gamma) - xi(z - h, theta, gamma)) / (2 * h)
    assert abs(numeric - xi_prime(z, theta, gamma)) <= 1e-6


@given(z=reals, theta=reals, gamma=gammas)
def test_xi_scalar_matches_array(z, theta, gamma):
    assert xi(np.array([z]), np.array([theta]), gamma)[0] == xi(z, theta, gamma)


def _setup(criterion=None, gamma=0.05):
    cohort = make_cohort(n=300, group_count=3, seed=4)
    criterion = criterion or Criterion.parity()
    context = build_context(cohort, criterion, gamma)
    params = SmoothedObjectiveParams(gamma=gamma, b=criterion.b)
    return cohort, context, params


def test_objective_at_zero_is_mean_xi_of_zero():
    cohort, context, params = _setup()
    expected = np.mean(xi(np.zeros(len(cohort)), cohort.scores, params.gamma))
    assert objective_value([0.0, 0.0, 0.0], cohort, params, context) == pytest.approx(expected)


def test_sum_reduction_scales_mean():
    cohort, context, params = _setup()
    mu = [0.3, -0.2, 0.1]
    mean = objective_value(mu, cohort, params, context)
    total = objective_value(mu, cohort, params, context, reduction="sum")
    assert total == pytest.approx(mean * len(cohort))
    with pytest.raises(InvalidParameterError):
        objective_value(mu, cohort, params, context, reduction="max")


@pytest.mark.parametrize("criterion", [Criterion.parity(), Criterion.equality(0.4)])
def test_full_gradient_matches_finite_difference(criterion):
    cohort, context, params = _setup(criterion)
    mu = np.array([0.21, -0.37, 0.05])
    gradient = full_gradient(mu, cohort, params, context)
    h = 1e-6
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        numeric = (
            objective_value(mu + step, cohort, params, context) - objective_value(mu - step, cohort, params, context)
        ) / (2 * h)
        assert numeric == pytest.approx(gradient[k], abs=1e-5)


def test_stochastic_gradients_average_to_full_gradient():
    cohort, context, params = _setup(Criterion.equality(0.3))
    mu = [0.1, 0.2, -0.3]
    total = np.zeros(3)
    for example in cohort:
        k, g = stochastic_gradient(example, mu, params, context)
        assert abs(g) <= 1.0 + params.b + 1e-12
        total[k] += g
    np.testing.assert_allclose(total / len(cohort), full_gradient(mu, cohort, params, context), atol=1e-12)


def test_objective_rejects_wrong_mu_length():
    cohort, context, params = _setup()
    with pytest.raises(InvalidParameterError):
        objective_value([0.0, 0.0], cohort, params, context)
