"""
Smoothed dual objective of the post-processing problem.

The q_i variables of the regularized problem are eliminated in closed
form, leaving a convex C^1 function of the K dual variables:

    F(mu) = mean_i [ b * mu(x_i) + xi_gamma(tau(x_i) * mu(x_i); f(x_i)) ]

where xi_gamma is the smoothed ReLU max(0, theta - z).
"""
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from core.errors import InvalidParameterError
from core.types import Cohort, ScoredExample, ThresholdModel, tau, tau_values

ArrayLike = Union[float, np.ndarray]

REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class SmoothedObjectiveParams:
    """
    Args:
        gamma: smoothing width, strictly positive
        b: linear coefficient (0 for parity, target rate for predictive equality)
    """
    gamma: float
    b: float = 0.0

    def __post_init__(self):
        _check_gamma(self.gamma)

    @classmethod
    def for_model(cls, model: ThresholdModel) -> "SmoothedObjectiveParams":
        return cls(gamma=model.gamma, b=model.criterion.b)


def _check_gamma(gamma: float) -> None:
    if not (gamma > 0.0) or not np.isfinite(gamma):
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")


def xi(z: ArrayLike, theta: ArrayLike, gamma: float) -> ArrayLike:
    """
    Smoothed ReLU of (theta - z).

    0 if z >= theta, (theta - z)^2 / (2 gamma) if theta - gamma < z < theta,
    theta - z - gamma / 2 if z <= theta - gamma.
    """
    _check_gamma(gamma)
    z = np.asarray(z, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    gap = theta - z
    value = np.where(
        z >= theta,
        0.0,
        np.where(z <= theta - gamma, gap - 0.5 * gamma, gap * gap / (2.0 * gamma)),
    )
    return float(value) if value.ndim == 0 else value


def xi_prime(z: ArrayLike, theta: ArrayLike, gamma: float) -> ArrayLike:
    """Derivative of `xi` with respect to z, always in [-1, 0]"""
    _check_gamma(gamma)
    z = np.asarray(z, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    value = np.where(
        z >= theta,
        0.0,
        np.where(z <= theta - gamma, -1.0, -(theta - z) / gamma),
    )
    return float(value) if value.ndim == 0 else value


def xi_prime_scalar(z: float, theta: float, gamma: float) -> float:
    # plain-float twin of xi_prime for the SGD inner loop
    if z >= theta:
        return 0.0
    if z <= theta - gamma:
        return -1.0
    return -(theta - z) / gamma


def scalar_gradient(score: float, tau_i: float, mu_k: float, b: float, gamma: float) -> float:
    """b + tau * xi'(tau * mu_k; f) for a single example"""
    return b + tau_i * xi_prime_scalar(tau_i * mu_k, score, gamma)


def _reduce(terms: np.ndarray, reduction: str) -> float:
    if reduction not in REDUCTIONS:
        raise InvalidParameterError(f"unknown reduction '{reduction}'")
    # np.sum reduces pairwise, keeping the error at O(eps log N)
    total = float(np.sum(terms))
    return total / terms.shape[0] if reduction == "mean" else total


def _mu_per_example(mu: Sequence[float], cohort: Cohort) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (cohort.group_count,):
        raise InvalidParameterError(f"expected {cohort.group_count} dual variables, got {mu.shape}")
    return mu[cohort.group_ids]


def objective_value(
    mu: Sequence[float],
    cohort: Cohort,
    params: SmoothedObjectiveParams,
    model_context: ThresholdModel,
    reduction: str = "mean",
) -> float:
    """
    Evaluates F(mu) on a cohort.

    Args:
        mu: K dual variables
        cohort: examples the objective is summed over
        params: gamma and b
        model_context: supplies rho and the criterion (its own mu is ignored)
        reduction: "mean" (the scale of the SGD guarantee) or "sum"

    The default is the mean over examples. The sum form F = sum_i [...]
    is `reduction="sum"` and equals N times the mean; the suboptimality
    bound and the "auto" learning rate are stated for the mean.
    """
    taus = tau_values(cohort, model_context.criterion, model_context.rho)
    mu_x = _mu_per_example(mu, cohort)
    terms = params.b * mu_x + xi(taus * mu_x, cohort.scores, params.gamma)
    return _reduce(terms, reduction)


def stochastic_gradient(
    example: ScoredExample,
    mu: Sequence[float],
    params: SmoothedObjectiveParams,
    model_context: ThresholdModel,
) -> Tuple[int, float]:
    """
    Gradient of one example's term with respect to its group's mu.

    Returns:
        (group id, gradient) with |gradient| <= 1 + |b|
    """
    k = example.group_id
    t = tau(example, model_context)
    return k, scalar_gradient(example.score, t, float(mu[k]), params.b, params.gamma)


def full_gradient(
    mu: Sequence[float],
    cohort: Cohort,
    params: SmoothedObjectiveParams,
    model_context: ThresholdModel,
) -> np.ndarray:
    """Exact gradient of the mean-reduced F with respect to every mu_k"""
    taus = tau_values(cohort, model_context.criterion, model_context.rho)
    mu_x = _mu_per_example(mu, cohort)
    per_example = params.b + taus * xi_prime(taus * mu_x, cohort.scores, params.gamma)
    sums = np.bincount(cohort.group_ids, weights=per_example, minlength=cohort.group_count)
    return sums / len(cohort)


def primal_objective(q: np.ndarray, cohort: Cohort, gamma: float, reduction: str = "mean") -> float:
    """Objective of the regularized problem, sum of (gamma/2) q^2 - f q"""
    _check_gamma(gamma)
    q = np.asarray(q, dtype=np.float64)
    return _reduce(0.5 * gamma * q * q - cohort.scores * q, reduction)


def unconstrained_objective(
    q: np.ndarray,
    mu: Sequence[float],
    cohort: Cohort,
    params: SmoothedObjectiveParams,
    model_context: ThresholdModel,
    reduction: str = "mean",
) -> float:
    """
    Joint objective in (q, mu) with the hinge kept explicit:
    (gamma/2) q^2 + b mu + [f - gamma q - tau mu]^+
    """
    q = np.asarray(q, dtype=np.float64)
    taus = tau_values(cohort, model_context.criterion, model_context.rho)
    mu_x = _mu_per_example(mu, cohort)
    hinge = np.maximum(0.0, cohort.scores - params.gamma * q - taus * mu_x)
    return _reduce(0.5 * params.gamma * q * q + params.b * mu_x + hinge, reduction)
