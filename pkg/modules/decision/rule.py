"""
Randomized group-wise thresholding rule.

For an example in group k the rule is a ramp of width gamma starting at
the group threshold theta(x):

    q = 0                         if f(x) <= theta(x)
    q = 1                         if f(x) >= theta(x) + gamma
    q = (f(x) - theta(x)) / gamma otherwise

with theta(x) = mu_k * (1_S(x) - rho_k) under conditional parity and
theta(x) = mu_k under predictive equality.
"""
from dataclasses import dataclass

import numpy as np
import pandas as pd

from core.errors import DataError
from core.types import Cohort, ScoredExample, ThresholdModel, tau, tau_values
from utils.seeding import make_generator


@dataclass(frozen=True)
class DecisionProbability:
    """Probability of predicting the positive class"""
    q: float

    def __post_init__(self):
        if not (0.0 <= self.q <= 1.0):
            raise ValueError(f"decision probability {self.q} outside [0, 1]")

    def __float__(self) -> float:
        return self.q


def randomized_rule(scores: np.ndarray, thresholds: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized ramp; boundary ties resolve to the deterministic branches"""
    scores = np.asarray(scores, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    return np.where(
        scores <= thresholds,
        0.0,
        np.where(scores >= gamma + thresholds, 1.0, (scores - thresholds) / gamma),
    )


def threshold(example: ScoredExample, model: ThresholdModel) -> float:
    """theta(x) for a single example"""
    return model.mu[example.group_id] * tau(example, model)


def decide(example: ScoredExample, model: ThresholdModel) -> DecisionProbability:
    """Exact positive-prediction probability, never consumes randomness"""
    q = randomized_rule(example.score, threshold(example, model), model.gamma)
    return DecisionProbability(float(q))


def _check_universe(cohort: Cohort, model: ThresholdModel) -> None:
    if cohort.group_count != model.group_count:
        raise DataError(
            f"cohort has {cohort.group_count} groups but the model was fitted on {model.group_count}"
        )


def thresholds(cohort: Cohort, model: ThresholdModel) -> np.ndarray:
    """theta(x) for every example of a cohort"""
    _check_universe(cohort, model)
    taus = tau_values(cohort, model.criterion, model.rho)
    return model.mu_array[cohort.group_ids] * taus


def decide_cohort(cohort: Cohort, model: ThresholdModel) -> np.ndarray:
    """Vectorized `decide`"""
    return randomized_rule(cohort.scores, thresholds(cohort, model), model.gamma)


def sample(q: DecisionProbability, rng: np.random.Generator) -> int:
    """Draws a hard label, 1 with probability q"""
    return int(rng.random() < float(q))


def sample_labels(q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized `sample`"""
    q = np.asarray(q, dtype=np.float64)
    return (rng.random(q.shape[0]) < q).astype(np.int8)


def apply_model(cohort: Cohort, model: ThresholdModel, seed: int = 0) -> pd.DataFrame:
    """
    Decision table of a cohort: group, score, theta, q and one sampled label
    per example, in cohort order.
    """
    theta = thresholds(cohort, model)
    q = randomized_rule(cohort.scores, theta, model.gamma)
    labels = sample_labels(q, make_generator(seed))
    return pd.DataFrame(
        {
            "group": [model.group_labels[k] for k in cohort.group_ids],
            "score": cohort.scores,
            "theta": theta,
            "q": q,
            "decision": labels,
        }
    )
