"""
Accuracy-fairness tradeoff when groups are not fixed in advance.

For a deterministic predictor f and a sensitive propensity gamma(x), some
binary partition of the instance space always shows an average absolute
conditional covariance of at least

    1/2 * E|gamma(x) - mean(gamma)| * min(E f, 1 - E f)

`impossibility_bound` returns that value together with an explicit
partition attaining it.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.errors import DataError, InvalidParameterError

MAX_EXHAUSTIVE_POINTS = 16


@dataclass(frozen=True, eq=False)
class ImpossibilityInput:
    """
    Args:
        mass: p(x), summing to 1
        gamma_x: p(1_S = 1 | x)
        predictions: f(x) in {0, 1}
    """
    mass: np.ndarray
    gamma_x: np.ndarray
    predictions: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        gamma_x = np.asarray(self.gamma_x, dtype=np.float64)
        predictions = np.asarray(self.predictions)
        if mass.ndim != 1 or mass.size == 0:
            raise DataError("instance needs at least one point")
        if gamma_x.shape != mass.shape or predictions.shape != mass.shape:
            raise DataError("instance columns differ in length")
        if np.any(mass < 0.0) or abs(float(mass.sum()) - 1.0) > 1e-9:
            raise DataError("masses must be non-negative and sum to 1")
        if np.any(gamma_x < 0.0) or np.any(gamma_x > 1.0):
            raise DataError("propensities must lie in [0, 1]")
        if np.any((predictions != 0) & (predictions != 1)):
            raise DataError("predictions must be binary")
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "gamma_x", gamma_x)
        object.__setattr__(self, "predictions", predictions.astype(np.float64))

    def __len__(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class ImpossibilityResult:
    lower_bound: float
    witness_lhs: float
    witness_partition: np.ndarray


def _part_covariance(mass: np.ndarray, f: np.ndarray, g: np.ndarray, part: np.ndarray):
    # mass-weighted covariance of f and g on each part (rows of `part`), scaled by the part mass
    weights = part * mass
    total = weights.sum(axis=-1)
    safe = np.where(total > 0.0, total, 1.0)
    mean_f = (weights @ f) / safe
    mean_g = (weights @ g) / safe
    mean_fg = (weights @ (f * g)) / safe
    covariance = np.where(total > 0.0, mean_fg - mean_f * mean_g, 0.0)
    return total * np.abs(covariance)


def partition_covariance(instance: ImpossibilityInput, partition: np.ndarray) -> float:
    """E_pi |C(f, gamma; pi)| for a binary partition"""
    partition = np.asarray(partition, dtype=np.float64)
    if partition.shape != instance.mass.shape:
        raise DataError("partition and instance differ in length")
    parts = np.stack([partition, 1.0 - partition])
    values = _part_covariance(instance.mass, instance.predictions, instance.gamma_x, parts)
    return float(values.sum())


def impossibility_bound(instance: ImpossibilityInput) -> ImpossibilityResult:
    mass, gamma_x, f = instance.mass, instance.gamma_x, instance.predictions
    gamma_bar = float(mass @ gamma_x)
    mean_f = float(mass @ f)
    spread = float(mass @ np.abs(gamma_x - gamma_bar))
    lower_bound = 0.5 * spread * min(mean_f, 1.0 - mean_f)

    # ties gamma(x) == gamma_bar go with the f(x) = 0 side
    above = gamma_x > gamma_bar
    witness = (above & (f == 1.0)) | (~above & (f == 0.0))
    return ImpossibilityResult(
        lower_bound=lower_bound,
        witness_lhs=partition_covariance(instance, witness),
        witness_partition=witness,
    )


def impossibility_supremum(instance: ImpossibilityInput) -> Tuple[float, np.ndarray]:
    """
    Exhaustive maximum of E_pi |C(f, gamma; pi)| over all binary partitions.

    Returns:
        (maximum, a maximizing partition)
    """
    n = len(instance)
    if n > MAX_EXHAUSTIVE_POINTS:
        raise InvalidParameterError(f"exhaustive search supports at most {MAX_EXHAUSTIVE_POINTS} points")
    # a partition and its complement give the same value, fix the last point
    codes = np.arange(2 ** (n - 1))
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(np.float64)
    first = _part_covariance(instance.mass, instance.predictions, instance.gamma_x, bits)
    second = _part_covariance(instance.mass, instance.predictions, instance.gamma_x, 1.0 - bits)
    values = first + second
    best = int(np.argmax(values))
    return float(values[best]), bits[best].astype(bool)


def consistency_bound(n: int, group_count: int, gamma: float, delta: float = 0.05) -> float:
    """
    High-probability excess-risk bound of the plug-in rule learned from n
    examples over K groups:

        2 gamma + 8 (2 + 1/gamma) / n^(1/3) + 4 sqrt((3K + 2 log(2/delta)) / n)
    """
    if n <= 0 or group_count <= 0:
        raise InvalidParameterError("n and the group count must be positive")
    if not (gamma > 0.0):
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    if not (0.0 < delta < 1.0):
        raise InvalidParameterError(f"delta must lie in (0, 1), got {delta}")
    return (
        2.0 * gamma
        + 8.0 * (2.0 + 1.0 / gamma) / n ** (1.0 / 3.0)
        + 4.0 * math.sqrt((3.0 * group_count + 2.0 * math.log(2.0 / delta)) / n)
    )
