"""
Projected stochastic gradient descent on the smoothed dual objective.

Each step samples one example, moves the dual variable of its group
against the example's gradient and projects back onto
[-(1 + gamma), 1 + gamma]. The returned model holds the average of all
iterates mu^(1..T), which is the point the convergence guarantee is about.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import LEARNING_RATE_PRESETS, TRACE_POINTS
from core.errors import InvalidParameterError
from core.types import (
    Cohort,
    Criterion,
    FitInfo,
    ThresholdModel,
    compute_rho,
    degenerate_groups,
    tau_values,
)
from modules.objective.smoothing import (
    SmoothedObjectiveParams,
    objective_value,
    scalar_gradient,
)
from utils.seeding import make_generator

logger = logging.getLogger(__name__)

SAMPLING_MODES = ("uniform", "shuffled")


@dataclass(frozen=True)
class SgdConfig:
    """
    Args:
        steps: number of SGD updates T
        learning_rate: a positive number, "auto" for ((1+gamma)/(1+b)) sqrt(K/T),
            or a preset name from LEARNING_RATE_PRESETS
        seed: generator seed
        projection_bound: half-width of the projection box, at most 1 + gamma
            (None means exactly 1 + gamma)
        trace_every: objective is recorded every this many steps
            (None spreads TRACE_POINTS records over the run)
        sampling: "uniform" draws with replacement, "shuffled" walks epochs
            of random permutations
    """
    steps: int
    learning_rate: Union[float, str] = "auto"
    seed: int = 0
    projection_bound: Optional[float] = None
    trace_every: Optional[int] = None
    sampling: str = "uniform"

    def __post_init__(self):
        if int(self.steps) <= 0:
            raise InvalidParameterError(f"number of steps must be positive, got {self.steps}")
        if isinstance(self.learning_rate, str):
            if self.learning_rate != "auto" and self.learning_rate not in LEARNING_RATE_PRESETS:
                raise InvalidParameterError(f"unknown learning rate preset '{self.learning_rate}'")
        elif not (self.learning_rate > 0.0):
            raise InvalidParameterError(f"learning rate must be positive, got {self.learning_rate}")
        if self.trace_every is not None and self.trace_every <= 0:
            raise InvalidParameterError("trace_every must be positive")
        if self.sampling not in SAMPLING_MODES:
            raise InvalidParameterError(f"unknown sampling mode '{self.sampling}'")

    @property
    def resolved_trace_every(self) -> int:
        if self.trace_every is not None:
            return self.trace_every
        return max(1, self.steps // TRACE_POINTS)


def resolve_learning_rate(
    learning_rate: Union[float, str],
    gamma: float,
    b: float,
    group_count: int,
    steps: int,
) -> float:
    """Turns "auto" or a preset name into a number"""
    scale = math.sqrt(group_count / steps)
    if learning_rate == "auto":
        return ((1.0 + gamma) / (1.0 + b)) * scale
    if isinstance(learning_rate, str):
        return LEARNING_RATE_PRESETS[learning_rate] * scale
    return float(learning_rate)


def suboptimality_bound(alpha: float, group_count: int, steps: int, gamma: float, b: float = 0.0) -> float:
    """Expected gap E[F(mu_bar)] - F(mu*) for a fixed step size alpha"""
    return (1.0 + b) ** 2 * alpha / 2.0 + (1.0 + gamma) ** 2 * group_count / (2.0 * steps * alpha)


def tuned_suboptimality_bound(group_count: int, steps: int, gamma: float, b: float = 0.0) -> float:
    """The same gap at the "auto" step size: 2 (1+gamma)/(1+b) sqrt(K/T)"""
    return 2.0 * (1.0 + gamma) / (1.0 + b) * math.sqrt(group_count / steps)


@dataclass(frozen=True)
class TracePoint:
    step: int
    epoch: float
    objective: float
    mu: Tuple[float, ...]


@dataclass(frozen=True)
class TrainTrace:
    """Objective samples along the run plus the averaged solution"""
    points: Tuple[TracePoint, ...]
    mu_bar: Tuple[float, ...]
    update_counts: Tuple[int, ...]
    learning_rate: float
    steps: int
    final_objective: float = field(default=float("nan"))

    def to_frame(self) -> pd.DataFrame:
        """One row per trace point: step, epoch, objective, mu_0..mu_{K-1}"""
        rows = []
        for point in self.points:
            row = {"step": point.step, "epoch": point.epoch, "objective": point.objective}
            for k, m in enumerate(point.mu):
                row[f"mu_{k}"] = m
            rows.append(row)
        return pd.DataFrame(rows)

    def smoothed_objective(self, windows: int = 10) -> np.ndarray:
        """Mean traced objective over `windows` consecutive blocks of the run"""
        values = np.array([p.objective for p in self.points if p.step > 0])
        if values.size < windows:
            return values
        return np.array([chunk.mean() for chunk in np.array_split(values, windows)])


def _group_rates(cohort: Cohort, criterion: Criterion) -> np.ndarray:
    if criterion.is_parity:
        return compute_rho(cohort)
    if cohort.sensitive is None or np.any(cohort.group_sizes() == 0):
        return np.zeros(cohort.group_count)
    return compute_rho(cohort)


def build_context(cohort: Cohort, criterion: Criterion, gamma: float) -> ThresholdModel:
    """Zero model carrying rho and the criterion of a cohort"""
    if not criterion.resolved:
        raise InvalidParameterError("predictive equality target rate is unresolved")
    rho = _group_rates(cohort, criterion)
    return ThresholdModel(
        mu=tuple(0.0 for _ in range(cohort.group_count)),
        rho=tuple(rho),
        gamma=gamma,
        criterion=criterion,
        group_labels=cohort.group_labels,
    )


def _sample_indices(rng: np.random.Generator, n: int, steps: int, sampling: str) -> np.ndarray:
    if sampling == "uniform":
        return rng.integers(0, n, size=steps)
    epochs = -(-steps // n)
    return np.concatenate([rng.permutation(n) for _ in range(epochs)])[:steps]


def fit(
    cohort: Cohort,
    criterion: Criterion,
    gamma: float,
    config: SgdConfig,
) -> Tuple[ThresholdModel, TrainTrace]:
    """
    Learns the dual variables by projected SGD starting from mu = 0.

    Deterministic given the cohort order, the seed and the config.

    Returns:
        model holding the averaged iterate, and the training trace
    """
    context = build_context(cohort, criterion, gamma)
    params = SmoothedObjectiveParams(gamma=gamma, b=criterion.b)

    n = len(cohort)
    steps = int(config.steps)
    group_count = cohort.group_count
    alpha = resolve_learning_rate(config.learning_rate, gamma, params.b, group_count, steps)

    bound = 1.0 + gamma if config.projection_bound is None else float(config.projection_bound)
    if not (0.0 < bound <= 1.0 + gamma):
        raise InvalidParameterError(f"projection bound must lie in (0, {1.0 + gamma}]")

    for k, flag in enumerate(context.degenerate):
        if flag:
            logger.warning(f"Group {cohort.group_labels[k]} is degenerate (rho = {context.rho[k]}), mu fixed at 0")

    logger.info(
        f"SGD fit: N={n}, K={group_count}, T={steps}, alpha={alpha:.6g}, "
        f"gamma={gamma}, criterion={criterion}, sampling={config.sampling}"
    )

    rng = make_generator(config.seed)
    indices = _sample_indices(rng, n, steps, config.sampling).tolist()
    scores = cohort.scores.tolist()
    taus = tau_values(cohort, criterion, context.rho).tolist()
    groups = cohort.group_ids.tolist()
    b = params.b

    mu = [0.0] * group_count
    # running sum of mu_k^(t) over t, updated lazily per group
    acc = [0.0] * group_count
    last = [0] * group_count
    counts = [0] * group_count

    trace_every = config.resolved_trace_every
    points = [TracePoint(0, 0.0, objective_value(mu, cohort, params, context), tuple(mu))]

    for t, i in enumerate(indices, start=1):
        k = groups[i]
        g = scalar_gradient(scores[i], taus[i], mu[k], b, gamma)
        acc[k] += mu[k] * (t - 1 - last[k])
        step = mu[k] - alpha * g
        mu[k] = bound if step > bound else (-bound if step < -bound else step)
        acc[k] += mu[k]
        last[k] = t
        counts[k] += 1

        if t % trace_every == 0:
            points.append(
                TracePoint(t, t / n, objective_value(mu, cohort, params, context), tuple(mu))
            )

    mu_bar = []
    for k in range(group_count):
        total = acc[k] + mu[k] * (steps - last[k])
        mu_bar.append(min(max(total / steps, -bound), bound))

    model = ThresholdModel(
        mu=tuple(mu_bar),
        rho=context.rho,
        gamma=gamma,
        criterion=criterion,
        group_labels=cohort.group_labels,
        degenerate=context.degenerate,
        fit_info=FitInfo(n=n, steps=steps, learning_rate=alpha, seed=config.seed, method="sgd"),
    )
    final = objective_value(model.mu, cohort, params, context)
    logger.info(f"SGD fit finished: F(mu_bar)={final:.8f}, mu_bar={[round(m, 6) for m in mu_bar]}")

    trace = TrainTrace(
        points=tuple(points),
        mu_bar=tuple(mu_bar),
        update_counts=tuple(counts),
        learning_rate=alpha,
        steps=steps,
        final_objective=final,
    )
    return model, trace
