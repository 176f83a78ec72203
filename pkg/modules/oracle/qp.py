"""
Exact solver for the regularized fair post-processing problem.

Per group the problem

    min_{0 <= q <= 1}  sum_i p_i ((gamma/2) q_i^2 - h_i q_i)
    s.t.               sum_i p_i w_i q_i = c

has a one-dimensional dual. For a fixed multiplier mu the inner
minimizer is q_i(mu) = clip((h_i - mu w_i) / gamma, 0, 1), and the
constraint residual g(mu) = sum_i p_i w_i q_i(mu) - c is non-increasing
in mu, so the optimal mu is found by bisection.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from config.settings import (
    ORACLE_GRID_POINTS,
    ORACLE_MAX_ITER,
    ORACLE_RESIDUAL_TOL,
    ORACLE_WIDTH_TOL,
)
from core.errors import InfeasibleError, InvalidParameterError, NumericalError
from core.types import Cohort, Criterion, FitInfo, ThresholdModel, tau_values
from modules.decision.rule import randomized_rule
from modules.optimizer.sgd import build_context

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupDual:
    """Bisection result for one group"""
    mu: float
    residual: float
    iterations: int
    degenerate: bool = False
    saturated: bool = False


def _inner_q(h: np.ndarray, w: np.ndarray, mu, gamma: float) -> np.ndarray:
    return np.clip((h - np.multiply.outer(np.atleast_1d(mu), w)) / gamma, 0.0, 1.0)


def _residuals(h, w, p, c, mu, gamma) -> np.ndarray:
    return _inner_q(h, w, mu, gamma) @ (p * w) - c


def solve_group_dual(
    h: np.ndarray,
    w: np.ndarray,
    p: np.ndarray,
    c: float,
    gamma: float,
    bound: Optional[float] = None,
    group: Optional[int] = None,
) -> GroupDual:
    """
    Finds the optimal multiplier of one group.

    Args:
        h: linear gains (scores f(x), or 2 eta - 1 on a discrete instance)
        w: constraint weights
        p: non-negative masses
        c: constraint target
        gamma: regularization, > 0
        bound: search only in [-bound, bound]; None searches wide enough
            to saturate every q_i, which always contains the exact root
        group: group index used in error messages

    Raises:
        InfeasibleError: if no q in [0, 1]^n meets the constraint
        NumericalError: if the residual is found not to be monotone
    """
    if not (gamma > 0.0):
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    h = np.asarray(h, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    scale = float(np.sum(p * np.abs(w)))

    active = (w != 0.0) & (p > 0.0)
    if not np.any(active):
        if abs(c) > ORACLE_RESIDUAL_TOL:
            raise InfeasibleError(f"constraint 0 = {c} cannot be met", group=group)
        return GroupDual(mu=0.0, residual=0.0, iterations=0, degenerate=True)

    # beyond +-wide every q_i sits at 0 or 1, so g takes its extreme values there
    wide = (float(np.max(np.abs(h[active]))) + gamma) / float(np.min(np.abs(w[active]))) + 1.0
    g_low, g_high = _residuals(h, w, p, c, np.array([-wide, wide]), gamma)
    if g_low < -ORACLE_RESIDUAL_TOL or g_high > ORACLE_RESIDUAL_TOL:
        raise InfeasibleError(
            f"target {c:.6g} outside the achievable range "
            f"[{g_high + c:.6g}, {g_low + c:.6g}]",
            group=group,
        )

    lo, hi = (-wide, wide) if bound is None else (-float(bound), float(bound))

    grid = np.linspace(lo, hi, ORACLE_GRID_POINTS)
    values = _residuals(h, w, p, c, grid, gamma)
    if np.any(np.diff(values) > 1e-9 * (1.0 + scale)):
        raise NumericalError(f"dual residual is not monotone in group {group}")

    if values[0] < 0.0:
        logger.warning(f"Group {group}: dual root lies below {lo:.6g}, using the box edge")
        return GroupDual(mu=lo, residual=float(values[0]), iterations=0, saturated=True)
    if values[-1] > 0.0:
        logger.warning(f"Group {group}: dual root lies above {hi:.6g}, using the box edge")
        return GroupDual(mu=hi, residual=float(values[-1]), iterations=0, saturated=True)

    mid, value, iterations = lo, float(values[0]), 0
    for iterations in range(1, ORACLE_MAX_ITER + 1):
        mid = 0.5 * (lo + hi)
        value = float(_residuals(h, w, p, c, mid, gamma)[0])
        if abs(value) <= ORACLE_RESIDUAL_TOL:
            break
        if value > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= ORACLE_WIDTH_TOL:
            break

    return GroupDual(mu=mid, residual=value, iterations=iterations)


@dataclass(frozen=True)
class OracleSolution:
    """
    Primal-dual pair of the regularized problem. Unpacks as (mu_star, q_star).
    """
    mu_star: np.ndarray
    q_star: np.ndarray
    degenerate: Tuple[bool, ...]
    saturated: Tuple[bool, ...]
    residuals: Tuple[float, ...]
    rho: Tuple[float, ...]

    def __iter__(self) -> Iterator[np.ndarray]:
        yield self.mu_star
        yield self.q_star


def qp_oracle(
    cohort: Cohort,
    criterion: Criterion,
    gamma: float,
    box: bool = True,
) -> OracleSolution:
    """
    Solves the constrained problem on a cohort group by group.

    Args:
        cohort: examples
        criterion: conditional parity or predictive equality (resolved)
        gamma: regularization, > 0
        box: restrict mu to [-(1 + gamma), 1 + gamma], the domain SGD
            projects onto. With box=False the exact root is returned.
    """
    if not (gamma > 0.0):
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    context = build_context(cohort, criterion, gamma)
    taus = tau_values(cohort, criterion, context.rho)
    sizes = cohort.group_sizes()
    bound = 1.0 + gamma if box else None

    mu = np.zeros(cohort.group_count)
    degenerate, saturated, residuals = [], [], []
    for k in range(cohort.group_count):
        mask = cohort.group_mask(k)
        if sizes[k] == 0:
            degenerate.append(True)
            saturated.append(False)
            residuals.append(0.0)
            continue
        target = 0.0 if criterion.is_parity else criterion.b * sizes[k]
        dual = solve_group_dual(
            h=cohort.scores[mask],
            w=taus[mask],
            p=np.ones(int(sizes[k])),
            c=target,
            gamma=gamma,
            bound=bound,
            group=k,
        )
        mu[k] = dual.mu
        degenerate.append(dual.degenerate)
        saturated.append(dual.saturated)
        residuals.append(dual.residual)

    q = randomized_rule(cohort.scores, mu[cohort.group_ids] * taus, gamma)
    return OracleSolution(
        mu_star=mu,
        q_star=q,
        degenerate=tuple(degenerate),
        saturated=tuple(saturated),
        residuals=tuple(residuals),
        rho=context.rho,
    )


def fit_exact(cohort: Cohort, criterion: Criterion, gamma: float) -> ThresholdModel:
    """ThresholdModel from the box-restricted oracle solution"""
    solution = qp_oracle(cohort, criterion, gamma, box=True)
    return ThresholdModel(
        mu=tuple(solution.mu_star),
        rho=solution.rho,
        gamma=gamma,
        criterion=criterion,
        group_labels=cohort.group_labels,
        degenerate=solution.degenerate,
        fit_info=FitInfo(n=len(cohort), method="oracle"),
    )
