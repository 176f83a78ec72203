"""
Bayes-optimal fair rules on finite instance spaces.

The population version of the regularized problem is solved with the same
per-group dual bisection as the cohort oracle, using point masses as
weights and h(x) = 2 eta(x) - 1 as gains. Letting gamma -> 0+ recovers
the unregularized optimum, a group-wise threshold on eta with possible
randomization at the threshold.
"""
import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import EXTRAPOLATION_GAMMAS
from core.errors import DataError, InfeasibleError, InvalidParameterError
from modules.oracle.qp import solve_group_dual

logger = logging.getLogger(__name__)

MAX_POINTS = 10_000
MAX_BRUTE_FORCE_GROUP = 14

# q values within this distance of 0 or 1 count as deterministic
FRACTIONAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    """
    A finite distribution over points x with

    Args:
        mass: p(x), summing to 1
        eta: Bayes regressor p(y = 1 | x)
        gamma_x: sensitive propensity p(1_S = 1 | x), 0/1 when deterministic
        group_ids: group of every point
        predictions: optional fixed 0/1 predictor f(x)
    """
    mass: np.ndarray
    eta: np.ndarray
    gamma_x: np.ndarray
    group_ids: np.ndarray
    predictions: Optional[np.ndarray] = None

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        eta = np.asarray(self.eta, dtype=np.float64)
        gamma_x = np.asarray(self.gamma_x, dtype=np.float64)
        groups = np.asarray(self.group_ids, dtype=np.int64)

        if mass.ndim != 1 or mass.size == 0:
            raise DataError("instance needs at least one point")
        if not (eta.shape == gamma_x.shape == groups.shape == mass.shape):
            raise DataError("instance columns differ in length")
        if np.any(mass < 0.0) or abs(float(mass.sum()) - 1.0) > 1e-9:
            raise DataError(f"masses must be non-negative and sum to 1, got {mass.sum()}")
        for name, values in (("eta", eta), ("gamma_x", gamma_x)):
            if np.any(values < 0.0) or np.any(values > 1.0):
                raise DataError(f"{name} must lie in [0, 1]")
        if np.any(groups < 0):
            raise DataError("group ids must be non-negative")

        for name, values in (("mass", mass), ("eta", eta), ("gamma_x", gamma_x), ("group_ids", groups)):
            values.setflags(write=False)
            object.__setattr__(self, name, values)

        if self.predictions is not None:
            predictions = np.asarray(self.predictions, dtype=np.int8)
            if predictions.shape != mass.shape or np.any((predictions != 0) & (predictions != 1)):
                raise DataError("predictions must be one 0/1 value per point")
            predictions.setflags(write=False)
            object.__setattr__(self, "predictions", predictions)

    def __len__(self) -> int:
        return self.mass.shape[0]

    @property
    def group_count(self) -> int:
        return int(self.group_ids.max()) + 1

    @property
    def gains(self) -> np.ndarray:
        """h(x) = 2 eta(x) - 1"""
        return 2.0 * self.eta - 1.0

    def group_mass(self) -> np.ndarray:
        return np.bincount(self.group_ids, weights=self.mass, minlength=self.group_count)


def parse_instance(text: str) -> DiscreteInstance:
    """
    Reads the plain-text instance format, one point per line:

        mass eta gamma_x group [prediction]

    Blank lines and lines starting with '#' are skipped.
    """
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (4, 5):
            raise DataError(f"expected 4 or 5 fields (mass eta gamma_x group [prediction]), got {len(parts)}", row=number)
        try:
            mass, eta, gamma_x = (float(v) for v in parts[:3])
            group = int(parts[3])
            prediction = int(parts[4]) if len(parts) == 5 else None
        except ValueError as e:
            raise DataError(f"non-numeric field: {e}", row=number) from e
        rows.append((mass, eta, gamma_x, group, prediction))
    if not rows:
        raise DataError("instance file has no points")
    if len({row[4] is None for row in rows}) > 1:
        raise DataError("either every point or no point carries a prediction")
    mass, eta, gamma_x, groups, predictions = zip(*rows)
    return DiscreteInstance(
        np.array(mass),
        np.array(eta),
        np.array(gamma_x),
        np.array(groups),
        None if predictions[0] is None else np.array(predictions),
    )


def load_instance(path: Union[str, Path]) -> DiscreteInstance:
    path = Path(path)
    if not path.exists():
        raise DataError(f"instance file not found: {path}")
    return parse_instance(path.read_text())


@dataclass(frozen=True, eq=False)
class AffineConstraint:
    """
    Group-wise affine constraints E[w(x) f(x) | x in X_k] = b_k.

    Args:
        weights: w(x) per point
        offsets: b_k per group
    """
    weights: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=np.float64))

    @classmethod
    def statistical_parity(cls, instance: DiscreteInstance, center: Optional[float] = None) -> "AffineConstraint":
        """
        Zero covariance between the decision and the sensitive attribute in
        every group: w(x) = gamma(x) - rho_k, b_k = 0. rho_k is the
        mass-weighted sensitive rate of the group unless `center` overrides it.
        """
        if center is None:
            masses = instance.group_mass()
            sensitive = np.bincount(
                instance.group_ids, weights=instance.mass * instance.gamma_x, minlength=instance.group_count
            )
            rho = np.divide(sensitive, masses, out=np.zeros_like(masses), where=masses > 0)
            weights = instance.gamma_x - rho[instance.group_ids]
        else:
            weights = instance.gamma_x - float(center)
        return cls(weights, np.zeros(instance.group_count))

    @classmethod
    def predictive_equality(cls, instance: DiscreteInstance, rate: float) -> "AffineConstraint":
        """Same positive rate in every group"""
        if not (0.0 <= rate <= 1.0):
            raise InvalidParameterError(f"rate {rate} outside [0, 1]")
        return cls(np.ones(len(instance)), np.full(instance.group_count, float(rate)))

    @classmethod
    def unconstrained(cls, instance: DiscreteInstance) -> "AffineConstraint":
        return cls(np.zeros(len(instance)), np.zeros(instance.group_count))


def feasibility_constant(instance: DiscreteInstance, constraint: AffineConstraint) -> Optional[float]:
    """
    A constant c in (0, 1) such that f(x) = c meets every constraint, or None.
    """
    masses = instance.group_mass()
    mean_w = np.bincount(
        instance.group_ids, weights=instance.mass * constraint.weights, minlength=instance.group_count
    )
    mean_w = np.divide(mean_w, masses, out=np.zeros_like(mean_w), where=masses > 0)

    candidates = []
    for k in range(instance.group_count):
        if masses[k] == 0.0:
            continue
        if abs(mean_w[k]) <= 1e-12:
            if abs(constraint.offsets[k]) > 1e-12:
                return None
            continue
        candidates.append(constraint.offsets[k] / mean_w[k])

    if not candidates:
        return 0.5
    c = candidates[0]
    if any(abs(other - c) > 1e-9 for other in candidates) or not (0.0 < c < 1.0):
        return None
    return float(c)


def solve_regularized(
    instance: DiscreteInstance,
    constraint: AffineConstraint,
    gamma: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Population optimum of the gamma-regularized problem.

    Returns:
        (mu per group, p(f = 1 | x) per point)
    """
    h = instance.gains
    masses = instance.group_mass()
    mu = np.zeros(instance.group_count)
    for k in range(instance.group_count):
        mask = instance.group_ids == k
        if not np.any(mask):
            continue
        dual = solve_group_dual(
            h=h[mask],
            w=constraint.weights[mask],
            p=instance.mass[mask],
            c=constraint.offsets[k] * masses[k],
            gamma=gamma,
            group=k,
        )
        mu[k] = dual.mu
    q = np.clip((h - mu[instance.group_ids] * constraint.weights) / gamma, 0.0, 1.0)
    return mu, q


def read_threshold(eta: np.ndarray, q: np.ndarray) -> Tuple[float, float, bool]:
    """
    Reads (t_k, tau_k) off one group's decision probabilities.

    Returns:
        threshold, randomization mass, and whether q really has the form
        1{eta > t} + tau 1{eta = t}
    """
    fractional = (q > FRACTIONAL_TOL) & (q < 1.0 - FRACTIONAL_TOL)
    if np.any(fractional):
        levels = np.unique(eta[fractional])
        t = float(levels.mean())
        tau = float(q[fractional].mean())
    elif np.any(q <= FRACTIONAL_TOL):
        t = float(eta[q <= FRACTIONAL_TOL].max())
        tau = 0.0
    else:
        t = float(eta.min())
        tau = 1.0
    expected = (eta > t).astype(np.float64) + tau * (eta == t)
    return t, tau, bool(np.max(np.abs(expected - q)) <= 1e-4)


@dataclass(frozen=True)
class BayesOptimalRule:
    """
    Group-wise thresholding rule with randomization at the threshold.

    `probabilities` holds p(f* = 1 | x) per point; `path` records
    (gamma, thresholds, randomization) for every gamma of the extrapolation.
    """
    thresholds: Tuple[float, ...]
    randomization: Tuple[float, ...]
    probabilities: np.ndarray
    objective: float
    error: float
    mu: Tuple[float, ...]
    threshold_form: Tuple[bool, ...]
    path: Tuple[Tuple[float, Tuple[float, ...], Tuple[float, ...]], ...] = ()


def population_error(instance: DiscreteInstance, q: np.ndarray) -> float:
    """Expected 0-1 error of a randomized rule"""
    q = np.asarray(q, dtype=np.float64)
    return float(np.sum(instance.mass * (instance.eta * (1.0 - q) + (1.0 - instance.eta) * q)))


def _read_all(instance: DiscreteInstance, q: np.ndarray):
    thresholds, randomization, form = [], [], []
    for k in range(instance.group_count):
        mask = instance.group_ids == k
        if not np.any(mask):
            thresholds.append(0.5)
            randomization.append(0.0)
            form.append(True)
            continue
        t, tau, ok = read_threshold(instance.eta[mask], q[mask])
        thresholds.append(t)
        randomization.append(tau)
        form.append(ok)
    return tuple(thresholds), tuple(randomization), tuple(form)


def bayes_optimal_discrete(
    instance: DiscreteInstance,
    constraint: AffineConstraint,
    gammas: Sequence[float] = EXTRAPOLATION_GAMMAS,
    require_constant: bool = True,
) -> BayesOptimalRule:
    """
    Bayes-optimal rule under group-wise affine constraints.

    Maximizes E[f(x) (2 eta(x) - 1)], equivalently minimizes the 0-1 error,
    by solving the regularized problem along a decreasing gamma sequence and
    reading the rule off the smallest gamma.

    Without a constant rule c in (0, 1) meeting the constraints the
    threshold form is not guaranteed. `require_constant=False` solves such
    instances anyway and only fails when the constraints are infeasible.

    Raises:
        InfeasibleError: if no constant rule c in (0, 1) meets the constraints
            (with require_constant) or no rule at all does
    """
    if len(instance) > MAX_POINTS:
        raise InvalidParameterError(f"instance has {len(instance)} points, at most {MAX_POINTS} supported")
    if feasibility_constant(instance, constraint) is None:
        if require_constant:
            raise InfeasibleError("no constant rule in (0, 1) satisfies the constraints")
        logger.warning("No constant rule satisfies the constraints, threshold form is not guaranteed")

    path = []
    mu, q = None, None
    for gamma in sorted(gammas, reverse=True):
        mu, q = solve_regularized(instance, constraint, gamma)
        thresholds, randomization, _ = _read_all(instance, q)
        path.append((float(gamma), thresholds, randomization))
        logger.debug(f"gamma={gamma:g}: thresholds={thresholds}, randomization={randomization}")

    thresholds, randomization, form = _read_all(instance, q)
    for k, ok in enumerate(form):
        if not ok:
            logger.warning(f"Group {k}: optimal rule is not a threshold on eta")

    return BayesOptimalRule(
        thresholds=thresholds,
        randomization=randomization,
        probabilities=q,
        objective=float(np.sum(instance.mass * q * instance.gains)),
        error=population_error(instance, q),
        mu=tuple(float(m) for m in mu),
        threshold_form=form,
        path=tuple(path),
    )


def _best_group_vertex(h: np.ndarray, w: np.ndarray, p: np.ndarray, c: float, group: int):
    n = h.shape[0]
    if np.all(w == 0.0):
        if abs(c) > 1e-12:
            raise InfeasibleError("constraint 0 = c cannot be met", group=group)
        q = (h > 0.0).astype(np.float64)
        return float(np.sum(p * h * q)), q

    best_value, best_q = -np.inf, None
    pw = p * w
    for j in range(n):
        if pw[j] == 0.0:
            continue
        others = [i for i in range(n) if i != j]
        for bits in itertools.product((0.0, 1.0), repeat=n - 1):
            q = np.zeros(n)
            q[others] = bits
            q[j] = (c - float(np.dot(pw[others], bits))) / pw[j]
            if q[j] < -1e-12 or q[j] > 1.0 + 1e-12:
                continue
            q[j] = min(max(q[j], 0.0), 1.0)
            value = float(np.sum(p * h * q))
            if value > best_value + 1e-15:
                best_value, best_q = value, q
    if best_q is None:
        raise InfeasibleError("no vertex meets the constraint", group=group)
    return best_value, best_q


def brute_force_rule(instance: DiscreteInstance, constraint: AffineConstraint) -> Tuple[float, np.ndarray]:
    """
    Exhaustive optimum over all randomized rules by vertex enumeration.

    With one equality per group and box bounds, every vertex of the
    feasible set has at most one fractional coordinate per group, so
    enumerating deterministic assignments plus one solved coordinate
    covers all of them.

    Returns:
        (maximal E[f (2 eta - 1)], p(f = 1 | x) per point)
    """
    h = instance.gains
    masses = instance.group_mass()
    q = np.zeros(len(instance))
    total = 0.0
    for k in range(instance.group_count):
        mask = instance.group_ids == k
        if not np.any(mask):
            continue
        if int(mask.sum()) > MAX_BRUTE_FORCE_GROUP:
            raise InvalidParameterError(f"group {k} too large for enumeration")
        value, q_k = _best_group_vertex(
            h[mask], constraint.weights[mask], instance.mass[mask], constraint.offsets[k] * masses[k], k
        )
        q[mask] = q_k
        total += value
    return total, q
