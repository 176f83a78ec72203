"""
Domain types shared by every module: scored examples, cohorts, fairness
criteria and the learned threshold model.

All types are immutable after construction. Cohort arrays are flagged
read-only so that fits and audits can share one cohort safely.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from core.errors import DataError, InvalidParameterError

logger = logging.getLogger(__name__)

# Slack for |mu_k| <= 1 + gamma after averaging (accumulated rounding only)
MU_BOUND_SLACK = 1e-12


class CriterionKind(str, Enum):
    """Which fairness constraint family is enforced"""
    PARITY = "parity"       # conditional statistical parity within each group
    EQUALITY = "equality"   # predictive equality across groups


@dataclass(frozen=True)
class Criterion:
    """
    Fairness criterion.

    Under predictive equality every group is driven to the same positive
    rate `target_rate`. The rate may be left unresolved (None) until a
    cohort is available, see `resolve_target_rate`.
    """
    kind: CriterionKind
    target_rate: Optional[float] = None

    def __post_init__(self):
        kind = CriterionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is CriterionKind.PARITY and self.target_rate is not None:
            raise InvalidParameterError("conditional parity takes no target rate")
        if self.target_rate is not None:
            rate = float(self.target_rate)
            if not (0.0 <= rate <= 1.0):
                raise InvalidParameterError(f"target rate {rate} outside [0, 1]")
            object.__setattr__(self, "target_rate", rate)

    @classmethod
    def parity(cls) -> "Criterion":
        return cls(CriterionKind.PARITY)

    @classmethod
    def equality(cls, target_rate: Optional[float] = None) -> "Criterion":
        return cls(CriterionKind.EQUALITY, target_rate)

    @property
    def is_parity(self) -> bool:
        return self.kind is CriterionKind.PARITY

    @property
    def resolved(self) -> bool:
        return self.is_parity or self.target_rate is not None

    @property
    def b(self) -> float:
        """Linear coefficient of mu in the smoothed objective"""
        if self.is_parity:
            return 0.0
        if self.target_rate is None:
            raise InvalidParameterError("predictive equality target rate is unresolved")
        return self.target_rate

    def with_target_rate(self, rate: float) -> "Criterion":
        return replace(self, target_rate=rate)

    def __str__(self) -> str:
        if self.is_parity:
            return "parity"
        return f"equality(rate={self.target_rate})"


@dataclass(frozen=True)
class ScoredExample:
    """
    One observation as the post-processor sees it.

    Args:
        score: classifier output in [-1, 1], an estimate of 2*eta(x) - 1
        group_id: dense group index in [0, K)
        sensitive: 1 if the example belongs to the sensitive class
        label: true label, when known
    """
    score: float
    group_id: int
    sensitive: Optional[int] = None
    label: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.score) or not (-1.0 <= self.score <= 1.0):
            raise DataError(f"score {self.score} outside [-1, 1]")
        if self.group_id < 0:
            raise DataError(f"negative group id {self.group_id}")
        if self.sensitive not in (None, 0, 1):
            raise DataError(f"sensitive flag must be 0 or 1, got {self.sensitive}")
        if self.label not in (None, 0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label}")


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Cohort:
    """
    An ordered collection of scored examples partitioned into K groups.

    Stored column-wise; iterate or index to get `ScoredExample` objects.
    """
    scores: np.ndarray
    group_ids: np.ndarray
    group_count: int
    sensitive: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    group_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        scores = _frozen(self.scores, np.float64)
        groups = _frozen(self.group_ids, np.int64)
        n = scores.shape[0]

        if scores.ndim != 1 or n == 0:
            raise DataError("cohort must contain at least one example")
        if groups.shape != scores.shape:
            raise DataError("scores and group ids differ in length")
        if self.group_count < 1:
            raise DataError("group count must be at least 1")
        if not np.all(np.isfinite(scores)) or np.any(np.abs(scores) > 1.0):
            raise DataError("scores must be finite and within [-1, 1]")
        if np.any(groups < 0) or np.any(groups >= self.group_count):
            raise DataError(f"group ids must lie in [0, {self.group_count})")

        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "group_ids", groups)

        for name in ("sensitive", "labels"):
            values = getattr(self, name)
            if values is None:
                continue
            values = _frozen(values, np.int8)
            if values.shape != scores.shape:
                raise DataError(f"{name} and scores differ in length")
            if np.any((values != 0) & (values != 1)):
                raise DataError(f"{name} must be binary")
            object.__setattr__(self, name, values)

        labels = tuple(str(label) for label in self.group_labels)
        if not labels:
            labels = tuple(str(k) for k in range(self.group_count))
        if len(labels) != self.group_count:
            raise DataError("one group label per group is required")
        object.__setattr__(self, "group_labels", labels)

    @classmethod
    def from_examples(
        cls,
        examples: Sequence[ScoredExample],
        group_count: Optional[int] = None,
        group_labels: Sequence[str] = (),
    ) -> "Cohort":
        """Builds a cohort from example objects, K defaults to max id + 1"""
        if not examples:
            raise DataError("cohort must contain at least one example")
        if group_count is None:
            group_count = max(e.group_id for e in examples) + 1

        sensitive = [e.sensitive for e in examples]
        labels = [e.label for e in examples]
        return cls(
            scores=[e.score for e in examples],
            group_ids=[e.group_id for e in examples],
            group_count=group_count,
            sensitive=None if any(s is None for s in sensitive) else sensitive,
            labels=None if any(y is None for y in labels) else labels,
            group_labels=tuple(group_labels),
        )

    def __len__(self) -> int:
        return self.scores.shape[0]

    def __getitem__(self, i: int) -> ScoredExample:
        return ScoredExample(
            score=float(self.scores[i]),
            group_id=int(self.group_ids[i]),
            sensitive=None if self.sensitive is None else int(self.sensitive[i]),
            label=None if self.labels is None else int(self.labels[i]),
        )

    def __iter__(self) -> Iterator[ScoredExample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def examples(self) -> Tuple[ScoredExample, ...]:
        return tuple(self)

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.group_ids, minlength=self.group_count)

    def group_mask(self, k: int) -> np.ndarray:
        return self.group_ids == k

    def require_sensitive(self) -> np.ndarray:
        if self.sensitive is None:
            raise DataError("cohort has no sensitive flags", column="sensitive")
        return self.sensitive

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise DataError("cohort has no labels", column="label")
        return self.labels

    def select(self, indices: np.ndarray) -> "Cohort":
        """Sub-cohort with the same group universe"""
        return Cohort(
            scores=self.scores[indices],
            group_ids=self.group_ids[indices],
            group_count=self.group_count,
            sensitive=None if self.sensitive is None else self.sensitive[indices],
            labels=None if self.labels is None else self.labels[indices],
            group_labels=self.group_labels,
        )


def compute_rho(cohort: Cohort) -> np.ndarray:
    """
    Fraction of sensitive-class members in every group.

    Returns:
        array of K values rho_k = |S ∩ X_k| / |X_k|

    Raises:
        DataError: if some group is empty or the cohort has no sensitive flags
    """
    sensitive = cohort.require_sensitive()
    sizes = cohort.group_sizes()
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise DataError(f"group {int(empty[0])} is empty")
    counts = np.bincount(cohort.group_ids, weights=sensitive, minlength=cohort.group_count)
    return counts / sizes


def degenerate_groups(rho: Sequence[float], criterion: Criterion) -> Tuple[bool, ...]:
    """Groups in which the parity constraint is vacuous (rho_k in {0, 1})"""
    if not criterion.is_parity:
        return tuple(False for _ in rho)
    return tuple(bool(r == 0.0 or r == 1.0) for r in rho)


@dataclass(frozen=True)
class FitInfo:
    """Metadata of the run that produced a model"""
    n: int
    steps: int = 0
    learning_rate: float = 0.0
    seed: int = 0
    method: str = "sgd"


@dataclass(frozen=True)
class ThresholdModel:
    """
    Learned post-processing rule.

    `mu` holds one dual variable per group, `rho` the sensitive-class rates
    of the fitting cohort (only used under conditional parity).
    """
    mu: Tuple[float, ...]
    rho: Tuple[float, ...]
    gamma: float
    criterion: Criterion
    group_labels: Tuple[str, ...] = ()
    degenerate: Tuple[bool, ...] = ()
    fit_info: Optional[FitInfo] = field(default=None, compare=False)

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        rho = tuple(float(r) for r in self.rho)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rho", rho)

        if not (self.gamma > 0.0) or not math.isfinite(self.gamma):
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")
        if not mu:
            raise InvalidParameterError("model needs at least one group")
        if len(rho) != len(mu):
            raise InvalidParameterError("mu and rho differ in length")

        bound = 1.0 + self.gamma
        for k, m in enumerate(mu):
            if not math.isfinite(m) or abs(m) > bound + MU_BOUND_SLACK:
                raise InvalidParameterError(f"mu[{k}] = {m} outside [-{bound}, {bound}]")
        for k, r in enumerate(rho):
            if not (0.0 <= r <= 1.0):
                raise InvalidParameterError(f"rho[{k}] = {r} outside [0, 1]")

        labels = tuple(str(label) for label in self.group_labels) or tuple(
            str(k) for k in range(len(mu))
        )
        if len(labels) != len(mu):
            raise InvalidParameterError("one group label per group is required")
        object.__setattr__(self, "group_labels", labels)

        degenerate = tuple(bool(d) for d in self.degenerate) or degenerate_groups(rho, self.criterion)
        if len(degenerate) != len(mu):
            raise InvalidParameterError("one degeneracy flag per group is required")
        object.__setattr__(self, "degenerate", degenerate)

    @property
    def group_count(self) -> int:
        return len(self.mu)

    @property
    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=np.float64)

    @property
    def rho_array(self) -> np.ndarray:
        return np.asarray(self.rho, dtype=np.float64)

    def with_mu(self, mu: Sequence[float]) -> "ThresholdModel":
        return replace(self, mu=tuple(mu))

    def check_group(self, group_id: int) -> None:
        if not (0 <= group_id < self.group_count):
            raise DataError(f"group id {group_id} unknown to a model with {self.group_count} groups")


def tau(example: ScoredExample, model: ThresholdModel) -> float:
    """
    Constraint weight of one example.

    Under conditional parity this is 1_S(x) - rho_k, under predictive
    equality it is 1. |tau| <= 1 always.
    """
    model.check_group(example.group_id)
    if not model.criterion.is_parity:
        return 1.0
    if example.sensitive is None:
        raise DataError("conditional parity needs the sensitive flag", column="sensitive")
    return example.sensitive - model.rho[example.group_id]


def tau_values(cohort: Cohort, criterion: Criterion, rho: Sequence[float]) -> np.ndarray:
    """Vectorized `tau` over a cohort"""
    if not criterion.is_parity:
        return np.ones(len(cohort))
    sensitive = cohort.require_sensitive()
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape[0] != cohort.group_count:
        raise DataError(f"model has {rho.shape[0]} groups, cohort has {cohort.group_count}")
    return sensitive - rho[cohort.group_ids]


def resolve_target_rate(criterion: Criterion, cohort: Cohort) -> Criterion:
    """
    Fills in an unresolved predictive-equality rate with the positive rate
    of the unadjusted hard classifier, mean(1{f(x) > 0}).
    """
    if criterion.resolved:
        return criterion
    rate = float(np.mean(cohort.scores > 0.0))
    logger.info(f"Predictive equality target rate resolved to {rate:.6f}")
    return criterion.with_target_rate(rate)
