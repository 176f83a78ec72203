"""
Bias auditing of randomized decisions.

All metrics take expected decisions q (probabilities of a positive
prediction), so reports for a fixed rule are deterministic. Hard labels
can be audited by passing sampled 0/1 values as q.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import DataError
from core.types import Cohort, Criterion, ThresholdModel, compute_rho
from modules.decision.rule import decide_cohort, sample_labels
from modules.oracle.qp import fit_exact
from utils.seeding import make_generator

logger = logging.getLogger(__name__)


def conditional_covariance(q: np.ndarray, flags: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """
    E[q s | mask] - E[q | mask] E[s | mask] over the masked examples.

    Raises:
        DataError: if the mask selects nothing
    """
    q = np.asarray(q, dtype=np.float64)
    flags = np.asarray(flags, dtype=np.float64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        q, flags = q[mask], flags[mask]
    if q.size == 0:
        raise DataError("covariance over an empty set of examples")
    return float(np.mean(q * flags) - np.mean(q) * np.mean(flags))


def residual_bias(cohort: Cohort, q: np.ndarray, model: ThresholdModel) -> np.ndarray:
    """
    r_k = |X_k|^-1 |sum_{i in X_k} (1_S(i) - rho_k) q_i| with the model's rho.

    Raises:
        DataError: if some group has no examples
    """
    if cohort.group_count != model.group_count:
        raise DataError(f"cohort has {cohort.group_count} groups, model has {model.group_count}")
    return _residuals(cohort, q, model.rho_array)


def _residuals(cohort: Cohort, q: np.ndarray, rho: np.ndarray) -> np.ndarray:
    sensitive = cohort.require_sensitive()
    sizes = cohort.group_sizes()
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise DataError(f"group {int(empty[0])} is empty")
    q = np.asarray(q, dtype=np.float64)
    weighted = (sensitive - rho[cohort.group_ids]) * q
    return np.abs(np.bincount(cohort.group_ids, weights=weighted, minlength=cohort.group_count)) / sizes


def predictive_equality_covariance(cohort: Cohort, q: np.ndarray) -> np.ndarray:
    """C(q, 1{x in X_k}) over the whole cohort, one value per group"""
    q = np.asarray(q, dtype=np.float64)
    return np.array([conditional_covariance(q, cohort.group_mask(k)) for k in range(cohort.group_count)])


def error_rate(q: np.ndarray, labels: Optional[np.ndarray]) -> float:
    """Expected 0-1 error of the randomized rule"""
    if labels is None:
        raise DataError("error rate needs labels", column="label")
    q = np.asarray(q, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if q.shape != labels.shape:
        raise DataError("decisions and labels differ in length")
    return float(np.mean(np.where(labels == 1.0, 1.0 - q, q)))


@dataclass(frozen=True)
class GroupBias:
    label: str
    size: int
    rho: float
    positive_rate: float
    covariance: float
    residual: float
    pe_covariance: float


@dataclass(frozen=True)
class BiasReport:
    """
    Per-group bias of one decision rule on one cohort.

    `stage` names the rule: "unadjusted" (q = 1{f > 0}), "fitted" or
    "global" (statistical parity fitted without the group partition).
    """
    stage: str
    n: int
    groups: Tuple[GroupBias, ...]
    error: Optional[float] = None
    sampled: bool = False

    @property
    def max_residual(self) -> float:
        return max(g.residual for g in self.groups)

    def items(self):
        yield f"{self.stage}.n", self.n
        yield f"{self.stage}.sampled", self.sampled
        yield f"{self.stage}.error", float("nan") if self.error is None else self.error
        for k, g in enumerate(self.groups):
            prefix = f"{self.stage}.group.{k}"
            yield f"{prefix}.label", g.label
            yield f"{prefix}.size", g.size
            yield f"{prefix}.rho", g.rho
            yield f"{prefix}.positive_rate", g.positive_rate
            yield f"{prefix}.covariance", g.covariance
            yield f"{prefix}.residual", g.residual
            yield f"{prefix}.pe_covariance", g.pe_covariance


def build_report(stage: str, cohort: Cohort, q: np.ndarray, rho: Sequence[float], sampled: bool = False) -> BiasReport:
    q = np.asarray(q, dtype=np.float64)
    sensitive = cohort.require_sensitive()
    sizes = cohort.group_sizes()
    rho = np.asarray(rho, dtype=np.float64)
    residuals = _residuals(cohort, q, rho)
    pe = predictive_equality_covariance(cohort, q)

    groups = []
    for k in range(cohort.group_count):
        mask = cohort.group_mask(k)
        groups.append(
            GroupBias(
                label=cohort.group_labels[k],
                size=int(sizes[k]),
                rho=float(rho[k]),
                positive_rate=float(np.mean(q[mask])),
                covariance=conditional_covariance(q, sensitive, mask),
                residual=float(residuals[k]),
                pe_covariance=float(pe[k]),
            )
        )
    error = None if cohort.labels is None else error_rate(q, cohort.labels)
    return BiasReport(stage=stage, n=len(cohort), groups=tuple(groups), error=error, sampled=sampled)


def global_parity_decisions(cohort: Cohort, gamma: float) -> np.ndarray:
    """
    Decisions of a statistical parity fit that ignores the groups: the
    whole cohort is treated as a single group.
    """
    collapsed = Cohort(
        scores=cohort.scores,
        group_ids=np.zeros(len(cohort), dtype=np.int64),
        group_count=1,
        sensitive=cohort.require_sensitive(),
        labels=cohort.labels,
    )
    model = fit_exact(collapsed, Criterion.parity(), gamma)
    return decide_cohort(collapsed, model)


def audit(
    cohort: Cohort,
    model: Optional[ThresholdModel] = None,
    global_gamma: Optional[float] = None,
    sampled: bool = False,
    seed: int = 0,
) -> Tuple[BiasReport, ...]:
    """
    Bias of the unadjusted rule 1{f > 0} and, when given, of a fitted model
    and of the group-blind parity baseline.

    Args:
        cohort: examples with sensitive flags
        model: fitted rule
        global_gamma: gamma of the group-blind baseline, None skips it
        sampled: audit sampled hard labels instead of probabilities
        seed: generator seed of the sampled mode
    """
    rho = compute_rho(cohort)
    rng = make_generator(seed) if sampled else None

    def prepare(q: np.ndarray) -> np.ndarray:
        return sample_labels(q, rng).astype(np.float64) if sampled else q

    reports = [build_report("unadjusted", cohort, (cohort.scores > 0.0).astype(np.float64), rho, sampled)]
    if model is not None:
        q = prepare(decide_cohort(cohort, model))
        fitted_rho = model.rho if model.criterion.is_parity else rho
        reports.append(build_report("fitted", cohort, q, fitted_rho, sampled))
    if global_gamma is not None:
        q = prepare(global_parity_decisions(cohort, global_gamma))
        reports.append(build_report("global", cohort, q, rho, sampled))

    for report in reports:
        logger.info(f"Audit {report.stage}: max residual {report.max_residual:.6g}, error {report.error}")
    return tuple(reports)


def reports_to_frame(reports: Sequence[BiasReport]) -> pd.DataFrame:
    """One row per (stage, group)"""
    rows = []
    for report in reports:
        for k, g in enumerate(report.groups):
            rows.append(
                {
                    "stage": report.stage,
                    "group": g.label,
                    "group_id": k,
                    "size": g.size,
                    "rho": g.rho,
                    "positive_rate": g.positive_rate,
                    "covariance": g.covariance,
                    "residual": g.residual,
                    "pe_covariance": g.pe_covariance,
                    "error": report.error,
                    "sampled": report.sampled,
                }
            )
    return pd.DataFrame(rows)


def reports_to_items(reports: Sequence[BiasReport]):
    yield "stages", tuple(r.stage for r in reports)
    for report in reports:
        yield from report.items()
