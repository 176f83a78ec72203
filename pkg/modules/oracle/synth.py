"""
Synthetic cohorts whose scores are exactly 2 eta(x) - 1.

Every example draws a group, a sensitive flag with the group's rate and
a latent logit

    logit = loc_k + correlation * (s - rho_k) + scale_k * z,   z ~ N(0, 1)

so eta = expit(logit), score = 2 eta - 1 and the label is Bernoulli(eta).
With correlation = 0 scores are independent of the sensitive flag inside
every group.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Tuple, Union

import numpy as np
from scipy.special import expit

from core.errors import DataError, InvalidParameterError
from core.types import Cohort
from modules.oracle.bayes import DiscreteInstance
from utils import kv_format
from utils.seeding import make_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupSpec:
    weight: float = 1.0
    rho: float = 0.5
    loc: float = 0.0
    scale: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not (self.weight > 0.0):
            raise InvalidParameterError(f"group weight must be positive, got {self.weight}")
        if not (0.0 <= self.rho <= 1.0):
            raise InvalidParameterError(f"group rho {self.rho} outside [0, 1]")
        if not (self.scale >= 0.0):
            raise InvalidParameterError(f"group scale must be non-negative, got {self.scale}")


@dataclass(frozen=True)
class SynthSpec:
    """
    Args:
        groups: one GroupSpec per group
        correlation: shift of the logit per unit of (s - rho_k)
    """
    groups: Tuple[GroupSpec, ...]
    correlation: float = 0.0

    def __post_init__(self):
        if not self.groups:
            raise InvalidParameterError("synthesis spec needs at least one group")

    @property
    def group_count(self) -> int:
        return len(self.groups)

    @property
    def probabilities(self) -> np.ndarray:
        weights = np.array([g.weight for g in self.groups])
        return weights / weights.sum()

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "SynthSpec":
        """
        Reads

            groups = 2
            correlation = 1.5
            group.0.weight = 0.7
            group.0.rho = 0.2
            group.0.loc = -0.5
            group.0.scale = 1.0
            group.0.label = young

        Missing group keys fall back to the GroupSpec defaults.
        """
        count = kv_format.get_int(mapping, "groups")
        if count < 1:
            raise DataError("groups must be at least 1")
        known = {"groups", "correlation"}
        groups = []
        for k in range(count):
            prefix = f"group.{k}."
            known.update(prefix + field for field in ("weight", "rho", "loc", "scale", "label"))
            groups.append(
                GroupSpec(
                    weight=kv_format.get_float(mapping, prefix + "weight", 1.0),
                    rho=kv_format.get_float(mapping, prefix + "rho", 0.5),
                    loc=kv_format.get_float(mapping, prefix + "loc", 0.0),
                    scale=kv_format.get_float(mapping, prefix + "scale", 1.0),
                    label=mapping.get(prefix + "label", str(k)),
                )
            )
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise DataError(f"unknown keys in synthesis spec: {', '.join(unknown)}")
        return cls(groups=tuple(groups), correlation=kv_format.get_float(mapping, "correlation", 0.0))


def load_synth_spec(path: Union[str, Path]) -> SynthSpec:
    return SynthSpec.from_mapping(kv_format.read(path))


def synthesize(spec: SynthSpec, n: int, seed: int = 0) -> Cohort:
    """Seeded cohort of n labelled examples"""
    if n <= 0:
        raise InvalidParameterError(f"sample size must be positive, got {n}")
    rng = make_generator(seed)

    groups = rng.choice(spec.group_count, size=n, p=spec.probabilities)
    rho = np.array([g.rho for g in spec.groups])
    loc = np.array([g.loc for g in spec.groups])
    scale = np.array([g.scale for g in spec.groups])

    sensitive = (rng.random(n) < rho[groups]).astype(np.int8)
    z = rng.standard_normal(n)
    logit = loc[groups] + spec.correlation * (sensitive - rho[groups]) + scale[groups] * z
    eta = expit(logit)
    labels = (rng.random(n) < eta).astype(np.int8)

    logger.debug(f"Synthesized {n} examples over {spec.group_count} groups (seed={seed})")
    return Cohort(
        scores=2.0 * eta - 1.0,
        group_ids=groups,
        group_count=spec.group_count,
        sensitive=sensitive,
        labels=labels,
        group_labels=tuple(g.label or str(k) for k, g in enumerate(spec.groups)),
    )


def synthesize_discrete(instance: DiscreteInstance, n: int, seed: int = 0) -> Tuple[Cohort, np.ndarray]:
    """
    Draws n points from a finite instance.

    Returns:
        the cohort (score = 2 eta - 1, sensitive ~ Bernoulli(gamma_x),
        label ~ Bernoulli(eta)) and the index of the point behind every example
    """
    if n <= 0:
        raise InvalidParameterError(f"sample size must be positive, got {n}")
    rng = make_generator(seed)
    points = rng.choice(len(instance), size=n, p=instance.mass)
    sensitive = (rng.random(n) < instance.gamma_x[points]).astype(np.int8)
    labels = (rng.random(n) < instance.eta[points]).astype(np.int8)
    cohort = Cohort(
        scores=instance.gains[points],
        group_ids=instance.group_ids[points],
        group_count=instance.group_count,
        sensitive=sensitive,
        labels=labels,
    )
    return cohort, points
