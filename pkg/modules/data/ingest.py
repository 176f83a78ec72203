"""
CSV ingestion of scored examples.

The file must have a header row. Group values are arbitrary strings and
are mapped to dense ids in sorted order, or in the order of a model's
group labels when applying a fitted model. Row numbers in errors are
file line numbers (the header is line 1).
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import (
    DEFAULT_COLUMNS,
    FALSE_VALUES,
    SCORE_POLICY,
    SPLIT_FRACTIONS,
    SPLIT_NAMES,
    TRUE_VALUES,
)
from core.errors import DataError, InvalidParameterError
from core.types import Cohort
from modules.data.calibration import CalibrationParams
from utils.seeding import make_generator

logger = logging.getLogger(__name__)

SCORE_POLICIES = ("clamp", "strict")


@dataclass(frozen=True)
class ColumnMapping:
    """
    Column names of the input file.

    Args:
        score: calibrated score in [-1, 1]
        margin: raw margin column, used instead of `score` together with
            calibration parameters
        positive_label: label value meaning 1 (e.g. ">50K"); None reads
            labels as booleans
    """
    score: str = DEFAULT_COLUMNS["score"]
    group: str = DEFAULT_COLUMNS["group"]
    sensitive: str = DEFAULT_COLUMNS["sensitive"]
    label: str = DEFAULT_COLUMNS["label"]
    margin: Optional[str] = None
    positive_label: Optional[str] = None


@dataclass(frozen=True)
class IngestionReport:
    rows: int
    clamped: int
    group_sizes: Dict[str, int]
    rho: Dict[str, float] = field(default_factory=dict)

    def items(self):
        yield "rows", self.rows
        yield "clamped", self.clamped
        for label, size in self.group_sizes.items():
            yield f"group.{label}.size", size
            if label in self.rho:
                yield f"group.{label}.rho", self.rho[label]


@dataclass(frozen=True, eq=False)
class IngestResult:
    cohort: Cohort
    report: IngestionReport
    frame: pd.DataFrame


def parse_bool(value: str, row: int, column: str) -> int:
    text = value.strip().lower()
    if text in TRUE_VALUES:
        return 1
    if text in FALSE_VALUES:
        return 0
    raise DataError(f"unknown boolean encoding '{value}'", row=row, column=column)


def parse_float(value: str, row: int, column: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise DataError(f"non-numeric value '{value}'", row=row, column=column) from None
    if not math.isfinite(number):
        raise DataError(f"non-finite value '{value}'", row=row, column=column)
    return number


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"cannot parse {path}: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    if frame.empty:
        raise DataError(f"{path} has no data rows")
    return frame


def _require_column(frame: pd.DataFrame, column: str) -> None:
    if column not in frame.columns:
        raise DataError(f"missing column (found: {', '.join(frame.columns)})", column=column)


def _scores(
    frame: pd.DataFrame,
    mapping: ColumnMapping,
    calibration: Optional[CalibrationParams],
    policy: str,
) -> Tuple[np.ndarray, int]:
    if mapping.margin is not None:
        if calibration is None:
            raise DataError("margin column given without calibration parameters", column=mapping.margin)
        _require_column(frame, mapping.margin)
        margins = np.array(
            [parse_float(v, i + 2, mapping.margin) for i, v in enumerate(frame[mapping.margin])]
        )
        return calibration.apply(margins), 0

    _require_column(frame, mapping.score)
    scores = np.empty(len(frame))
    clamped = 0
    for i, value in enumerate(frame[mapping.score]):
        row = i + 2
        score = parse_float(value, row, mapping.score)
        if abs(score) > 1.0:
            if policy == "strict":
                raise DataError(f"score {score} outside [-1, 1]", row=row, column=mapping.score)
            logger.warning(f"Row {row}: score {score} clamped to [-1, 1]")
            score = min(max(score, -1.0), 1.0)
            clamped += 1
        scores[i] = score
    return scores, clamped


def ingest(
    path: Union[str, Path],
    mapping: ColumnMapping = ColumnMapping(),
    require_sensitive: bool = True,
    group_labels: Optional[Sequence[str]] = None,
    calibration: Optional[CalibrationParams] = None,
    policy: str = SCORE_POLICY,
) -> IngestResult:
    """
    Reads a scored CSV into a Cohort.

    Args:
        path: CSV file with a header row
        mapping: column names
        require_sensitive: fail when the sensitive column is missing
        group_labels: fixed group universe (from a model); unknown groups are errors
        calibration: maps a margin column to scores
        policy: "clamp" out-of-range scores with a warning, or "strict"

    Raises:
        DataError: on missing columns, bad values or unknown groups
    """
    if policy not in SCORE_POLICIES:
        raise InvalidParameterError(f"unknown score policy '{policy}'")
    frame = read_frame(path)
    scores, clamped = _scores(frame, mapping, calibration, policy)

    _require_column(frame, mapping.group)
    values = [v.strip() for v in frame[mapping.group]]
    if group_labels is None:
        labels = tuple(sorted(set(values)))
    else:
        labels = tuple(str(g) for g in group_labels)
    index = {label: k for k, label in enumerate(labels)}
    group_ids = np.empty(len(frame), dtype=np.int64)
    for i, value in enumerate(values):
        if value not in index:
            raise DataError(f"group '{value}' unknown to the model", row=i + 2, column=mapping.group)
        group_ids[i] = index[value]

    sensitive = None
    if mapping.sensitive in frame.columns:
        sensitive = np.array(
            [parse_bool(v, i + 2, mapping.sensitive) for i, v in enumerate(frame[mapping.sensitive])],
            dtype=np.int8,
        )
    elif require_sensitive:
        _require_column(frame, mapping.sensitive)

    label_values = None
    if mapping.label in frame.columns:
        if mapping.positive_label is None:
            label_values = np.array(
                [parse_bool(v, i + 2, mapping.label) for i, v in enumerate(frame[mapping.label])],
                dtype=np.int8,
            )
        else:
            label_values = (frame[mapping.label].str.strip() == mapping.positive_label).to_numpy(np.int8)

    cohort = Cohort(
        scores=scores,
        group_ids=group_ids,
        group_count=len(labels),
        sensitive=sensitive,
        labels=label_values,
        group_labels=labels,
    )

    sizes = cohort.group_sizes()
    rho = {}
    if sensitive is not None:
        counts = np.bincount(group_ids, weights=sensitive, minlength=len(labels))
        rho = {labels[k]: float(counts[k] / sizes[k]) for k in range(len(labels)) if sizes[k] > 0}
    report = IngestionReport(
        rows=len(frame),
        clamped=clamped,
        group_sizes={labels[k]: int(sizes[k]) for k in range(len(labels))},
        rho=rho,
    )
    logger.info(f"Ingested {report.rows} rows from {path}: {len(labels)} groups, {clamped} clamped")
    if clamped:
        logger.warning(f"{clamped} scores were clamped to [-1, 1]")
    return IngestResult(cohort=cohort, report=report, frame=frame)


def split_frame(
    frame: pd.DataFrame,
    seed: int = 0,
    fractions: Sequence[float] = SPLIT_FRACTIONS,
    names: Sequence[str] = SPLIT_NAMES,
) -> Dict[str, pd.DataFrame]:
    """
    Seeded random split of the rows, e.g. 60/20/20 into train,
    calibration and test. The last part takes the rounding remainder.
    """
    if len(fractions) != len(names):
        raise InvalidParameterError("one name per split fraction is required")
    if any(f < 0.0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidParameterError(f"split fractions must be non-negative and sum to 1, got {fractions}")
    n = len(frame)
    order = make_generator(seed).permutation(n)
    bounds = np.floor(np.cumsum(fractions[:-1]) * n).astype(int)
    parts = np.split(order, bounds)
    return {name: frame.iloc[np.sort(part)].reset_index(drop=True) for name, part in zip(names, parts)}
