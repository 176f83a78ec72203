"""
Plain-text model files.

    # fair post-processing model
    format_version = 1
    criterion = parity
    target_rate = nan
    gamma = 0.01
    groups = 2
    group.0.label = a
    group.0.mu = 0.125
    group.0.rho = 0.5
    group.0.degenerate = false
    ...
    fit.n = 1000
    fit.steps = 100000
    fit.learning_rate = 0.00634
    fit.seed = 0
    fit.method = sgd

Floats are written with their shortest round-trip repr, so
save -> load -> save reproduces the same bytes.
"""
import logging
from pathlib import Path
from typing import Union

from config.settings import MODEL_FORMAT_VERSION
from core.errors import DataError, InvalidParameterError
from core.types import Criterion, CriterionKind, FitInfo, ThresholdModel
from utils import kv_format

logger = logging.getLogger(__name__)

HEADER = "fair post-processing model"


def _check_label(label: str) -> None:
    if label != label.strip() or "\n" in label or not label:
        raise DataError(f"group label '{label}' cannot be stored")


def model_items(model: ThresholdModel):
    yield "format_version", MODEL_FORMAT_VERSION
    yield "criterion", model.criterion.kind.value
    rate = model.criterion.target_rate
    yield "target_rate", float("nan") if rate is None else float(rate)
    yield "gamma", float(model.gamma)
    yield "groups", model.group_count
    for k in range(model.group_count):
        _check_label(model.group_labels[k])
        yield f"group.{k}.label", model.group_labels[k]
        yield f"group.{k}.mu", model.mu[k]
        yield f"group.{k}.rho", model.rho[k]
        yield f"group.{k}.degenerate", model.degenerate[k]
    if model.fit_info is not None:
        info = model.fit_info
        yield "fit.n", info.n
        yield "fit.steps", info.steps
        yield "fit.learning_rate", float(info.learning_rate)
        yield "fit.seed", info.seed
        yield "fit.method", info.method


def dumps_model(model: ThresholdModel) -> str:
    return kv_format.dumps(model_items(model), header=HEADER)


def _parse_bool(mapping, key: str) -> bool:
    value = kv_format.require(mapping, key)
    if value not in ("true", "false"):
        raise DataError(f"key '{key}' must be true or false, got {value}")
    return value == "true"


def loads_model(text: str) -> ThresholdModel:
    mapping = kv_format.loads(text)
    version = kv_format.get_int(mapping, "format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version}")

    try:
        kind = CriterionKind(kv_format.require(mapping, "criterion"))
    except ValueError as e:
        raise DataError(f"unknown criterion: {e}") from e
    rate = kv_format.get_float(mapping, "target_rate")
    try:
        criterion = Criterion(kind, None if rate != rate else rate)
    except InvalidParameterError as e:
        raise DataError(f"invalid model file: {e}") from e

    count = kv_format.get_int(mapping, "groups")
    if count < 1:
        raise DataError("model needs at least one group")
    labels, mu, rho, degenerate = [], [], [], []
    for k in range(count):
        labels.append(kv_format.require(mapping, f"group.{k}.label"))
        mu.append(kv_format.get_float(mapping, f"group.{k}.mu"))
        rho.append(kv_format.get_float(mapping, f"group.{k}.rho"))
        degenerate.append(_parse_bool(mapping, f"group.{k}.degenerate"))

    fit_info = None
    if "fit.n" in mapping:
        fit_info = FitInfo(
            n=kv_format.get_int(mapping, "fit.n"),
            steps=kv_format.get_int(mapping, "fit.steps"),
            learning_rate=kv_format.get_float(mapping, "fit.learning_rate"),
            seed=kv_format.get_int(mapping, "fit.seed"),
            method=kv_format.require(mapping, "fit.method"),
        )

    try:
        return ThresholdModel(
            mu=tuple(mu),
            rho=tuple(rho),
            gamma=kv_format.get_float(mapping, "gamma"),
            criterion=criterion,
            group_labels=tuple(labels),
            degenerate=tuple(degenerate),
            fit_info=fit_info,
        )
    except InvalidParameterError as e:
        raise DataError(f"invalid model file: {e}") from e


def save_model(model: ThresholdModel, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_model(model))
    logger.info(f"Model saved to {path}")


def load_model(path: Union[str, Path]) -> ThresholdModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    return loads_model(path.read_text())
