import logging

import numpy as np
import pandas as pd
import pytest
from scipy.special import expit

from core.errors import DataError, InvalidParameterError
from core.types import Criterion, FitInfo, ThresholdModel
from modules.data.calibration import (
    CalibrationParams,
    calibrate,
    load_calibration,
    negative_log_likelihood,
    save_calibration,
)
from modules.data.ingest import ColumnMapping, ingest, split_frame
from modules.data.model_file import dumps_model, load_model, loads_model, save_model
from modules.optimizer.sgd import SgdConfig, fit
from utils import kv_format

SCORED = "score,group,sensitive,label\n0.5,a,1,1\n-0.2,b,0,0\n1.5,a,0,1\n0.1,b,true,no\n"


# ingestion

def test_ingest_clamps_out_of_range_scores(write_csv, caplog):
    path = write_csv("scored.csv", SCORED)
    with caplog.at_level(logging.WARNING):
        result = ingest(path)
    cohort = result.cohort
    assert cohort.scores.tolist() == [0.5, -0.2, 1.0, 0.1]
    assert cohort.group_labels == ("a", "b")
    assert cohort.group_ids.tolist() == [0, 1, 0, 1]
    assert cohort.sensitive.tolist() == [1, 0, 0, 1]
    assert cohort.labels.tolist() == [1, 0, 1, 0]
    assert result.report.clamped == 1
    assert result.report.group_sizes == {"a": 2, "b": 2}
    assert result.report.rho == {"a": 0.5, "b": 0.5}
    assert "Row 4" in caplog.text


def test_strict_policy_rejects_out_of_range_score(write_csv):
    with pytest.raises(DataError) as info:
        ingest(write_csv("scored.csv", SCORED), policy="strict")
    assert info.value.row == 4
    assert info.value.column == "score"
    with pytest.raises(InvalidParameterError):
        ingest(write_csv("scored.csv", SCORED), policy="lenient")


def test_missing_sensitive_column_is_named(write_csv):
    path = write_csv("scored.csv", "score,group\n0.5,a\n0.1,b\n")
    with pytest.raises(DataError) as info:
        ingest(path)
    assert info.value.column == "sensitive"
    assert "sensitive" in str(info.value)

    cohort = ingest(path, require_sensitive=False).cohort
    assert cohort.sensitive is None and cohort.labels is None


@pytest.mark.parametrize(
    "text, row, column",
    [
        ("score,group,sensitive\n0.5,a,maybe\n", 2, "sensitive"),
        ("score,group,sensitive\n0.5,a,1\nabc,a,0\n", 3, "score"),
        ("score,group,sensitive\n0.5,a,1\nnan,a,0\n", 3, "score"),
    ],
)
def test_bad_values_report_row_and_column(write_csv, text, row, column):
    with pytest.raises(DataError) as info:
        ingest(write_csv("bad.csv", text))
    assert (info.value.row, info.value.column) == (row, column)


def test_group_universe_from_model(write_csv):
    path = write_csv("scored.csv", SCORED)
    cohort = ingest(path, group_labels=("b", "a")).cohort
    assert cohort.group_ids.tolist() == [1, 0, 1, 0]

    with pytest.raises(DataError) as info:
        ingest(path, group_labels=("a",))
    assert info.value.row == 3


def test_positive_label_and_custom_columns(write_csv):
    path = write_csv("adult.csv", "s,age,female,income\n0.3,young,1,>50K\n-0.4,old,0,<=50K\n")
    mapping = ColumnMapping(score="s", group="age", sensitive="female", label="income", positive_label=">50K")
    cohort = ingest(path, mapping).cohort
    assert cohort.labels.tolist() == [1, 0]
    assert cohort.group_labels == ("old", "young")


def test_margin_column_uses_calibration(write_csv):
    path = write_csv("margins.csv", "margin,group,sensitive\n2.0,a,1\n-1.0,a,0\n")
    params = CalibrationParams(a=-1.0, b=0.0)
    mapping = ColumnMapping(margin="margin")
    cohort = ingest(path, mapping, calibration=params).cohort
    np.testing.assert_allclose(cohort.scores, 2.0 * expit([2.0, -1.0]) - 1.0)
    with pytest.raises(DataError):
        ingest(path, mapping)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        ingest(tmp_path / "absent.csv")


def test_split_sizes_and_determinism():
    frame = pd.DataFrame({"x": range(11)})
    parts = split_frame(frame, seed=4)
    assert [len(parts[name]) for name in ("train", "calibration", "test")] == [6, 2, 3]
    assert sorted(pd.concat(parts.values())["x"]) == list(range(11))
    for part in parts.values():
        assert part["x"].is_monotonic_increasing

    again = split_frame(frame, seed=4)
    assert all(parts[name].equals(again[name]) for name in parts)
    big = pd.DataFrame({"x": range(100)})
    assert not split_frame(big, seed=5)["train"].equals(split_frame(big, seed=4)["train"])

    with pytest.raises(InvalidParameterError):
        split_frame(frame, fractions=(0.5, 0.6), names=("a", "b"))


# calibration

def test_symmetric_data_gives_zero_offset():
    rng = np.random.default_rng(0)
    m = rng.uniform(-2, 2, 300)
    y = (rng.random(300) < expit(2 * m)).astype(float)
    margins, labels = np.concatenate([m, -m]), np.concatenate([y, 1 - y])
    params = calibrate(margins, labels)
    assert params.converged
    assert params.a < 0
    assert abs(params.b) <= 1e-6


def test_uninformative_margins_give_base_rate():
    rng = np.random.default_rng(1)
    margins = rng.normal(size=2000)
    labels = (rng.random(2000) < 0.3).astype(float)
    params = calibrate(margins, labels)
    assert params.converged
    assert np.mean(params.probabilities(margins)) == pytest.approx(labels.mean(), abs=1e-6)
    assert abs(params.a) < 0.2


def test_calibration_improves_likelihood():
    rng = np.random.default_rng(2)
    margins = rng.normal(size=500)
    labels = (rng.random(500) < expit(1.5 * margins - 0.5)).astype(float)
    params = calibrate(margins, labels)
    assert params.a == pytest.approx(-1.5, abs=0.5)
    assert negative_log_likelihood(params.a, params.b, margins, labels) <= negative_log_likelihood(
        params.a * 0.9, params.b, margins, labels
    )


def test_separated_margins_do_not_converge(caplog):
    with caplog.at_level(logging.WARNING):
        params = calibrate(np.array([-2.0, -1.0, 1.0, 2.0]), np.array([0.0, 0.0, 1.0, 1.0]))
    assert not params.converged
    assert params.a < 0
    assert "separate" in caplog.text


@pytest.mark.parametrize("labels", [[1, 1, 1, 1], [0, 0, 0, 1], [0, 2, 1, 1]])
def test_calibration_needs_both_labels(labels):
    with pytest.raises(DataError):
        calibrate(np.array([0.1, 0.2, 0.3, 0.4]), np.array(labels, dtype=float))


def test_calibration_file(tmp_path):
    params = CalibrationParams(a=-1.25, b=0.1, iterations=7, converged=True)
    path = tmp_path / "platt.txt"
    save_calibration(params, path)
    assert load_calibration(path) == params


# model files

def _parity_model(cohort):
    model, _ = fit(cohort, Criterion.parity(), 0.01, SgdConfig(steps=1000, seed=2))
    return model


def test_model_file_reproduces_bytes(cohort, tmp_path):
    model = _parity_model(cohort)
    path = tmp_path / "model.txt"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded == model
    assert loaded.fit_info == model.fit_info
    assert dumps_model(loaded) == path.read_text()


def test_equality_model_keeps_target_rate():
    model = ThresholdModel(
        mu=(0.1, -0.3),
        rho=(0.0, 0.0),
        gamma=0.2,
        criterion=Criterion.equality(0.375),
        group_labels=("x", "y"),
        fit_info=FitInfo(n=10, method="oracle"),
    )
    text = dumps_model(model)
    assert "criterion = equality" in text
    assert "target_rate = 0.375" in text
    assert loads_model(text) == model


def test_parity_model_stores_nan_rate(cohort):
    text = dumps_model(_parity_model(cohort))
    assert "target_rate = nan" in text
    assert loads_model(text).criterion == Criterion.parity()


@pytest.mark.parametrize(
    "old, new",
    [
        ("format_version = 1", "format_version = 2"),
        ("criterion = parity", "criterion = fairness"),
        ("group.0.degenerate = false", "group.0.degenerate = maybe"),
        ("gamma = 0.01", "gamma = -1.0"),
        ("groups = 3", "groups = 4"),
    ],
)
def test_corrupt_model_files(cohort, old, new):
    text = dumps_model(_parity_model(cohort))
    assert old in text
    with pytest.raises(DataError):
        loads_model(text.replace(old, new))


def test_model_file_missing(tmp_path):
    with pytest.raises(DataError):
        load_model(tmp_path / "nothing.txt")


# key-value format

def test_format_value():
    assert kv_format.format_value(np.float64(0.1)) == "0.1"
    assert kv_format.format_value(np.bool_(True)) == "true"
    assert kv_format.format_value(float("nan")) == "nan"
    assert kv_format.format_value(("a", "b")) == "a,b"
    assert kv_format.format_value(3) == "3"


def test_loads_and_errors():
    assert kv_format.loads("# header\na = 1\n\nb = x y\n") == {"a": "1", "b": "x y"}
    with pytest.raises(DataError) as info:
        kv_format.loads("a = 1\na = 2\n")
    assert info.value.row == 2
    with pytest.raises(DataError):
        kv_format.loads("just text\n")
    with pytest.raises(ValueError):
        kv_format.dumps({"a=b": 1})


def test_typed_getters():
    mapping = {"n": "3", "x": "0.5", "bad": "abc"}
    assert kv_format.get_int(mapping, "n") == 3
    assert kv_format.get_float(mapping, "x") == 0.5
    assert kv_format.get_float(mapping, "missing", 2.0) == 2.0
    with pytest.raises(DataError):
        kv_format.get_float(mapping, "bad")
    with pytest.raises(DataError):
        kv_format.get_int(mapping, "missing")
