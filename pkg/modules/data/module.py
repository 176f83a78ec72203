"""
Модуль данных: разбиение выборки, калибровка и общие аргументы ввода
"""
import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from config.settings import DEFAULT_COLUMNS, SCORE_POLICY, SPLIT_NAMES
from core.errors import EXIT_OK, DataError
from modules.base import BaseModule, CommandSpec
from modules.data.calibration import calibrate, load_calibration, save_calibration
from modules.data.ingest import (
    SCORE_POLICIES,
    ColumnMapping,
    IngestResult,
    ingest,
    parse_bool,
    parse_float,
    read_frame,
    split_frame,
)

logger = logging.getLogger(__name__)


def add_input_arguments(parser: argparse.ArgumentParser) -> None:
    """--input plus the column options shared by every command reading a cohort"""
    parser.add_argument("--input", required=True, help="scored CSV file")
    parser.add_argument("--score-column", default=DEFAULT_COLUMNS["score"])
    parser.add_argument("--group-column", default=DEFAULT_COLUMNS["group"])
    parser.add_argument("--sensitive-column", default=DEFAULT_COLUMNS["sensitive"])
    parser.add_argument("--label-column", default=DEFAULT_COLUMNS["label"])
    parser.add_argument("--positive-label", default=None, help="label value meaning 1")
    parser.add_argument("--margin-column", default=None, help="raw margins, needs --calibration")
    parser.add_argument("--calibration", default=None, help="calibration parameters file")
    parser.add_argument("--score-policy", choices=SCORE_POLICIES, default=SCORE_POLICY)


def column_mapping(args: argparse.Namespace) -> ColumnMapping:
    return ColumnMapping(
        score=args.score_column,
        group=args.group_column,
        sensitive=args.sensitive_column,
        label=args.label_column,
        margin=args.margin_column,
        positive_label=args.positive_label,
    )


def load_cohort(
    args: argparse.Namespace,
    require_sensitive: bool = True,
    group_labels: Optional[Sequence[str]] = None,
) -> IngestResult:
    calibration = load_calibration(args.calibration) if args.calibration else None
    return ingest(
        args.input,
        column_mapping(args),
        require_sensitive=require_sensitive,
        group_labels=group_labels,
        calibration=calibration,
        policy=args.score_policy,
    )


class DataModule(BaseModule):
    """
    Модуль подготовки данных.
    Разбивает выборку на обучение, калибровку и тест и калибрует отступы.
    """

    def __init__(self):
        super().__init__(
            name="data",
            description="Seeded splits and Platt calibration of raw margins",
        )

    def get_handlers(self) -> List[CommandSpec]:
        return [
            CommandSpec("split", "seeded train / calibration / test split", self._configure_split, self.split_command),
            CommandSpec("calibrate", "fit Platt scaling on raw margins", self._configure_calibrate, self.calibrate_command),
        ]

    def _configure_split(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--input", required=True)
        parser.add_argument("--out-dir", required=True)
        parser.add_argument("--seed", type=int, default=0)

    def split_command(self, args: argparse.Namespace) -> int:
        frame = read_frame(args.input)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        parts = split_frame(frame, seed=args.seed)
        for name in SPLIT_NAMES:
            path = out_dir / f"{name}.csv"
            parts[name].to_csv(path, index=False)
            print(f"{name}: {len(parts[name])} rows -> {path}")
        return EXIT_OK

    def _configure_calibrate(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--input", required=True)
        parser.add_argument("--margin-column", default="margin")
        parser.add_argument("--label-column", default=DEFAULT_COLUMNS["label"])
        parser.add_argument("--positive-label", default=None)
        parser.add_argument("--out", required=True, help="calibration parameters file")

    def calibrate_command(self, args: argparse.Namespace) -> int:
        frame = read_frame(args.input)
        for column in (args.margin_column, args.label_column):
            if column not in frame.columns:
                raise DataError("missing column", column=column)
        margins = [parse_float(v, i + 2, args.margin_column) for i, v in enumerate(frame[args.margin_column])]
        if args.positive_label is None:
            labels = [parse_bool(v, i + 2, args.label_column) for i, v in enumerate(frame[args.label_column])]
        else:
            labels = [int(v.strip() == args.positive_label) for v in frame[args.label_column]]
        params = calibrate(margins, labels)
        save_calibration(params, args.out)
        print(f"A = {params.a!r}\nB = {params.b!r}\nconverged = {params.converged}")
        return EXIT_OK


# Глобальный экземпляр
data_module = DataModule()
