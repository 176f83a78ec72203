"""
Модуль обучения: команда fit
"""
import argparse
import logging
from pathlib import Path
from typing import List, Union

from config.settings import (
    DEFAULT_GAMMA,
    DEFAULT_LEARNING_RATE,
    DEFAULT_SEED,
    DEFAULT_STEPS,
    LEARNING_RATE_PRESETS,
)
from core.errors import EXIT_OK, UsageError
from core.types import Cohort, Criterion, resolve_target_rate
from modules.base import BaseModule, CommandSpec
from modules.data.model_file import save_model
from modules.data.module import add_input_arguments, load_cohort
from modules.optimizer.sgd import SAMPLING_MODES, SgdConfig, fit, suboptimality_bound

logger = logging.getLogger(__name__)


def parse_learning_rate(value: str) -> Union[float, str]:
    if value == "auto" or value in LEARNING_RATE_PRESETS:
        return value
    try:
        return float(value)
    except ValueError:
        choices = ", ".join(["auto", *LEARNING_RATE_PRESETS])
        raise UsageError(f"learning rate must be a number or one of: {choices}") from None


def add_criterion_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--criterion", choices=("parity", "equality"), default="parity")
    parser.add_argument(
        "--target-rate",
        type=float,
        default=None,
        help="predictive equality rate (default: positive rate of 1{score > 0})",
    )
    parser.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)


def criterion_from_args(args: argparse.Namespace, cohort: Cohort) -> Criterion:
    if args.criterion == "parity":
        if args.target_rate is not None:
            raise UsageError("--target-rate only applies to --criterion equality")
        return Criterion.parity()
    return resolve_target_rate(Criterion.equality(args.target_rate), cohort)


def add_sgd_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    parser.add_argument("--lr", default=DEFAULT_LEARNING_RATE, help="auto, a preset name or a number")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--sampling", choices=SAMPLING_MODES, default="uniform")


def sgd_config_from_args(args: argparse.Namespace) -> SgdConfig:
    return SgdConfig(
        steps=args.steps,
        learning_rate=parse_learning_rate(args.lr),
        seed=args.seed,
        sampling=args.sampling,
    )


class OptimizerModule(BaseModule):
    """
    Модуль обучения.
    Подбирает двойственные переменные групп стохастическим градиентным спуском.
    """

    def __init__(self):
        super().__init__(
            name="optimizer",
            description="Projected SGD on the smoothed dual objective",
        )

    def get_handlers(self) -> List[CommandSpec]:
        return [CommandSpec("fit", "learn a fair threshold model", self._configure_fit, self.fit_command)]

    def _configure_fit(self, parser: argparse.ArgumentParser) -> None:
        add_input_arguments(parser)
        add_criterion_arguments(parser)
        add_sgd_arguments(parser)
        parser.add_argument("--out", required=True, help="model file")
        parser.add_argument("--trace", default=None, help="trace CSV (default: <out>.trace.csv)")

    def fit_command(self, args: argparse.Namespace) -> int:
        cohort = load_cohort(args, require_sensitive=args.criterion == "parity").cohort
        criterion = criterion_from_args(args, cohort)
        model, trace = fit(cohort, criterion, args.gamma, sgd_config_from_args(args))

        save_model(model, args.out)
        trace_path = Path(args.trace) if args.trace else Path(f"{args.out}.trace.csv")
        trace.to_frame().to_csv(trace_path, index=False)

        print(f"criterion = {criterion}")
        print(f"learning_rate = {trace.learning_rate!r}")
        print(f"objective = {trace.final_objective!r}")
        bound = suboptimality_bound(trace.learning_rate, model.group_count, trace.steps, model.gamma, criterion.b)
        print(f"bound = {bound!r}")
        for label, mu in zip(model.group_labels, model.mu):
            print(f"mu[{label}] = {mu!r}")
        return EXIT_OK


# Глобальный экземпляр
optimizer_module = OptimizerModule()
