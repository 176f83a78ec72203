"""
Модуль решений: команда apply
"""
import argparse
import logging
from typing import List

import pandas as pd

from core.errors import EXIT_OK
from modules.base import BaseModule, CommandSpec
from modules.data.model_file import load_model
from modules.data.module import add_input_arguments, load_cohort
from modules.decision.rule import apply_model

logger = logging.getLogger(__name__)


class DecisionModule(BaseModule):
    """
    Модуль решений.
    Применяет обученную модель к новым данным.
    """

    def __init__(self):
        super().__init__(
            name="decision",
            description="Randomized group-wise thresholding of scores",
        )

    def get_handlers(self) -> List[CommandSpec]:
        return [CommandSpec("apply", "apply a fitted model to a scored CSV", self._configure, self.apply_command)]

    def _configure(self, parser: argparse.ArgumentParser) -> None:
        add_input_arguments(parser)
        parser.add_argument("--model", required=True)
        parser.add_argument("--out", required=True, help="output CSV")
        parser.add_argument("--seed", type=int, default=0, help="seed of the sampled labels")

    def apply_command(self, args: argparse.Namespace) -> int:
        model = load_model(args.model)
        result = load_cohort(
            args,
            require_sensitive=model.criterion.is_parity,
            group_labels=model.group_labels,
        )
        decisions = apply_model(result.cohort, model, seed=args.seed)
        output = pd.concat([result.frame, decisions[["theta", "q", "decision"]]], axis=1)
        output.to_csv(args.out, index=False)
        print(f"{len(output)} decisions written to {args.out}, mean q = {decisions['q'].mean():.6f}")
        return EXIT_OK


# Глобальный экземпляр
decision_module = DecisionModule()
