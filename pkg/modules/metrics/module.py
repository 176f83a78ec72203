"""
Модуль метрик: команды audit и bound
"""
import argparse
import logging
from typing import List

import numpy as np

from core.errors import EXIT_OK
from modules.base import BaseModule, CommandSpec
from modules.data.model_file import load_model
from modules.data.module import add_input_arguments, load_cohort
from modules.metrics.bias import audit, reports_to_frame, reports_to_items
from modules.metrics.impossibility import ImpossibilityInput, impossibility_bound
from modules.oracle.bayes import load_instance
from utils import kv_format

logger = logging.getLogger(__name__)


class MetricsModule(BaseModule):
    """
    Модуль метрик.
    Аудит смещения до и после постобработки и нижняя граница компромисса.
    """

    def __init__(self):
        super().__init__(
            name="metrics",
            description="Bias audits and the accuracy-fairness lower bound",
        )

    def get_handlers(self) -> List[CommandSpec]:
        return [
            CommandSpec("audit", "per-group bias before and after post-processing", self._configure_audit, self.audit_command),
            CommandSpec("bound", "accuracy-fairness lower bound of a discrete instance", self._configure_bound, self.bound_command),
        ]

    def _configure_audit(self, parser: argparse.ArgumentParser) -> None:
        add_input_arguments(parser)
        parser.add_argument("--model", default=None, help="fitted model to audit")
        parser.add_argument("--out", required=True, help="key-value report")
        parser.add_argument("--csv", default=None, help="one row per stage and group")
        parser.add_argument(
            "--global-gamma",
            type=float,
            default=None,
            help="also audit a statistical parity fit that ignores the groups",
        )
        parser.add_argument("--sampled", action="store_true", help="audit sampled hard labels")
        parser.add_argument("--seed", type=int, default=0)

    def audit_command(self, args: argparse.Namespace) -> int:
        model = load_model(args.model) if args.model else None
        cohort = load_cohort(
            args,
            require_sensitive=True,
            group_labels=None if model is None else model.group_labels,
        ).cohort
        reports = audit(cohort, model, global_gamma=args.global_gamma, sampled=args.sampled, seed=args.seed)

        kv_format.write(args.out, reports_to_items(reports), header="bias report")
        if args.csv:
            reports_to_frame(reports).to_csv(args.csv, index=False)

        for report in reports:
            residuals = ", ".join(f"{g.label}={g.residual:.6g}" for g in report.groups)
            print(f"{report.stage}: error={report.error}, residual: {residuals}")
        return EXIT_OK

    def _configure_bound(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--instance", required=True, help="mass eta gamma_x group [prediction] per line")

    def bound_command(self, args: argparse.Namespace) -> int:
        instance = load_instance(args.instance)
        if instance.predictions is None:
            # Bayes classifier 1{eta > 1/2}
            predictions = (instance.eta > 0.5).astype(np.int8)
        else:
            predictions = instance.predictions
        result = impossibility_bound(ImpossibilityInput(instance.mass, instance.gamma_x, predictions))

        print(f"lower_bound = {result.lower_bound!r}")
        print(f"witness_lhs = {result.witness_lhs!r}")
        print(f"witness_partition = {','.join(str(int(w)) for w in result.witness_partition)}")
        return EXIT_OK


# Глобальный экземпляр
metrics_module = MetricsModule()
