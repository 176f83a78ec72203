"""
Модуль оракулов: команды oracle-check, bayes-rule и synth
"""
import argparse
import logging
from typing import List

import pandas as pd

from config.settings import DEFAULT_COLUMNS
from core.errors import EXIT_OK, UsageError
from modules.base import BaseModule, CommandSpec
from modules.data.module import add_input_arguments, load_cohort
from modules.decision.rule import decide_cohort
from modules.metrics.bias import residual_bias
from modules.objective.smoothing import SmoothedObjectiveParams, objective_value
from modules.optimizer.module import (
    add_criterion_arguments,
    add_sgd_arguments,
    criterion_from_args,
    sgd_config_from_args,
)
from modules.optimizer.sgd import build_context, fit, suboptimality_bound, tuned_suboptimality_bound
from modules.oracle.bayes import AffineConstraint, bayes_optimal_discrete, load_instance
from modules.oracle.qp import fit_exact
from modules.oracle.synth import load_synth_spec, synthesize

logger = logging.getLogger(__name__)


class OracleModule(BaseModule):
    """
    Модуль оракулов.
    Точные решения для проверки обучения и синтетические данные.
    """

    def __init__(self):
        super().__init__(
            name="oracle",
            description="Exact dual solutions, Bayes-optimal fair rules and synthetic cohorts",
        )

    def get_handlers(self) -> List[CommandSpec]:
        return [
            CommandSpec("oracle-check", "compare an SGD fit with the exact optimum", self._configure_check, self.check_command),
            CommandSpec("bayes-rule", "Bayes-optimal fair rule of a discrete instance", self._configure_bayes, self.bayes_command),
            CommandSpec("synth", "generate a synthetic scored cohort", self._configure_synth, self.synth_command),
        ]

    def _configure_check(self, parser: argparse.ArgumentParser) -> None:
        add_input_arguments(parser)
        add_criterion_arguments(parser)
        add_sgd_arguments(parser)

    def check_command(self, args: argparse.Namespace) -> int:
        cohort = load_cohort(args, require_sensitive=args.criterion == "parity").cohort
        criterion = criterion_from_args(args, cohort)
        config = sgd_config_from_args(args)

        model, trace = fit(cohort, criterion, args.gamma, config)
        exact = fit_exact(cohort, criterion, args.gamma)
        params = SmoothedObjectiveParams(gamma=args.gamma, b=criterion.b)
        context = build_context(cohort, criterion, args.gamma)
        optimum = objective_value(exact.mu, cohort, params, context)
        gap = trace.final_objective - optimum

        if config.learning_rate == "auto":
            bound = tuned_suboptimality_bound(cohort.group_count, config.steps, args.gamma, params.b)
        else:
            bound = suboptimality_bound(trace.learning_rate, cohort.group_count, config.steps, args.gamma, params.b)

        print(f"F(mu_bar) = {trace.final_objective!r}")
        print(f"F(mu_star) = {optimum!r}")
        print(f"gap = {gap!r}")
        print(f"bound = {bound!r}")
        if criterion.is_parity:
            for label, sgd_r, exact_r in zip(
                cohort.group_labels,
                residual_bias(cohort, decide_cohort(cohort, model), model),
                residual_bias(cohort, decide_cohort(cohort, exact), exact),
            ):
                print(f"residual[{label}] = {sgd_r:.6g} (exact {exact_r:.6g})")
        if gap > bound:
            logger.warning(f"Suboptimality gap {gap:.6g} exceeds the expected bound {bound:.6g}")
        return EXIT_OK

    def _configure_bayes(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--instance", required=True, help="mass eta gamma_x group per line")
        parser.add_argument("--criterion", choices=("parity", "equality", "none"), default="parity")
        parser.add_argument("--rate", type=float, default=None, help="predictive equality rate")
        parser.add_argument("--center", type=float, default=None, help="fixed parity center instead of rho_k")

    def bayes_command(self, args: argparse.Namespace) -> int:
        instance = load_instance(args.instance)
        if args.criterion == "parity":
            constraint = AffineConstraint.statistical_parity(instance, center=args.center)
        elif args.criterion == "equality":
            if args.rate is None:
                raise UsageError("--criterion equality needs --rate")
            constraint = AffineConstraint.predictive_equality(instance, args.rate)
        else:
            constraint = AffineConstraint.unconstrained(instance)

        # a fixed center can rule out every constant rule while fair rules still exist
        rule = bayes_optimal_discrete(instance, constraint, require_constant=args.center is None)
        for k, (t, tau) in enumerate(zip(rule.thresholds, rule.randomization)):
            print(f"group {k}: threshold = {t!r}, randomization = {tau!r}")
        for i, q in enumerate(rule.probabilities):
            print(f"p(f=1 | x_{i}) = {q:.8f}")
        print(f"error = {rule.error!r}")
        return EXIT_OK

    def _configure_synth(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--spec", required=True, help="key-value synthesis spec")
        parser.add_argument("--n", type=int, required=True)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", required=True)

    def synth_command(self, args: argparse.Namespace) -> int:
        spec = load_synth_spec(args.spec)
        cohort = synthesize(spec, args.n, seed=args.seed)
        frame = pd.DataFrame(
            {
                DEFAULT_COLUMNS["score"]: cohort.scores,
                DEFAULT_COLUMNS["group"]: [cohort.group_labels[k] for k in cohort.group_ids],
                DEFAULT_COLUMNS["sensitive"]: cohort.sensitive,
                DEFAULT_COLUMNS["label"]: cohort.labels,
            }
        )
        frame.to_csv(args.out, index=False)
        print(f"{len(frame)} examples written to {args.out}")
        return EXIT_OK


# Глобальный экземпляр
oracle_module = OracleModule()
