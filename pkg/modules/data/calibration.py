"""
Platt scaling of raw classifier margins.

    p(y = 1 | m) = 1 / (1 + exp(A m + B)),   score = 2 p - 1

A and B maximize the likelihood of the labels. Higher margins give higher
probabilities when A < 0.
"""
import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import expit, log_expit

from config.settings import CALIBRATION_GRAD_TOL, CALIBRATION_MAX_ITER
from core.errors import DataError
from utils import kv_format

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationParams:
    a: float
    b: float
    iterations: int = 0
    converged: bool = True

    def probabilities(self, margins: np.ndarray) -> np.ndarray:
        margins = np.asarray(margins, dtype=np.float64)
        return expit(-(self.a * margins + self.b))

    def apply(self, margins: np.ndarray) -> np.ndarray:
        """Scores 2 p - 1 in [-1, 1]"""
        return 2.0 * self.probabilities(margins) - 1.0

    def items(self):
        yield "calibration.a", float(self.a)
        yield "calibration.b", float(self.b)
        yield "calibration.iterations", int(self.iterations)
        yield "calibration.converged", bool(self.converged)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "CalibrationParams":
        return cls(
            a=kv_format.get_float(mapping, "calibration.a"),
            b=kv_format.get_float(mapping, "calibration.b"),
            iterations=kv_format.get_int(mapping, "calibration.iterations", 0),
            converged=mapping.get("calibration.converged", "true") == "true",
        )


def negative_log_likelihood(a: float, b: float, margins: np.ndarray, labels: np.ndarray) -> float:
    u = a * margins + b
    # log p = log_expit(-u), log(1 - p) = log_expit(u)
    return float(-np.sum(labels * log_expit(-u) + (1.0 - labels) * log_expit(u)))


def calibrate(
    margins: np.ndarray,
    labels: np.ndarray,
    max_iter: int = CALIBRATION_MAX_ITER,
    tol: float = CALIBRATION_GRAD_TOL,
) -> CalibrationParams:
    """
    Maximum-likelihood logistic fit by damped Newton iteration.

    Stops when the mean gradient norm drops to `tol` or after `max_iter`
    iterations; hitting the cap usually means the margins separate the labels.

    Raises:
        DataError: if either label has fewer than two examples
    """
    margins = np.asarray(margins, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if margins.shape != labels.shape:
        raise DataError("margins and labels differ in length")
    if not np.all(np.isfinite(margins)):
        raise DataError("margins must be finite")
    positives = int(np.sum(labels == 1.0))
    negatives = int(np.sum(labels == 0.0))
    if positives + negatives != labels.size:
        raise DataError("labels must be binary")
    if positives < 2 or negatives < 2:
        raise DataError(f"calibration needs two examples of each label, got {negatives} / {positives}")

    # separable margins have no finite maximizer, A keeps growing until the cap
    separable = bool(
        margins[labels == 0.0].max() < margins[labels == 1.0].min()
        or margins[labels == 1.0].max() < margins[labels == 0.0].min()
    )

    n = labels.size
    a, b = 0.0, float(np.log(negatives / positives))
    loss = negative_log_likelihood(a, b, margins, labels)
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        p = expit(-(a * margins + b))
        residual = labels - p
        grad = np.array([residual @ margins, residual.sum()])
        if not separable and np.linalg.norm(grad) / n <= tol:
            converged = True
            iterations -= 1
            break

        weight = p * (1.0 - p)
        hessian = np.array(
            [
                [weight @ (margins * margins), weight @ margins],
                [weight @ margins, weight.sum()],
            ]
        )
        hessian += 1e-12 * n * np.eye(2)
        step = np.linalg.solve(hessian, -grad)

        # halve the step until the likelihood improves
        scale = 1.0
        while scale > 1e-10:
            candidate = negative_log_likelihood(a + scale * step[0], b + scale * step[1], margins, labels)
            if candidate <= loss:
                break
            scale *= 0.5
        else:
            logger.warning("Calibration line search stalled")
            break
        a, b, loss = a + scale * step[0], b + scale * step[1], candidate
    else:
        p = expit(-(a * margins + b))
        gradient_norm = np.linalg.norm([(labels - p) @ margins, np.sum(labels - p)]) / n
        converged = not separable and gradient_norm <= tol

    if not converged:
        logger.warning(
            f"Calibration stopped after {iterations} iterations without converging "
            f"(A={a:.6g}); the margins may separate the labels"
        )
    logger.info(f"Calibration: A={a:.8g}, B={b:.8g}, iterations={iterations}")
    return CalibrationParams(a=float(a), b=float(b), iterations=iterations, converged=bool(converged))


def load_calibration(path) -> CalibrationParams:
    return CalibrationParams.from_mapping(kv_format.read(path))


def save_calibration(params: CalibrationParams, path) -> None:
    kv_format.write(path, params.items(), header="Platt scaling: p = 1 / (1 + exp(a * margin + b))")
