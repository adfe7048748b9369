"""Central finite-difference validation of analytic gradients"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from src.core.autodiff import SignatureTape
from src.core.streamnet.model import DeepSigModel
from src.core.streamnet.params import ModelParams
from src.domain.exceptions import GradientCheckError

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckResult:
    name: str
    max_error: float
    checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_error": self.max_error,
            "checked": self.checked,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def relative_errors(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """|a - f| / max(|a|, |f|) on entries where either side exceeds `floor`; the rest score 0"""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    magnitude = np.maximum(np.abs(analytic), np.abs(numeric))
    compared = magnitude > floor
    errors = np.zeros_like(magnitude)
    errors[compared] = np.abs(analytic - numeric)[compared] / magnitude[compared]
    return errors


def finite_difference_check(
    name: str,
    loss: Callable[[np.ndarray], float],
    values: np.ndarray,
    analytic: np.ndarray,
    coordinates: Sequence[int],
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradCheckResult:
    """Compare analytic[j] against (loss(v + h e_j) - loss(v - h e_j)) / 2h for j in coordinates"""
    values = np.array(values, dtype=np.float64).ravel()
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    coordinates = np.asarray(coordinates, dtype=np.int64)
    numeric = np.empty(len(coordinates))
    for i, j in enumerate(coordinates):
        original = values[j]
        values[j] = original + step
        upper = loss(values)
        values[j] = original - step
        lower = loss(values)
        values[j] = original
        numeric[i] = (upper - lower) / (2.0 * step)
    errors = relative_errors(analytic[coordinates], numeric)
    result = GradCheckResult(name=name, max_error=float(np.max(errors, initial=0.0)),
                             checked=len(coordinates), tolerance=tolerance)
    logger.debug(f"gradient check '{name}': max relative error {result.max_error:.3e} over {result.checked} entries")
    return result


def check_signature_gradient(
    n: int,
    channels: int,
    depth: int,
    seed: int = 0,
    step: float = DEFAULT_STEP,
    tolerance: float = 1e-5,
) -> GradCheckResult:
    """signature vjp against finite differences of <cotangent, Sig^N(x)> on a random stream"""
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(n, channels))
    tape = SignatureTape(points, depth)
    cotangent = [np.zeros(1)] + [rng.normal(size=channels ** k) for k in range(1, depth + 1)]
    analytic = tape.backward(grad_levels=cotangent)

    def loss(flat: np.ndarray) -> float:
        levels = SignatureTape(flat.reshape(n, channels), depth).levels
        return float(sum(np.dot(c, level) for c, level in zip(cotangent[1:], levels[1:])))

    return finite_difference_check(
        f"signature n={n} d={channels} N={depth}",
        loss,
        points,
        analytic,
        range(points.size),
        step,
        tolerance,
    )


def signature_gradient_sweep(
    lengths: Sequence[int] = tuple(range(2, 9)),
    channels: Sequence[int] = (1, 2, 3),
    depths: Sequence[int] = (1, 2, 3, 4, 5),
    seed: int = 0,
    tolerance: float = 1e-5,
) -> list[GradCheckResult]:
    results = []
    for i, (n, d, depth) in enumerate((n, d, depth) for n in lengths for d in channels for depth in depths):
        results.append(check_signature_gradient(n, d, depth, seed=seed + i, tolerance=tolerance))
    return results


def check_model_gradients(
    model: DeepSigModel,
    params: ModelParams,
    x: np.ndarray,
    samples: int = 50,
    seed: int = 0,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    name: Optional[str] = None,
) -> GradCheckResult:
    """Parameter gradients of <w, model(x)> for a random w, on `samples` random coordinates"""
    rng = np.random.default_rng(seed)
    output, caches = model.forward(params, x)
    weights = rng.normal(size=output.shape)
    grads, _ = model.backward(params, caches, weights)
    coordinates = rng.choice(params.size, size=min(samples, params.size), replace=False)

    def loss(values: np.ndarray) -> float:
        y, _ = model.forward(params.with_values(values), x)
        return float(np.sum(weights * y))

    return finite_difference_check(name or "model", loss, params.values, grads, coordinates, step, tolerance)


def gradient_gate(result: GradCheckResult) -> GradCheckResult:
    """Raise GradientCheckError unless the check passed"""
    if not result.passed:
        logger.error(f"Gradient check '{result.name}' failed: {result.max_error:.3e} > {result.tolerance:.1e}")
        raise GradientCheckError(f"gradient check '{result.name}' failed", result.max_error)
    logger.info(f"Gradient check '{result.name}' passed (max relative error {result.max_error:.3e})")
    return result
