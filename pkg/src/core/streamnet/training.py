"""Mini-batch regression training for deep signature models"""
import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field

from src.core.optim import AdamConfig
from src.core.streamnet.model import DeepSigModel
from src.core.streamnet.params import ModelParams, adam_step
from src.domain.exceptions import NumericalError

logger = logging.getLogger(__name__)


class TrainingConfig(BaseModel):
    """Optimizer and schedule for supervised training"""
    epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=128, ge=1)
    adam: AdamConfig = Field(default_factory=lambda: AdamConfig(lr=1e-3))
    seed: int = 0
    log_every: int = Field(default=10, ge=1)


@dataclass
class TrainingHistory:
    train_mse: list[float] = field(default_factory=list)
    test_mse: list[float] = field(default_factory=list)


def mse_loss(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. the prediction"""
    residual = prediction - target
    return float(np.mean(residual * residual)), 2.0 * residual / residual.size


def predict(model: DeepSigModel, params: ModelParams, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Scalar model outputs for a (b, n, c) batch, evaluated in chunks"""
    outputs = [model.forward(params, x[start:start + batch_size])[0] for start in range(0, len(x), batch_size)]
    return np.concatenate(outputs, axis=0).reshape(len(x))


def evaluate_mse(model: DeepSigModel, params: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    loss, _ = mse_loss(predict(model, params, x), y)
    return loss


def train_regressor(
    model: DeepSigModel,
    params: ModelParams,
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    config: TrainingConfig,
) -> tuple[ModelParams, TrainingHistory]:
    """Adam on the MSE loss; batches follow a seeded shuffle each epoch

    The per-epoch train MSE is the sample-weighted mean of the batch losses.
    """
    rng = np.random.default_rng(config.seed)
    history = TrainingHistory()
    n = len(train_x)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            index = order[start:start + config.batch_size]
            output, caches = model.forward(params, train_x[index])
            loss, grad = mse_loss(output.reshape(len(index)), train_y[index])
            if not np.isfinite(loss):
                raise NumericalError(f"training loss became non-finite in epoch {epoch}")
            grads, _ = model.backward(params, caches, grad.reshape(output.shape))
            params = adam_step(params, grads, config.adam)
            total += loss * len(index)
        history.train_mse.append(total / n)
        history.test_mse.append(evaluate_mse(model, params, test_x, test_y))
        if epoch % config.log_every == 0 or epoch == config.epochs:
            logger.info(
                f"epoch {epoch}/{config.epochs}: train MSE {history.train_mse[-1]:.4e}, "
                f"test MSE {history.test_mse[-1]:.4e}"
            )
    return params, history
