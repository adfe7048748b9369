"""Adam optimizer on flat parameter vectors"""
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field


class AdamConfig(BaseModel):
    """Adam hyperparameters"""
    lr: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)


@dataclass
class AdamState:
    """First/second moment buffers and the step counter"""
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(first_moment=np.zeros(size), second_moment=np.zeros(size), step=0)


def adam_update(
    values: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    config: AdamConfig,
    lr: float = None,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step; returns new arrays, inputs are left untouched"""
    if values.shape != grads.shape:
        raise ValueError(f"gradient shape {grads.shape} does not match parameters {values.shape}")
    lr = config.lr if lr is None else lr
    step = state.step + 1
    m = config.beta1 * state.first_moment + (1.0 - config.beta1) * grads
    v = config.beta2 * state.second_moment + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1 ** step)
    v_hat = v / (1.0 - config.beta2 ** step)
    new_values = values - lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return new_values, AdamState(first_moment=m, second_moment=v, step=step)
