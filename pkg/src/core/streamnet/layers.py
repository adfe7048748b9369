"""Dense layers, activations and small MLPs with explicit adjoints"""
from typing import Sequence

import numpy as np

from src.core.streamnet.params import ModelParams, ParamSpace


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# name -> (forward, derivative expressed through (input, output))
ACTIVATIONS = {
    "identity": (lambda x: x, lambda x, y: np.ones_like(x)),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0.0).astype(np.float64)),
    "tanh": (np.tanh, lambda x, y: 1.0 - y * y),
    "sigmoid": (_sigmoid, lambda x, y: y * (1.0 - y)),
}


class Dense:
    """y = x W + b over the trailing axis"""

    def __init__(self, space: ParamSpace, name: str, in_features: int, out_features: int):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = space.register(f"{name}.weight", (in_features, out_features), fan_in=in_features)
        self.bias = space.register(f"{name}.bias", (out_features,), fan_in=in_features)

    def forward(self, params: ModelParams, x: np.ndarray) -> np.ndarray:
        return x @ params.view(self.weight) + params.view(self.bias)

    def backward(self, params: ModelParams, x: np.ndarray, grad_y: np.ndarray, grads: np.ndarray) -> np.ndarray:
        x2 = x.reshape(-1, self.in_features)
        g2 = grad_y.reshape(-1, self.out_features)
        params.view(self.weight, grads)[...] += x2.T @ g2
        params.view(self.bias, grads)[...] += g2.sum(axis=0)
        return grad_y @ params.view(self.weight).T


class MLP:
    """Dense stack; `activation` between layers, `final_activation` after the last"""

    def __init__(
        self,
        space: ParamSpace,
        name: str,
        in_features: int,
        hidden: Sequence[int],
        out_features: int,
        activation: str = "relu",
        final_activation: str = "identity",
    ):
        if activation not in ACTIVATIONS or final_activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation: {activation} / {final_activation}")
        sizes = [in_features, *hidden, out_features]
        self.in_features = in_features
        self.out_features = out_features
        self.layers = [Dense(space, f"{name}.{i}", a, b) for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))]
        self.activations = [activation] * (len(self.layers) - 1) + [final_activation]

    def forward(self, params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, list]:
        cache = []
        for layer, activation in zip(self.layers, self.activations):
            pre = layer.forward(params, x)
            post = ACTIVATIONS[activation][0](pre)
            cache.append((x, pre, post))
            x = post
        return x, cache

    def backward(self, params: ModelParams, cache: list, grad_y: np.ndarray, grads: np.ndarray) -> np.ndarray:
        for layer, activation, (x, pre, post) in reversed(list(zip(self.layers, self.activations, cache))):
            grad_pre = grad_y * ACTIVATIONS[activation][1](pre, post)
            grad_y = layer.backward(params, x, grad_pre, grads)
        return grad_y
