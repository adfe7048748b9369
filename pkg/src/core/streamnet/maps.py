"""Stream-preserving neural maps: pointwise, strided window and recurrent"""
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from src.core.streamnet.layers import MLP, Dense
from src.core.streamnet.params import ModelParams, ParamSpace
from src.domain.exceptions import ShapeError
from src.domain.models import Stream


class StreamMap(ABC):
    """Maps a (b, n, d) batch of streams to a (b, n', c) batch

    With `preserve_original` the input point aligned with each output point (the
    last point each output has seen) is prepended to that output's channels.
    """
    kind: str = ""

    def __init__(self, in_channels: int, preserve_original: bool = False):
        self.in_channels = in_channels
        self.preserve_original = preserve_original

    @property
    @abstractmethod
    def features(self) -> int:
        """Channels produced by the network itself"""

    @property
    def out_channels(self) -> int:
        return self.features + (self.in_channels if self.preserve_original else 0)

    @property
    def min_length(self) -> int:
        return 1

    @abstractmethod
    def output_length(self, n: int) -> int:
        pass

    @abstractmethod
    def _aligned(self, n: int) -> np.ndarray:
        """Index of the input point aligned with each output point"""

    @abstractmethod
    def _forward(self, params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, object]:
        pass

    @abstractmethod
    def _backward(self, params: ModelParams, cache, grad_y: np.ndarray, grads: np.ndarray, n: int) -> np.ndarray:
        pass

    def check_input(self, x: np.ndarray) -> None:
        if x.ndim != 3 or x.shape[-1] != self.in_channels:
            raise ShapeError(f"{self.kind} map expects (b, n, {self.in_channels}) input, got {x.shape}")
        if x.shape[1] < self.min_length:
            raise ShapeError(f"{self.kind} map needs streams of length >= {self.min_length}, got {x.shape[1]}")

    def forward(self, params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        self.check_input(x)
        y, cache = self._forward(params, x)
        if self.preserve_original:
            y = np.concatenate([x[:, self._aligned(x.shape[1]), :], y], axis=-1)
        return y, (cache, x.shape[1])

    def backward(self, params: ModelParams, cache: tuple, grad_y: np.ndarray, grads: np.ndarray) -> np.ndarray:
        inner, n = cache
        if self.preserve_original:
            grad_kept, grad_y = grad_y[..., :self.in_channels], grad_y[..., self.in_channels:]
        grad_x = self._backward(params, inner, grad_y, grads, n)
        if self.preserve_original:
            np.add.at(grad_x, (slice(None), self._aligned(n)), grad_kept)
        return grad_x


class PointwiseMap(StreamMap):
    """x_i -> net(x_i); without a network this is the identity"""
    kind = "pointwise"

    def __init__(
        self,
        space: Optional[ParamSpace],
        name: str,
        in_channels: int,
        hidden: Sequence[int] = (),
        out_features: Optional[int] = None,
        preserve_original: bool = False,
        final_activation: str = "identity",
    ):
        super().__init__(in_channels, preserve_original)
        self.net = None
        if out_features is not None:
            self.net = MLP(space, name, in_channels, hidden, out_features, final_activation=final_activation)
        elif preserve_original:
            raise ValueError("the identity map cannot also preserve the original stream")

    @property
    def features(self) -> int:
        return self.in_channels if self.net is None else self.net.out_features

    def output_length(self, n: int) -> int:
        return n

    def _aligned(self, n: int) -> np.ndarray:
        return np.arange(n)

    def _forward(self, params, x):
        if self.net is None:
            return x, None
        return self.net.forward(params, x)

    def _backward(self, params, cache, grad_y, grads, n):
        if self.net is None:
            return grad_y.copy()
        return self.net.backward(params, cache, grad_y, grads)


class WindowedMap(StreamMap):
    """Sweeps a network over windows of m points taken every s points"""
    kind = "windowed"

    def __init__(
        self,
        space: ParamSpace,
        name: str,
        in_channels: int,
        window: int,
        stride: int = 1,
        hidden: Sequence[int] = (),
        out_features: int = 1,
        preserve_original: bool = False,
    ):
        if window < 1 or stride < 1:
            raise ValueError("window and stride must be positive")
        super().__init__(in_channels, preserve_original)
        self.window = window
        self.stride = stride
        self.net = MLP(space, name, in_channels * window, hidden, out_features)

    @property
    def features(self) -> int:
        return self.net.out_features

    @property
    def min_length(self) -> int:
        return self.window

    def output_length(self, n: int) -> int:
        return (n - self.window) // self.stride + 1

    def _index(self, n: int) -> np.ndarray:
        starts = np.arange(self.output_length(n)) * self.stride
        return starts[:, None] + np.arange(self.window)[None, :]

    def _aligned(self, n: int) -> np.ndarray:
        return self._index(n)[:, -1]

    def _forward(self, params, x):
        b, n, d = x.shape
        windows = x[:, self._index(n), :].reshape(b, -1, self.window * d)
        return self.net.forward(params, windows)

    def _backward(self, params, cache, grad_y, grads, n):
        grad_windows = self.net.backward(params, cache, grad_y, grads)
        b = grad_windows.shape[0]
        grad_x = np.zeros((b, n, self.in_channels))
        grad_windows = grad_windows.reshape(b, -1, self.window, self.in_channels)
        np.add.at(grad_x, (slice(None), self._index(n)), grad_windows)
        return grad_x


class RecurrentMap(StreamMap):
    """state_k = tanh(W [x_k, ..., x_{k+m-1}, state_{k-1}] + b) with state_0 = 0"""
    kind = "recurrent"

    def __init__(
        self,
        space: ParamSpace,
        name: str,
        in_channels: int,
        window: int = 1,
        state_size: int = 8,
        preserve_original: bool = False,
    ):
        if window < 1 or state_size < 1:
            raise ValueError("window and state size must be positive")
        super().__init__(in_channels, preserve_original)
        self.window = window
        self.state_size = state_size
        self.cell = Dense(space, f"{name}.cell", in_channels * window + state_size, state_size)

    @property
    def features(self) -> int:
        return self.state_size

    @property
    def min_length(self) -> int:
        return self.window

    def output_length(self, n: int) -> int:
        return n - self.window + 1

    def _aligned(self, n: int) -> np.ndarray:
        return np.arange(self.output_length(n)) + self.window - 1

    def _forward(self, params, x):
        b, n, d = x.shape
        state = np.zeros((b, self.state_size))
        inputs, states = [], []
        for k in range(self.output_length(n)):
            inp = np.concatenate([x[:, k:k + self.window, :].reshape(b, -1), state], axis=-1)
            state = np.tanh(self.cell.forward(params, inp))
            inputs.append(inp)
            states.append(state)
        return np.stack(states, axis=1), (inputs, states)

    def _backward(self, params, cache, grad_y, grads, n):
        inputs, states = cache
        b = grad_y.shape[0]
        width = self.window * self.in_channels
        grad_x = np.zeros((b, n, self.in_channels))
        grad_state = np.zeros((b, self.state_size))
        for k in range(len(states) - 1, -1, -1):
            grad_pre = (grad_y[:, k, :] + grad_state) * (1.0 - states[k] ** 2)
            grad_inp = self.cell.backward(params, inputs[k], grad_pre, grads)
            grad_x[:, k:k + self.window, :] += grad_inp[:, :width].reshape(b, self.window, self.in_channels)
            grad_state = grad_inp[:, width:]
        return grad_x


def apply_stream_map(phi: StreamMap, params: ModelParams, x: Stream) -> Stream:
    """Apply a stream map to a single stream"""
    if x.length < phi.min_length:
        raise ShapeError(f"stream of length {x.length} is shorter than the {phi.kind} window {phi.min_length}")
    y, _ = phi.forward(params, x.points[None])
    return Stream(points=y[0])
