"""Deep signature model: (stream map -> lift -> signature) blocks followed by a head"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from src.core.signature import sig_dim
from src.core.streamnet.layers import MLP
from src.core.streamnet.lifts import Lift, LiftedSignature
from src.core.streamnet.maps import StreamMap
from src.core.streamnet.params import ModelParams, ParamSpace
from src.domain.exceptions import NumericalError, ShapeError
from src.domain.models import Stream


class Head(ABC):
    """Final network applied to the output stream of the last block"""
    stream_preserving: bool = False

    def __init__(
        self,
        space: ParamSpace,
        name: str,
        in_channels: int,
        hidden: Sequence[int],
        out_features: int,
        final_activation: str = "identity",
    ):
        self.in_channels = in_channels
        self.out_features = out_features
        self.net = MLP(space, name, self._in_features(in_channels), hidden, out_features,
                       final_activation=final_activation)

    def _in_features(self, in_channels: int) -> int:
        return in_channels

    def check_length(self, n: int) -> None:
        pass

    @abstractmethod
    def forward(self, params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        pass

    @abstractmethod
    def backward(self, params: ModelParams, cache: tuple, grad_y: np.ndarray, grads: np.ndarray) -> np.ndarray:
        pass


class PointwiseHead(Head):
    """Same network on every point; the model stays stream-preserving"""
    stream_preserving = True

    def forward(self, params, x):
        y, cache = self.net.forward(params, x)
        return y, cache

    def backward(self, params, cache, grad_y, grads):
        return self.net.backward(params, cache, grad_y, grads)


class FlattenHead(Head):
    """Consumes a fixed-length stream by flattening it into one vector"""

    def __init__(self, space, name, in_channels, length, hidden, out_features, final_activation="identity"):
        self.length = length
        super().__init__(space, name, in_channels, hidden, out_features, final_activation)

    def _in_features(self, in_channels: int) -> int:
        return in_channels * self.length

    def check_length(self, n: int) -> None:
        if n != self.length:
            raise ShapeError(f"flatten head was built for streams of length {self.length}, got {n}")

    def forward(self, params, x):
        self.check_length(x.shape[1])
        y, cache = self.net.forward(params, x.reshape(x.shape[0], -1))
        return y, (cache, x.shape)

    def backward(self, params, cache, grad_y, grads):
        inner, shape = cache
        return self.net.backward(params, inner, grad_y, grads).reshape(shape)


class LastPointHead(Head):
    """Reads only the final point of the stream"""

    def forward(self, params, x):
        y, cache = self.net.forward(params, x[:, -1, :])
        return y, (cache, x.shape)

    def backward(self, params, cache, grad_y, grads):
        inner, shape = cache
        grad_x = np.zeros(shape)
        grad_x[:, -1, :] = self.net.backward(params, inner, grad_y, grads)
        return grad_x


@dataclass
class SignatureBlock:
    stream_map: StreamMap
    lift: Lift
    depth: int


class DeepSigModel:
    """Alternating stream maps and lifted signatures, then a head

    Channel counts are checked when the model is built; stream lengths are checked
    per call. Violations raise ShapeError carrying the failing block index, where
    the head counts as block len(blocks).
    """

    def __init__(self, space: ParamSpace, input_channels: int, blocks: Sequence[SignatureBlock], head: Head):
        self.space = space
        self.input_channels = input_channels
        self.blocks = list(blocks)
        self.head = head
        self.signatures = []
        channels = input_channels
        for i, block in enumerate(self.blocks):
            if block.stream_map.in_channels != channels:
                raise ShapeError(
                    f"stream map expects {block.stream_map.in_channels} channels, receives {channels}",
                    block_index=i,
                )
            signature = LiftedSignature(block.lift, block.depth, block.stream_map.out_channels)
            self.signatures.append(signature)
            channels = signature.out_channels
        if head.in_channels != channels:
            raise ShapeError(f"head expects {head.in_channels} channels, receives {channels}",
                             block_index=len(self.blocks))

    @staticmethod
    def signature_channels(channels: int, depth: int) -> int:
        return sig_dim(channels, depth, include_constant=False)

    @property
    def stream_preserving(self) -> bool:
        return self.head.stream_preserving

    @property
    def num_parameters(self) -> int:
        return self.space.size

    def init_params(self, seed: int) -> ModelParams:
        return self.space.initialize(seed)

    def output_length(self, n: int) -> Optional[int]:
        """Length of the output stream, None when the head consumes the stream"""
        for i, block in enumerate(self.blocks):
            if n < block.stream_map.min_length:
                raise ShapeError(f"stream of length {n} is shorter than the map window "
                                 f"{block.stream_map.min_length}", block_index=i)
            n = block.stream_map.output_length(n)
            if n < block.lift.min_length:
                raise ShapeError(f"stream of length {n} is too short for the {block.lift.kind} lift",
                                 block_index=i)
            n = block.lift.output_length(n)
        try:
            self.head.check_length(n)
        except ShapeError as e:
            raise ShapeError(str(e), block_index=len(self.blocks)) from e
        return n if self.stream_preserving else None

    def forward(self, params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, list]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[-1] != self.input_channels:
            raise ShapeError(f"model expects (b, n, {self.input_channels}) input, got {x.shape}", block_index=0)
        self.output_length(x.shape[1])
        caches = []
        for block, signature in zip(self.blocks, self.signatures):
            x, map_cache = block.stream_map.forward(params, x)
            x, sig_cache = signature.forward(x)
            caches.append((map_cache, sig_cache))
        y, head_cache = self.head.forward(params, x)
        caches.append(head_cache)
        return y, caches

    def backward(self, params: ModelParams, caches: list, grad_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cotangent on the output -> (parameter gradients, input cotangent)"""
        grads = params.zeros()
        grad_x = self.head.backward(params, caches[-1], grad_y, grads)
        for block, signature, (map_cache, sig_cache) in reversed(
            list(zip(self.blocks, self.signatures, caches[:-1]))
        ):
            grad_x = signature.backward(sig_cache, grad_x)
            grad_x = block.stream_map.backward(params, map_cache, grad_x, grads)
        bad = params.nonfinite_segments(grads)
        if bad:
            raise NumericalError(f"non-finite gradients in {', '.join(bad)}")
        return grads, grad_x


def _as_batch(x: Union[Stream, np.ndarray]) -> tuple[np.ndarray, bool]:
    if isinstance(x, Stream):
        return x.points[None], True
    return np.asarray(x, dtype=np.float64), False


def deep_sig_forward(model: DeepSigModel, params: ModelParams, x: Union[Stream, np.ndarray]):
    """Model output for one Stream (a Stream or a vector) or for a (b, n, c) batch"""
    batch, single = _as_batch(x)
    y, _ = model.forward(params, batch)
    if not single:
        return y
    return Stream(points=y[0]) if model.stream_preserving else y[0]


def deep_sig_backward(
    model: DeepSigModel,
    params: ModelParams,
    x: Union[Stream, np.ndarray],
    cotangent: np.ndarray,
) -> np.ndarray:
    """Gradient of <cotangent, model output> with respect to every parameter"""
    batch, single = _as_batch(x)
    y, caches = model.forward(params, batch)
    cotangent = np.asarray(cotangent, dtype=np.float64)
    if single:
        cotangent = cotangent[None]
    if cotangent.shape != y.shape:
        raise ShapeError(f"cotangent shape {cotangent.shape} does not match output {y.shape}")
    grads, _ = model.backward(params, caches, cotangent)
    return grads
