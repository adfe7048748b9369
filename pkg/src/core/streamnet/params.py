"""Flat parameter storage with named segments"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.core.optim import AdamConfig, AdamState, adam_update
from src.domain.exceptions import NumericalError


@dataclass
class ModelParams:
    """Flat parameter vector, its named segments and Adam moment buffers"""
    values: np.ndarray
    segments: dict[str, tuple[int, tuple[int, ...]]]
    adam: AdamState = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        total = sum(math.prod(shape) for _, shape in self.segments.values())
        if total != self.values.size:
            raise ValueError(f"segments cover {total} entries but the vector has {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            bad = [name for name in self.segments if not np.all(np.isfinite(self.view(name)))]
            raise NumericalError(f"non-finite parameters in {', '.join(bad)}")
        if self.adam is None:
            self.adam = AdamState.zeros(self.values.size)

    @property
    def size(self) -> int:
        return self.values.size

    def view(self, name: str, buffer: Optional[np.ndarray] = None) -> np.ndarray:
        """Segment `name` of `buffer` (the parameters themselves by default), reshaped"""
        buffer = self.values if buffer is None else buffer
        offset, shape = self.segments[name]
        return buffer[offset:offset + math.prod(shape)].reshape(shape)

    def zeros(self) -> np.ndarray:
        """Gradient buffer laid out like the parameters"""
        return np.zeros_like(self.values)

    def with_values(self, values: np.ndarray) -> "ModelParams":
        return ModelParams(values=np.array(values, dtype=np.float64), segments=self.segments)

    def segment_table(self) -> list[dict]:
        return [
            {"name": name, "offset": offset, "shape": list(shape)}
            for name, (offset, shape) in self.segments.items()
        ]

    def nonfinite_segments(self, buffer: np.ndarray) -> list[str]:
        return [name for name in self.segments if not np.all(np.isfinite(self.view(name, buffer)))]


class ParamSpace:
    """Registry that layers use to claim parameter segments at construction time"""

    def __init__(self):
        self._segments: dict[str, tuple[int, tuple[int, ...]]] = {}
        self._fan_in: dict[str, int] = {}
        self._size = 0

    def register(self, name: str, shape: tuple[int, ...], fan_in: int) -> str:
        if name in self._segments:
            raise ValueError(f"parameter segment '{name}' registered twice")
        self._segments[name] = (self._size, tuple(shape))
        self._fan_in[name] = max(fan_in, 1)
        self._size += math.prod(shape)
        return name

    @property
    def size(self) -> int:
        return self._size

    @property
    def segments(self) -> dict[str, tuple[int, tuple[int, ...]]]:
        return dict(self._segments)

    def initialize(self, seed: int) -> ModelParams:
        """Uniform in +-sqrt(1/fan_in), drawn segment by segment in registration order"""
        rng = np.random.default_rng(seed)
        values = np.empty(self._size)
        for name, (offset, shape) in self._segments.items():
            bound = math.sqrt(1.0 / self._fan_in[name])
            count = math.prod(shape)
            values[offset:offset + count] = rng.uniform(-bound, bound, size=count)
        return ModelParams(values=values, segments=self.segments)


def adam_step(params: ModelParams, grads: np.ndarray, config: AdamConfig) -> ModelParams:
    """Standard bias-corrected Adam update returning new parameters"""
    values, state = adam_update(params.values, grads, params.adam, config)
    return ModelParams(values=values, segments=params.segments, adam=state)
