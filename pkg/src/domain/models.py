"""Domain models for tensors, streams, gradients and experiment records"""
from dataclasses import dataclass
from typing import Any, Iterator, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.domain.exceptions import ShapeError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TruncatedTensor:
    """Element of the depth-N truncated tensor algebra over R^d

    Level k is stored flat with d^k entries in row-major multi-index order.
    """
    channels: int
    depth: int
    levels: tuple

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be at least 1")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if len(self.levels) != self.depth + 1:
            raise ShapeError(f"expected {self.depth + 1} levels, got {len(self.levels)}")
        levels = tuple(_frozen(np.ravel(level)) for level in self.levels)
        for k, level in enumerate(levels):
            if level.size != self.channels ** k:
                raise ShapeError(
                    f"level {k} must have {self.channels ** k} entries, got {level.size}"
                )
        object.__setattr__(self, "levels", levels)

    def level(self, k: int) -> np.ndarray:
        """Level k as a (d,)*k shaped array"""
        return self.levels[k].reshape((self.channels,) * k)

    @property
    def size(self) -> int:
        return sum(level.size for level in self.levels)

    def to_flat(self) -> list[float]:
        """Level-major, row-major flat list (JSON serialization)"""
        return np.concatenate(self.levels).tolist()

    @classmethod
    def from_flat(cls, values: Sequence[float], channels: int, depth: int) -> "TruncatedTensor":
        flat = np.asarray(values, dtype=np.float64)
        expected = sum(channels ** k for k in range(depth + 1))
        if flat.size != expected:
            raise ShapeError(f"expected {expected} values for d={channels}, N={depth}, got {flat.size}")
        levels, offset = [], 0
        for k in range(depth + 1):
            levels.append(flat[offset:offset + channels ** k])
            offset += channels ** k
        return cls(channels=channels, depth=depth, levels=tuple(levels))


@dataclass(frozen=True, eq=False)
class Stream:
    """Ordered sequence of n points in R^d with an optional time grid"""
    points: np.ndarray
    times: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2:
            raise ShapeError(f"stream points must be an n x d matrix, got shape {points.shape}")
        if points.shape[0] < 1 or points.shape[1] < 1:
            raise ShapeError("stream needs at least one point and one channel")
        object.__setattr__(self, "points", _frozen(points))
        if self.times is not None:
            times = np.asarray(self.times, dtype=np.float64).ravel()
            if times.size != points.shape[0]:
                raise ShapeError(f"times has {times.size} entries for {points.shape[0]} points")
            if np.any(np.diff(times) <= 0):
                raise ValueError("times must be strictly increasing")
            object.__setattr__(self, "times", _frozen(times))

    @property
    def length(self) -> int:
        return self.points.shape[0]

    @property
    def channels(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class StreamBatch:
    """b streams sharing length n and channel count d"""
    points: np.ndarray
    times: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 3:
            raise ShapeError(f"batch points must have shape (b, n, d), got {points.shape}")
        if points.shape[0] < 1:
            raise ShapeError("batch must contain at least one stream")
        object.__setattr__(self, "points", _frozen(points))
        if self.times is not None:
            times = np.broadcast_to(np.asarray(self.times, dtype=np.float64), points.shape[:2])
            if np.any(np.diff(times, axis=1) <= 0):
                raise ValueError("times must be strictly increasing")
            object.__setattr__(self, "times", _frozen(times))

    @classmethod
    def from_streams(cls, streams: Sequence[Stream]) -> "StreamBatch":
        if not streams:
            raise ShapeError("batch must contain at least one stream")
        shape = streams[0].points.shape
        for i, stream in enumerate(streams):
            if stream.points.shape != shape:
                raise ShapeError(f"stream {i} has shape {stream.points.shape}, expected {shape}")
        has_times = [stream.times is not None for stream in streams]
        if any(has_times) and not all(has_times):
            raise ShapeError("either every stream in a batch carries times or none does")
        times = np.stack([s.times for s in streams]) if all(has_times) else None
        return cls(points=np.stack([s.points for s in streams]), times=times)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, index: int) -> Stream:
        times = None if self.times is None else self.times[index]
        return Stream(points=self.points[index], times=times)

    def __iter__(self) -> Iterator[Stream]:
        for i in range(len(self)):
            yield self[i]

    @property
    def length(self) -> int:
        return self.points.shape[1]

    @property
    def channels(self) -> int:
        return self.points.shape[2]


@dataclass(frozen=True, eq=False)
class SigGradient:
    """Cotangent of a scalar loss with respect to every stream point"""
    per_point: np.ndarray

    def __post_init__(self):
        per_point = np.asarray(self.per_point, dtype=np.float64)
        if per_point.ndim != 2:
            raise ShapeError(f"gradient must be an n x d matrix, got shape {per_point.shape}")
        if not np.all(np.isfinite(per_point)):
            raise ValueError("gradient contains non-finite entries")
        object.__setattr__(self, "per_point", _frozen(per_point))


@dataclass
class InversionResult:
    """Outcome of recovering a stream from its truncated signature"""
    recovered: Stream
    loss_trace: list[float]
    final_loss: float
    iterations_used: int
    increment_rmse: Optional[float] = None

    def __post_init__(self):
        if not self.loss_trace:
            raise ValueError("loss trace cannot be empty")
        if self.final_loss != self.loss_trace[-1]:
            raise ValueError("final loss must equal the last trace entry")


class ProcessSpec(BaseModel):
    """Seeded description of one synthetic stochastic process sample on [0, 1]"""
    kind: Literal["brownian", "ou", "fbm"] = "brownian"
    length: int = Field(default=100, ge=2)
    seed: int = 0
    hurst: float = Field(default=0.5, gt=0.0, lt=1.0)
    theta: float = Field(default=8.0, gt=0.0)
    mu: float = 0.0
    sigma: float = Field(default=1.0, ge=0.0)
    x0: float = 0.0


class ExperimentReport(BaseModel):
    """Structured, regenerable record of an experiment run"""
    experiment: str
    config: dict[str, Any]
    seed: int
    loss_trace: dict[str, list[float]] = Field(default_factory=dict)
    metrics: dict[str, Any] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)
    version: str
    wall_clock_seconds: float = 0.0

    @model_validator(mode="after")
    def _check_traces(self) -> "ExperimentReport":
        for name, trace in self.loss_trace.items():
            if any(value != value for value in trace):
                raise ValueError(f"loss trace '{name}' contains NaN")
        return self
