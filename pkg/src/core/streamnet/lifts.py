"""Lifts of a stream to a stream of streams, and the stream-wise signature"""
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.core.autodiff import SignatureTape
from src.core.signature import sig_dim, split_flat
from src.domain.exceptions import ShapeError
from src.domain.models import Stream

LiftKind = Literal["expanding", "block", "sliding", "trivial"]
LIFT_KINDS = ("expanding", "block", "sliding", "trivial")


@dataclass(frozen=True)
class Lift:
    """expanding: prefixes; block: disjoint pairs; sliding: windows of `window`; trivial: the stream"""
    kind: LiftKind = "trivial"
    window: int = 3

    def __post_init__(self):
        if self.kind not in LIFT_KINDS:
            raise ValueError(f"unknown lift '{self.kind}', expected one of {LIFT_KINDS}")
        if self.window < 2:
            raise ValueError("sliding window must cover at least 2 points")

    @property
    def min_length(self) -> int:
        return self.window if self.kind == "sliding" else 2

    def output_length(self, n: int) -> int:
        return {
            "expanding": n - 1,
            "block": n // 2,
            "sliding": n - self.window + 1,
            "trivial": 1,
        }[self.kind]

    def spans(self, n: int) -> list[tuple[int, int]]:
        """[start, stop) of each lifted stream"""
        self.check_length(n)
        if self.kind == "expanding":
            return [(0, stop) for stop in range(2, n + 1)]
        if self.kind == "block":
            return [(2 * j, 2 * j + 2) for j in range(n // 2)]
        if self.kind == "sliding":
            return [(j, j + self.window) for j in range(n - self.window + 1)]
        return [(0, n)]

    def check_length(self, n: int) -> None:
        if n < self.min_length:
            raise ShapeError(f"{self.kind} lift needs streams of length >= {self.min_length}, got {n}")


def apply_lift(lift: Lift, x: Stream) -> list[Stream]:
    """The sequence of streams the lift produces"""
    return [
        Stream(points=x.points[start:stop], times=None if x.times is None else x.times[start:stop])
        for start, stop in lift.spans(x.length)
    ]


class LiftedSignature:
    """Differentiable Sig^N o lift over (b, n, c) batches; output is (b, v, sig_dim(c, N) - 1)"""

    def __init__(self, lift: Lift, depth: int, channels: int):
        if depth < 1:
            raise ValueError("signature depth must be at least 1")
        self.lift = lift
        self.depth = depth
        self.channels = channels

    @property
    def out_channels(self) -> int:
        return sig_dim(self.channels, self.depth, include_constant=False)

    def _index(self, n: int) -> np.ndarray:
        return np.array([np.arange(start, stop) for start, stop in self.lift.spans(n)])

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        n = x.shape[1]
        self.lift.check_length(n)
        if self.lift.kind == "expanding":
            tape = SignatureTape(x, self.depth)
            return tape.prefix_flat(), (tape, None, n)
        index = self._index(n)
        tape = SignatureTape(x[:, index, :], self.depth)
        return tape.flat(), (tape, index, n)

    def backward(self, cache: tuple, grad_y: np.ndarray) -> np.ndarray:
        tape, index, n = cache
        if index is None:
            return tape.backward(grad_prefix_flat=grad_y)
        grad_windows = tape.backward(grad_levels=split_flat(grad_y, self.channels, self.depth, constant=0.0))
        grad_x = np.zeros((grad_y.shape[0], n, self.channels))
        np.add.at(grad_x, (slice(None), index), grad_windows)
        return grad_x


def sig_of_lift(lift: Lift, x: Stream, depth: int) -> Stream:
    """Stream whose i-th point is the flattened signature of the i-th lifted stream"""
    y, _ = LiftedSignature(lift, depth, x.channels).forward(x.points[None])
    return Stream(points=y[0])
