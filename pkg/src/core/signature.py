"""Signature transform of streams via the Chen fold"""
from typing import Optional, Sequence, Union

import numpy as np

from src.core.parallel import parallel_map
from src.core.tensor_algebra import (
    Levels,
    exp_levels,
    mul_levels,
    tensor_exp,
    tensor_mul,
)
from src.domain.exceptions import NumericalError, ShapeError
from src.domain.models import Stream, StreamBatch, TruncatedTensor


def sig_dim(channels: int, depth: int, include_constant: bool = True) -> int:
    """Number of scalars in a depth-N signature over R^d"""
    if channels < 1 or depth < 0:
        raise ValueError("sig_dim needs channels >= 1 and depth >= 0")
    total = sum(channels ** k for k in range(depth + 1))
    return total if include_constant else total - 1


def check_paths(paths: np.ndarray, depth: int) -> np.ndarray:
    paths = np.asarray(paths, dtype=np.float64)
    if paths.ndim < 2:
        raise ShapeError(f"paths must have shape (..., n, d), got {paths.shape}")
    if paths.shape[-2] < 2:
        raise ValueError("the signature needs a stream of length at least 2")
    if depth < 1:
        raise ValueError("signature depth must be at least 1")
    if not np.all(np.isfinite(paths)):
        raise NumericalError("stream contains non-finite values")
    return paths


def signature_levels(paths: np.ndarray, depth: int) -> Levels:
    """Batched signature: (..., n, d) -> levels shaped (..., d^k)

    Left fold exp(dx_1) (x) exp(dx_2) (x) ... over the increments.
    """
    paths = check_paths(paths, depth)
    exps = exp_levels(np.diff(paths, axis=-2), depth)
    current = [level[..., 0, :] for level in exps]
    for i in range(1, paths.shape[-2] - 1):
        current = mul_levels(current, [level[..., i, :] for level in exps])
    return current


def flatten_levels(levels: Levels) -> np.ndarray:
    """Levels 1..N concatenated (constant term dropped), shape (..., sig_dim - 1)"""
    return np.concatenate(levels[1:], axis=-1)


def split_flat(flat: np.ndarray, channels: int, depth: int, constant: float = 1.0) -> Levels:
    """Inverse of flatten_levels; the constant level is filled with `constant`"""
    flat = np.asarray(flat, dtype=np.float64)
    expected = sig_dim(channels, depth, include_constant=False)
    if flat.shape[-1] != expected:
        raise ShapeError(f"expected {expected} trailing entries for d={channels}, N={depth}, got {flat.shape[-1]}")
    levels, offset = [np.full(flat.shape[:-1] + (1,), constant)], 0
    for k in range(1, depth + 1):
        levels.append(flat[..., offset:offset + channels ** k])
        offset += channels ** k
    return levels


def signature(x: Stream, depth: int) -> TruncatedTensor:
    """Truncated signature of a piecewise-linear stream; the time grid is ignored"""
    levels = signature_levels(x.points, depth)
    return TruncatedTensor(channels=x.channels, depth=depth, levels=tuple(levels))


def batch_signature(
    batch: Union[StreamBatch, Sequence[Stream]],
    depth: int,
    threads: int = 1,
) -> list[TruncatedTensor]:
    """Independent per-stream signatures, optionally evaluated on a thread pool"""
    streams = list(batch)
    return parallel_map(lambda stream: signature(stream, depth), streams, threads)


def update_signature(sig: TruncatedTensor, prev_point, new_point) -> TruncatedTensor:
    """Extend a signature by one linear segment: sig (x) exp(new - prev)"""
    prev_point = np.atleast_1d(np.asarray(prev_point, dtype=np.float64))
    new_point = np.atleast_1d(np.asarray(new_point, dtype=np.float64))
    if prev_point.shape != (sig.channels,) or new_point.shape != (sig.channels,):
        raise ShapeError(
            f"points must have {sig.channels} entries, got {prev_point.shape} and {new_point.shape}"
        )
    return tensor_mul(sig, tensor_exp(new_point - prev_point, sig.depth))


def time_grid(x: Stream) -> np.ndarray:
    if x.times is not None:
        return np.asarray(x.times)
    if x.length == 1:
        return np.zeros(1)
    return np.arange(x.length) / (x.length - 1)


def time_augment(x: Stream) -> Stream:
    """Prepend the time coordinate as channel 0"""
    grid = time_grid(x)
    return Stream(points=np.column_stack([grid, x.points]), times=x.times)


def time_augment_array(values: np.ndarray, times: Optional[np.ndarray] = None) -> np.ndarray:
    """(n,) or (..., n, d) values -> (..., n, d + 1) with the uniform grid unless given"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[-2]
    grid = np.arange(n) / (n - 1) if times is None else np.asarray(times, dtype=np.float64)
    grid = np.broadcast_to(grid, values.shape[:-1])[..., None]
    return np.concatenate([grid, values], axis=-1)


def flatten_nonconstant(sig: TruncatedTensor) -> np.ndarray:
    """Levels 1..N in level order, each row-major"""
    return flatten_levels(list(sig.levels))


def unflatten_nonconstant(flat: Sequence[float], channels: int, depth: int) -> TruncatedTensor:
    """Rebuild a signature-like tensor (constant term 1) from flatten_nonconstant output"""
    levels = split_flat(np.asarray(flat, dtype=np.float64), channels, depth)
    return TruncatedTensor(channels=channels, depth=depth, levels=tuple(levels))
