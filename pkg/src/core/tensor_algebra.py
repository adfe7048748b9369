"""Dense truncated tensor algebra T^N(R^d)

Two layers live here. The private kernels (`mul_levels`, `exp_levels` and their
adjoints) work on plain lists of arrays where level k has shape (..., d^k) and any
leading batch dimensions broadcast elementwise; every batched signature computation
in the package is built from them. The public functions wrap single
`TruncatedTensor` values around the same kernels.
"""
import math
from typing import Sequence

import numpy as np

from src.domain.exceptions import ShapeError
from src.domain.models import TruncatedTensor

Levels = list  # list[np.ndarray], level k shaped (..., d**k)


def outer(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Flat outer product of the trailing axes, broadcasting leading axes"""
    lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    return (x[..., :, None] * y[..., None, :]).reshape(lead + (x.shape[-1] * y.shape[-1],))


def identity_levels(channels: int, depth: int, lead: tuple = ()) -> Levels:
    levels = [np.ones(lead + (1,))]
    levels.extend(np.zeros(lead + (channels ** k,)) for k in range(1, depth + 1))
    return levels


def mul_levels(a: Levels, b: Levels) -> Levels:
    """C_k = sum_j A_j (x) B_{k-j}, truncated at the common depth"""
    out = []
    for k in range(len(a)):
        acc = a[0] * b[k]
        for j in range(1, k + 1):
            acc = acc + outer(a[j], b[k - j])
        out.append(acc)
    return out


def mul_levels_vjp(a: Levels, b: Levels, grad: Levels) -> tuple[Levels, Levels]:
    """Adjoint of mul_levels with respect to both factors

    Level-0 cotangents are not propagated: every caller multiplies tensors whose
    constant term is fixed at 1.
    """
    depth = len(a) - 1
    grad_a = [np.zeros_like(level) for level in a]
    grad_b = [np.zeros_like(level) for level in b]
    for k in range(1, depth + 1):
        for j in range(k + 1):
            m = k - j
            g = grad[k].reshape(grad[k].shape[:-1] + (a[j].shape[-1], b[m].shape[-1]))
            if j > 0:
                grad_a[j] = grad_a[j] + np.matmul(g, b[m][..., :, None])[..., 0]
            if m > 0:
                grad_b[m] = grad_b[m] + np.matmul(a[j][..., None, :], g)[..., 0, :]
    return grad_a, grad_b


def exp_levels(increment: np.ndarray, depth: int) -> Levels:
    """Levels of exp(v) = (v^{(x)k} / k!)_k for v of shape (..., d)"""
    lead = increment.shape[:-1]
    levels = [np.ones(lead + (1,))]
    for k in range(1, depth + 1):
        levels.append(outer(levels[k - 1], increment / k))
    return levels


def exp_levels_vjp(increment: np.ndarray, levels: Levels, grad: Levels) -> np.ndarray:
    """Adjoint of exp_levels: cotangent on the levels -> cotangent on the increment"""
    depth = len(levels) - 1
    channels = increment.shape[-1]
    grad = list(grad)
    grad_v = np.zeros_like(increment)
    for k in range(depth, 0, -1):
        g = grad[k].reshape(grad[k].shape[:-1] + (channels ** (k - 1), channels))
        grad[k - 1] = grad[k - 1] + (g * (increment / k)[..., None, :]).sum(axis=-1)
        grad_v = grad_v + (g * levels[k - 1][..., :, None]).sum(axis=-2) / k
    return grad_v


def scale_levels_raw(levels: Levels, lam) -> Levels:
    """Level k times lam**k; lam may carry leading batch dimensions"""
    lam = np.asarray(lam, dtype=np.float64)[..., None]
    return [level * lam ** k for k, level in enumerate(levels)]


def _check_compatible(a: TruncatedTensor, b: TruncatedTensor) -> None:
    if a.channels != b.channels or a.depth != b.depth:
        raise ShapeError(
            f"tensors differ in shape: (d={a.channels}, N={a.depth}) vs (d={b.channels}, N={b.depth})"
        )


def _wrap(levels: Levels, channels: int) -> TruncatedTensor:
    return TruncatedTensor(channels=channels, depth=len(levels) - 1, levels=tuple(levels))


def tensor_identity(channels: int, depth: int) -> TruncatedTensor:
    """Multiplicative unit (1, 0, 0, ...)"""
    if channels < 1:
        raise ValueError("channels must be at least 1")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return _wrap(identity_levels(channels, depth), channels)


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product a (x) b"""
    _check_compatible(a, b)
    return _wrap(mul_levels(list(a.levels), list(b.levels)), a.channels)


def tensor_exp(increment: Sequence[float], depth: int) -> TruncatedTensor:
    """Tensor exponential of a vector: the signature of one linear segment"""
    v = np.atleast_1d(np.asarray(increment, dtype=np.float64))
    if v.ndim != 1 or v.size < 1:
        raise ShapeError(f"increment must be a non-empty vector, got shape {v.shape}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return _wrap(exp_levels(v, depth), v.size)


def scale_levels(a: TruncatedTensor, lam: float) -> TruncatedTensor:
    """Multiply level k by lam**k (the effect of scaling a stream by lam)"""
    return _wrap(scale_levels_raw(list(a.levels), float(lam)), a.channels)


def tensor_norm_tail(a: TruncatedTensor) -> float:
    """Euclidean norm over levels 1..N"""
    return math.sqrt(sum(float(np.dot(level, level)) for level in a.levels[1:]))


def dot(a: TruncatedTensor, b: TruncatedTensor) -> float:
    """Sum over all levels of entrywise products"""
    _check_compatible(a, b)
    return float(sum(np.dot(x, y) for x, y in zip(a.levels, b.levels)))
