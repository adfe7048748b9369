"""Reverse-mode differentiation of the signature and gradient-descent inversion"""
import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from src.core.optim import AdamConfig, AdamState, adam_update
from src.core.signature import check_paths, flatten_levels, split_flat
from src.core.tensor_algebra import (
    Levels,
    exp_levels,
    exp_levels_vjp,
    mul_levels,
    mul_levels_vjp,
)
from src.domain.exceptions import NumericalError, ShapeError
from src.domain.models import InversionResult, SigGradient, Stream, TruncatedTensor

logger = logging.getLogger(__name__)


class SignatureTape:
    """Forward Chen fold over (..., n, d) paths with every prefix recorded

    `backward` replays the fold in reverse with the adjoints of (x) and exp, so
    cotangents may be attached to the final signature, to every prefix signature
    (the expanding lift), or both.
    """

    def __init__(self, paths: np.ndarray, depth: int):
        self.paths = check_paths(paths, depth)
        self.depth = depth
        self.channels = self.paths.shape[-1]
        self.increments = np.diff(self.paths, axis=-2)
        self.exps = exp_levels(self.increments, depth)
        self.prefixes = [[level[..., 0, :] for level in self.exps]]
        for i in range(1, self.steps):
            self.prefixes.append(mul_levels(self.prefixes[-1], self._exp_at(i)))

    @property
    def steps(self) -> int:
        return self.increments.shape[-2]

    @property
    def levels(self) -> Levels:
        return self.prefixes[-1]

    def flat(self) -> np.ndarray:
        """Final signature without its constant term, (..., sig_dim - 1)"""
        return flatten_levels(self.levels)

    def prefix_flat(self) -> np.ndarray:
        """Signatures of (x_1, x_2), (x_1, x_2, x_3), ... stacked on axis -2"""
        return np.stack([flatten_levels(prefix) for prefix in self.prefixes], axis=-2)

    def _exp_at(self, i: int) -> Levels:
        return [level[..., i, :] for level in self.exps]

    def backward(
        self,
        grad_levels: Optional[Levels] = None,
        grad_prefix_flat: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Cotangent on the signature and/or prefixes -> cotangent on the paths"""
        lead = self.increments.shape[:-2]
        d = self.channels
        grad = [np.zeros(lead + (d ** k,)) for k in range(self.depth + 1)]
        if grad_levels is not None:
            grad = [g + c for g, c in zip(grad, grad_levels)]
        grad_exps = [np.zeros(lead + (self.steps, d ** k)) for k in range(self.depth + 1)]
        for i in range(self.steps - 1, -1, -1):
            if grad_prefix_flat is not None:
                extra = split_flat(grad_prefix_flat[..., i, :], d, self.depth, constant=0.0)
                grad = [g + e for g, e in zip(grad, extra)]
            if i == 0:
                grad_exp = grad
            else:
                grad, grad_exp = mul_levels_vjp(self.prefixes[i - 1], self._exp_at(i), grad)
            for k in range(1, self.depth + 1):
                grad_exps[k][..., i, :] = grad_exp[k]
        grad_increments = exp_levels_vjp(self.increments, self.exps, grad_exps)
        grad_paths = np.zeros_like(self.paths)
        grad_paths[..., 1:, :] += grad_increments
        grad_paths[..., :-1, :] -= grad_increments
        return grad_paths


class PairwiseTape:
    """Final signature of (..., n, d) paths by rounds of neighbour products

    Round r multiplies segment signatures 2i and 2i + 1 in one batched product, so
    n points cost about log2(n) products instead of the n - 2 of the left fold.
    Only the final signature can take a cotangent.
    """

    def __init__(self, paths: np.ndarray, depth: int):
        self.paths = check_paths(paths, depth)
        self.depth = depth
        self.increments = np.diff(self.paths, axis=-2)
        self.exps = exp_levels(self.increments, depth)
        self.rounds = []
        current = self.exps
        while current[0].shape[-2] > 1:
            count = current[0].shape[-2]
            left = [level[..., 0:count - 1:2, :] for level in current]
            right = [level[..., 1:count:2, :] for level in current]
            merged = mul_levels(left, right)
            if count % 2:
                merged = [np.concatenate([m, level[..., -1:, :]], axis=-2) for m, level in zip(merged, current)]
            self.rounds.append((left, right, count))
            current = merged
        self.levels = [level[..., 0, :] for level in current]

    def backward(self, grad_levels: Levels) -> np.ndarray:
        """Cotangent on the final signature -> cotangent on the paths"""
        grad = [np.asarray(g, dtype=np.float64)[..., None, :] for g in grad_levels]
        for left, right, count in reversed(self.rounds):
            pairs = count // 2
            grad_left, grad_right = mul_levels_vjp(left, right, [g[..., :pairs, :] for g in grad])
            expanded = []
            for g_left, g_right, g in zip(grad_left, grad_right, grad):
                out = np.zeros(g_left.shape[:-2] + (count, g_left.shape[-1]))
                out[..., 0:count - 1:2, :] = g_left
                out[..., 1:count:2, :] = g_right
                if count % 2:
                    out[..., -1, :] = g[..., -1, :]
                expanded.append(out)
            grad = expanded
        grad_increments = exp_levels_vjp(self.increments, self.exps, grad)
        grad_paths = np.zeros_like(self.paths)
        grad_paths[..., 1:, :] += grad_increments
        grad_paths[..., :-1, :] -= grad_increments
        return grad_paths


def signature_vjp(x: Stream, depth: int, cotangent: TruncatedTensor) -> SigGradient:
    """Exact vector-Jacobian product of the signature map at x"""
    if cotangent.channels != x.channels or cotangent.depth != depth:
        raise ShapeError(
            f"cotangent (d={cotangent.channels}, N={cotangent.depth}) does not match "
            f"signature (d={x.channels}, N={depth})"
        )
    if not all(np.all(np.isfinite(level)) for level in cotangent.levels):
        raise NumericalError("cotangent contains non-finite values")
    tape = SignatureTape(x.points, depth)
    return SigGradient(per_point=tape.backward(grad_levels=list(cotangent.levels)))


def _check_target(target_sig: TruncatedTensor, channels: int, depth: int) -> None:
    if target_sig.channels != channels or target_sig.depth != depth:
        raise ShapeError(
            f"target signature (d={target_sig.channels}, N={target_sig.depth}) does not match "
            f"(d={channels}, N={depth})"
        )


def inversion_loss_and_grad(points: np.ndarray, target_sig: TruncatedTensor, depth: int) -> tuple[float, np.ndarray]:
    """Squared distance over nonconstant levels and its gradient w.r.t. the points"""
    _check_target(target_sig, points.shape[-1], depth)
    tape = PairwiseTape(points, depth)
    residual = [level - target for level, target in zip(tape.levels, target_sig.levels)]
    loss = float(sum(np.dot(r, r) for r in residual[1:]))
    grad_levels = [np.zeros(1)] + [2.0 * r for r in residual[1:]]
    return loss, tape.backward(grad_levels)


def path_energy_and_grad(points: np.ndarray) -> tuple[float, np.ndarray]:
    """Sum of squared step lengths and its gradient

    Among streams with the same signature it is smallest for the one without
    back-and-forth excursions whose points are evenly spaced along the curve.
    """
    steps = np.diff(points, axis=0)
    grad = np.zeros_like(points)
    grad[1:] += 2.0 * steps
    grad[:-1] -= 2.0 * steps
    return float(np.sum(steps * steps)), grad


def inversion_loss(y: Stream, target_sig: TruncatedTensor, depth: int) -> float:
    """||Sig^N(y) - target||^2 over levels 1..N"""
    loss, _ = inversion_loss_and_grad(y.points, target_sig, depth)
    return loss


def increment_rmse(a: np.ndarray, b: np.ndarray) -> float:
    """RMSE between the increments of two equal-shape streams (translation-free)"""
    diff = np.diff(np.asarray(a), axis=0) - np.diff(np.asarray(b), axis=0)
    return float(np.sqrt(np.mean(diff * diff)))


class InversionConfig(BaseModel):
    """Optimizer settings for signature inversion

    The path energy term starts at `energy_weight` and is multiplied by
    `energy_decay` every `energy_every` iterations; it selects the evenly spaced
    representative while the signature is still far off and fades out after.
    """
    adam: AdamConfig = Field(default_factory=lambda: AdamConfig(lr=0.05))
    max_iterations: int = Field(default=20000, ge=0)
    tolerance: float = Field(default=1e-10, gt=0.0)
    lr_decay: float = Field(default=0.5, gt=0.0, le=1.0)
    decay_every: int = Field(default=4000, ge=1)
    energy_weight: float = Field(default=1e-2, ge=0.0)
    energy_decay: float = Field(default=0.1, gt=0.0, le=1.0)
    energy_every: int = Field(default=2000, ge=1)
    log_every: int = Field(default=1000, ge=1)


def invert_signature(
    target_sig: TruncatedTensor,
    n: int,
    depth: int,
    config: Optional[InversionConfig] = None,
    seed: int = 0,
    start: Optional[np.ndarray] = None,
    reference: Optional[Stream] = None,
) -> InversionResult:
    """Recover an n-point stream whose signature matches target_sig

    The candidate starts i.i.d. uniform in [-0.5, 0.5]^d with its first point moved to
    `start` (origin by default). Adam descends the signature loss plus the fading
    path energy term; `final_loss` and the trace hold the signature loss alone.
    The result is translated so its first point matches `reference` when one is
    given, and the increment RMSE against it is reported.
    """
    if n < 2:
        raise ValueError("inversion needs n >= 2")
    config = config or InversionConfig()
    d = target_sig.channels
    _check_target(target_sig, d, depth)
    start = np.zeros(d) if start is None else np.asarray(start, dtype=np.float64)

    if n == 2:
        # level 1 of the target is the only increment
        y = np.stack([start, start + target_sig.levels[1]])
        loss, _ = inversion_loss_and_grad(y, target_sig, depth)
        return _finish(y, [loss], 0, reference)

    rng = np.random.default_rng(seed)
    y = rng.uniform(-0.5, 0.5, size=(n, d))
    y = y + (start - y[0])
    state = AdamState.zeros(y.size)
    loss, grad = inversion_loss_and_grad(y, target_sig, depth)
    trace = [loss]
    iteration = 0
    while loss >= config.tolerance and iteration < config.max_iterations:
        lr = config.adam.lr * config.lr_decay ** (iteration // config.decay_every)
        weight = config.energy_weight * config.energy_decay ** (iteration // config.energy_every)
        if weight > 0.0:
            _, energy_grad = path_energy_and_grad(y)
            grad = grad + weight * energy_grad
        flat, state = adam_update(y.ravel(), grad.ravel(), state, config.adam, lr=lr)
        y = flat.reshape(n, d)
        iteration += 1
        loss, grad = inversion_loss_and_grad(y, target_sig, depth)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NumericalError(f"inversion diverged at iteration {iteration} (loss={loss})")
        trace.append(loss)
        if iteration % config.log_every == 0:
            logger.debug(f"inversion iteration {iteration}: loss={loss:.3e}")

    logger.info(f"Inversion finished after {iteration} iterations, final loss {loss:.3e}")
    return _finish(y, trace, iteration, reference)


def _finish(y: np.ndarray, trace: list[float], iterations: int, reference: Optional[Stream]) -> InversionResult:
    rmse = None
    if reference is not None:
        y = y + (reference.points[0] - y[0])
        if reference.points.shape == y.shape:
            rmse = increment_rmse(y, reference.points)
    return InversionResult(
        recovered=Stream(points=y),
        loss_trace=trace,
        final_loss=trace[-1],
        iterations_used=iterations,
        increment_rmse=rmse,
    )
