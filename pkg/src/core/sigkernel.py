"""Normalized signature kernel, MMD statistic and permutation testing"""
import logging
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, Field

from src.core.autodiff import SignatureTape
from src.core.parallel import parallel_map
from src.core.signature import flatten_levels, split_flat
from src.domain.exceptions import ShapeError
from src.domain.models import Stream, StreamBatch, TruncatedTensor

logger = logging.getLogger(__name__)


class KernelConfig(BaseModel):
    """Depth and normalization of the signature kernel"""
    depth: int = Field(default=4, ge=1)
    normalization_target: float = Field(default=1.0, gt=0.0)
    tolerance: float = Field(default=1e-14, gt=0.0)
    normalization: Literal["tail_norm", "none"] = "tail_norm"
    max_bisections: int = Field(default=200, ge=1)


def _level_norms_sq(levels) -> np.ndarray:
    """(..., N) squared Euclidean norms of levels 1..N"""
    return np.stack([np.sum(level * level, axis=-1) for level in levels[1:]], axis=-1)


def _tail_norm_sq(lam: np.ndarray, norms_sq: np.ndarray) -> np.ndarray:
    powers = np.arange(1, norms_sq.shape[-1] + 1)
    return np.sum(lam[..., None] ** (2 * powers) * norms_sq, axis=-1)


def solve_lambda(norms_sq: np.ndarray, target: float, tolerance: float = 1e-14, max_bisections: int = 200) -> np.ndarray:
    """Root of sum_k lam^(2k) |S_k|^2 = target^2 for every leading index

    The left side is strictly increasing in lam > 0 for a nontrivial signature, so the
    root is bracketed by doubling and then bisected. Trivial signatures get lam = 1.
    """
    norms_sq = np.asarray(norms_sq, dtype=np.float64)
    goal = target * target
    trivial = np.all(norms_sq == 0.0, axis=-1)
    lead = norms_sq.shape[:-1]
    lo, hi = np.zeros(lead), np.ones(lead)
    for _ in range(2100):
        short = (_tail_norm_sq(hi, norms_sq) < goal) & ~trivial
        if not np.any(short):
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        below = _tail_norm_sq(mid, norms_sq) < goal
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all((hi - lo) <= tolerance * hi):
            break
    return np.where(trivial, 1.0, 0.5 * (lo + hi))


def normalizing_lambda(sig: TruncatedTensor, target: float = 1.0, tolerance: float = 1e-14) -> float:
    """Scale lam with |Sig(lam x)| over levels 1..N equal to target"""
    return float(solve_lambda(_level_norms_sq(sig.levels), target, tolerance))


class NormalizedFeatures:
    """Flattened levels 1..N of Sig^N(lam x) for a (b, n, d) batch, with its adjoint"""

    def __init__(self, config: KernelConfig):
        self.config = config

    def forward(self, paths: np.ndarray) -> tuple[np.ndarray, tuple]:
        tape = SignatureTape(paths, self.config.depth)
        levels = tape.levels
        norms_sq = _level_norms_sq(levels)
        if self.config.normalization == "tail_norm":
            lam = solve_lambda(norms_sq, self.config.normalization_target, self.config.tolerance,
                               self.config.max_bisections)
        else:
            lam = np.ones(norms_sq.shape[:-1])
        scaled = [level * lam[..., None] ** k for k, level in enumerate(levels)]
        return flatten_levels(scaled), (tape, lam, norms_sq)

    def backward(self, cache: tuple, grad_features: np.ndarray) -> np.ndarray:
        """Implicit differentiation through lam: d lam / d S_k = -lam^(2k) S_k / sum_j j lam^(2j-1) |S_j|^2"""
        tape, lam, norms_sq = cache
        depth, d = tape.depth, tape.channels
        grad_scaled = split_flat(grad_features, d, depth, constant=0.0)
        levels = tape.levels
        grad_levels = [np.zeros_like(levels[0])]
        for k in range(1, depth + 1):
            grad_levels.append(grad_scaled[k] * lam[..., None] ** k)
        if self.config.normalization == "tail_norm":
            ks = np.arange(1, depth + 1)
            denominator = np.sum(ks * lam[..., None] ** (2 * ks - 1) * norms_sq, axis=-1)
            grad_lam = sum(
                k * lam ** (k - 1) * np.sum(levels[k] * grad_scaled[k], axis=-1) for k in range(1, depth + 1)
            )
            factor = np.where(denominator > 0.0, grad_lam / np.where(denominator > 0.0, denominator, 1.0), 0.0)
            for k in range(1, depth + 1):
                grad_levels[k] = grad_levels[k] - (lam ** (2 * k) * factor)[..., None] * levels[k]
        return tape.backward(grad_levels=grad_levels)


def _points(data: Union[Stream, StreamBatch, np.ndarray]) -> np.ndarray:
    if isinstance(data, (Stream, StreamBatch)):
        return data.points
    return np.asarray(data, dtype=np.float64)


def normalized_features(data: Union[Stream, StreamBatch, np.ndarray], config: KernelConfig) -> np.ndarray:
    features, _ = NormalizedFeatures(config).forward(_points(data))
    return features


def sig_kernel(x: Stream, y: Stream, config: KernelConfig) -> float:
    """<Sig^M(lam_x x), Sig^M(lam_y y)> over levels 1..M"""
    if x.channels != y.channels:
        raise ShapeError(f"streams have {x.channels} and {y.channels} channels")
    return float(np.dot(normalized_features(x, config), normalized_features(y, config)))


def mmd_from_features(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """Biased MMD^2 from explicit kernel features; exactly 0 when both batches coincide"""
    n, m = len(features_a), len(features_b)
    term_aa = float(np.sum(features_a @ features_a.T)) / (n * n)
    term_ab = float(np.sum(features_a @ features_b.T)) / (n * m)
    term_bb = float(np.sum(features_b @ features_b.T)) / (m * m)
    return term_aa - 2.0 * term_ab + term_bb


def _check_batches(a: np.ndarray, b: np.ndarray) -> None:
    if len(a) < 1 or len(b) < 1:
        raise ValueError("both batches must be non-empty")
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError(f"batches have {a.shape[-1]} and {b.shape[-1]} channels")


def mmd_statistic(a: Union[StreamBatch, np.ndarray], b: Union[StreamBatch, np.ndarray], config: KernelConfig) -> float:
    """Biased MMD^2 between two batches under the normalized signature kernel"""
    a, b = _points(a), _points(b)
    _check_batches(a, b)
    return mmd_from_features(normalized_features(a, config), normalized_features(b, config))


def mmd_and_gradient(
    generated: np.ndarray,
    reference_features: np.ndarray,
    config: KernelConfig,
) -> tuple[float, np.ndarray]:
    """MMD^2 between `generated` paths and fixed reference features, and d/d generated

    With mean features mu_g and mu_r the statistic is |mu_g - mu_r|^2.
    """
    features = NormalizedFeatures(config)
    generated_features, cache = features.forward(generated)
    diff = generated_features.mean(axis=0) - reference_features.mean(axis=0)
    statistic = float(np.dot(diff, diff))
    grad_features = np.broadcast_to(2.0 * diff / len(generated), generated_features.shape)
    return statistic, features.backward(cache, grad_features)


@dataclass
class PermutationTestResult:
    statistic: float
    p_value: float
    permutations: int

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "permutations": self.permutations}


def permutation_test(
    a: Union[StreamBatch, np.ndarray],
    b: Union[StreamBatch, np.ndarray],
    config: KernelConfig,
    num_permutations: int = 200,
    seed: int = 0,
    threads: int = 1,
) -> PermutationTestResult:
    """p = (1 + #{permuted >= observed}) / (1 + P) over random relabelings of the pooled batches"""
    if num_permutations < 100:
        raise ValueError("a permutation test needs at least 100 permutations")
    a, b = _points(a), _points(b)
    _check_batches(a, b)
    features_a = normalized_features(a, config)
    features_b = normalized_features(b, config)
    observed = mmd_from_features(features_a, features_b)
    pooled = np.concatenate([features_a, features_b], axis=0)
    n = len(features_a)
    rng = np.random.default_rng(seed)
    orders = [rng.permutation(len(pooled)) for _ in range(num_permutations)]

    def replica(order: np.ndarray) -> float:
        diff = pooled[order[:n]].mean(axis=0) - pooled[order[n:]].mean(axis=0)
        return float(np.dot(diff, diff))

    permuted = np.array(parallel_map(replica, orders, threads))
    exceed = int(np.sum(permuted >= observed))
    p_value = (1 + exceed) / (1 + num_permutations)
    logger.info(f"MMD permutation test: statistic {observed:.4e}, p = {p_value:.4f}")
    return PermutationTestResult(statistic=observed, p_value=p_value, permutations=num_permutations)
