"""Seeded synthetic processes, pen-stroke templates and the rescaled-range estimator"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg

from src.core.parallel import parallel_map
from src.domain.exceptions import NumericalError
from src.domain.models import ProcessSpec, Stream, StreamBatch

logger = logging.getLogger(__name__)

CHOLESKY_JITTER = (0.0, 1e-14, 1e-12, 1e-10)

RescaledRangeReading = Literal["increments", "levels", "pooled"]


def uniform_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def gen_brownian(spec: ProcessSpec) -> Stream:
    """Cumulative sum of N(0, dt) increments started at 0"""
    rng = np.random.default_rng(spec.seed)
    dt = 1.0 / (spec.length - 1)
    increments = rng.normal(0.0, np.sqrt(dt), size=spec.length - 1)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    return Stream(points=values, times=uniform_grid(spec.length))


def gen_ou(spec: ProcessSpec) -> Stream:
    """Euler-Maruyama for dX = theta (mu - X) dt + sigma dW from x0"""
    rng = np.random.default_rng(spec.seed)
    dt = 1.0 / (spec.length - 1)
    noise = rng.normal(0.0, np.sqrt(dt), size=spec.length - 1)
    values = np.empty(spec.length)
    values[0] = spec.x0
    for i in range(spec.length - 1):
        values[i + 1] = values[i] + spec.theta * (spec.mu - values[i]) * dt + spec.sigma * noise[i]
    return Stream(points=values, times=uniform_grid(spec.length))


def fbm_covariance(times: np.ndarray, hurst: float) -> np.ndarray:
    """K(s, t) = (s^2H + t^2H - |s - t|^2H) / 2"""
    s, t = np.meshgrid(times, times, indexing="ij")
    two_h = 2.0 * hurst
    return 0.5 * (s ** two_h + t ** two_h - np.abs(s - t) ** two_h)


@lru_cache(maxsize=64)
def fbm_cholesky(n: int, hurst: float) -> np.ndarray:
    """Lower Cholesky factor of the covariance on the grid without t = 0

    Retries with growing diagonal jitter before giving up.
    """
    covariance = fbm_covariance(uniform_grid(n)[1:], hurst)
    for jitter in CHOLESKY_JITTER:
        try:
            factor = linalg.cholesky(covariance + jitter * np.eye(n - 1), lower=True)
        except linalg.LinAlgError:
            logger.warning(f"fBM covariance (n={n}, H={hurst}) not positive definite with jitter {jitter:.0e}")
            continue
        factor.setflags(write=False)
        return factor
    raise NumericalError(
        f"Cholesky factorization of the fBM covariance failed for n={n}, H={hurst} "
        f"even with jitter {CHOLESKY_JITTER[-1]:.0e}"
    )


def gen_fbm(spec: ProcessSpec) -> Stream:
    """Exact Gaussian sample of fractional Brownian motion, B_0 = 0"""
    factor = fbm_cholesky(spec.length, float(spec.hurst))
    z = np.random.default_rng(spec.seed).standard_normal(spec.length - 1)
    values = np.concatenate([[0.0], factor @ z])
    return Stream(points=values, times=uniform_grid(spec.length))


GENERATORS = {"brownian": gen_brownian, "ou": gen_ou, "fbm": gen_fbm}


def generate(spec: ProcessSpec) -> Stream:
    return GENERATORS[spec.kind](spec)


def generate_batch(spec: ProcessSpec, count: int, threads: int = 1) -> StreamBatch:
    """`count` samples; sample i uses seed spec.seed + i"""
    specs = [spec.model_copy(update={"seed": spec.seed + i}) for i in range(count)]
    return StreamBatch.from_streams(parallel_map(generate, specs, threads))


def rescaled_range_hurst(series, min_window: int = 8) -> float:
    """Classical R/S estimate of H from a 1-D series of increments

    For dyadic window sizes w from `min_window` up to n/2 the series is cut into
    non-overlapping windows; R/S is averaged over windows and H is the slope of
    log(R/S) against log(w), clamped to (0.01, 0.99).
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    n = x.size
    if n < 32:
        raise ValueError(f"rescaled range needs at least 32 values, got {n}")
    if np.ptp(x) == 0.0:
        raise ValueError("rescaled range is undefined for a constant series")
    sizes, ratios = [], []
    w = min_window
    while w <= n // 2:
        chunks = x[: (n // w) * w].reshape(-1, w)
        deviations = np.cumsum(chunks - chunks.mean(axis=1, keepdims=True), axis=1)
        ranges = deviations.max(axis=1) - deviations.min(axis=1)
        stds = chunks.std(axis=1)
        valid = stds > 0.0
        if np.any(valid):
            sizes.append(w)
            ratios.append(np.mean(ranges[valid] / stds[valid]))
        w *= 2
    if len(sizes) < 2:
        raise ValueError("rescaled range needs non-constant windows at two or more scales")
    slope = np.polyfit(np.log(sizes), np.log(ratios), 1)[0]
    return float(np.clip(slope, 0.01, 0.99))


def rescaled_range_from_path(path, reading: RescaledRangeReading = "pooled") -> float:
    """R/S estimate for a sampled path

    On the steps of the path (`increments`) the statistic tracks H closely; on the
    sampled values (`levels`) it saturates near 1. `pooled` averages the two slopes
    and is the baseline the Hurst experiment reports.
    """
    values = np.asarray(path, dtype=np.float64).ravel()
    if reading == "increments":
        return rescaled_range_hurst(np.diff(values))
    if reading == "levels":
        return rescaled_range_hurst(values)
    if reading == "pooled":
        return 0.5 * (rescaled_range_hurst(np.diff(values)) + rescaled_range_hurst(values))
    raise ValueError(f"unknown rescaled-range reading {reading!r}")


# knots in the unit square, traced in order
_loop = np.linspace(0.5 * np.pi, 2.5 * np.pi, 25)
PEN_TEMPLATES: dict[int, np.ndarray] = {
    0: np.column_stack([0.5 + 0.35 * np.cos(_loop), 0.5 + 0.5 * np.sin(_loop)]),
    1: np.array([[0.3, 0.8], [0.55, 1.0], [0.55, 0.0]]),
    2: np.array([[0.15, 0.75], [0.3, 0.95], [0.6, 0.98], [0.8, 0.8], [0.75, 0.55], [0.15, 0.0], [0.9, 0.0]]),
    3: np.array([[0.15, 0.9], [0.5, 1.0], [0.8, 0.85], [0.5, 0.55], [0.85, 0.3], [0.5, 0.0], [0.15, 0.1]]),
    4: np.array([[0.7, 0.0], [0.7, 1.0], [0.1, 0.3], [0.9, 0.3]]),
    7: np.array([[0.1, 1.0], [0.9, 1.0], [0.4, 0.0]]),
}


def gen_pen_strokes(style: int, n: int, noise: float = 0.0, seed: int = 0) -> Stream:
    """n points spaced evenly by arc length along a digit-like template, plus N(0, noise^2) jitter"""
    if style not in PEN_TEMPLATES:
        raise ValueError(f"unknown pen style {style}, expected one of {sorted(PEN_TEMPLATES)}")
    if n < 8:
        raise ValueError("pen strokes need at least 8 points")
    if noise < 0:
        raise ValueError("noise level must be non-negative")
    knots = PEN_TEMPLATES[style]
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(knots, axis=0), axis=1))])
    targets = np.linspace(0.0, arc[-1], n)
    points = np.column_stack([np.interp(targets, arc, knots[:, 0]), np.interp(targets, arc, knots[:, 1])])
    if noise > 0:
        points = points + np.random.default_rng(seed).normal(0.0, noise, size=points.shape)
    return Stream(points=points, times=uniform_grid(n))


class HurstDatasetConfig(BaseModel):
    """fBM regression dataset; H ~ U[hurst_low, hurst_high] per sample"""
    train_size: int = Field(default=600, ge=1)
    test_size: int = Field(default=100, ge=1)
    length: int = Field(default=300, ge=32)
    hurst_low: float = Field(default=0.2, gt=0.0, lt=1.0)
    hurst_high: float = Field(default=0.8, gt=0.0, lt=1.0)
    seed: int = 0


@dataclass
class HurstDataset:
    train_paths: np.ndarray
    train_hurst: np.ndarray
    test_paths: np.ndarray
    test_hurst: np.ndarray
    times: np.ndarray


def build_hurst_dataset(config: HurstDatasetConfig, threads: int = 1) -> HurstDataset:
    """Pure function of config.seed: H values from one generator, sample i seeded with seed + 1 + i"""
    if config.hurst_high <= config.hurst_low:
        raise ValueError("hurst_high must exceed hurst_low")
    total = config.train_size + config.test_size
    hursts = np.random.default_rng(config.seed).uniform(config.hurst_low, config.hurst_high, size=total)
    specs = [
        ProcessSpec(kind="fbm", length=config.length, seed=config.seed + 1 + i, hurst=float(h))
        for i, h in enumerate(hursts)
    ]
    paths = np.stack([stream.points[:, 0] for stream in parallel_map(gen_fbm, specs, threads)])
    logger.info(f"Built Hurst dataset: {config.train_size} train / {config.test_size} test, length {config.length}")
    return HurstDataset(
        train_paths=paths[:config.train_size],
        train_hurst=hursts[:config.train_size],
        test_paths=paths[config.train_size:],
        test_hurst=hursts[config.train_size:],
        times=uniform_grid(config.length),
    )
