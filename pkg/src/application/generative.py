"""Generative model for a stochastic process trained against a fixed MMD discriminator"""
import logging
import time
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from src import __version__
from src.core.gradcheck import finite_difference_check, gradient_gate
from src.core.optim import AdamConfig
from src.core.sigkernel import KernelConfig, mmd_and_gradient, normalized_features, permutation_test
from src.core.signature import time_augment_array
from src.core.streamnet.architectures import build_model, preset
from src.core.streamnet.model import DeepSigModel
from src.core.streamnet.params import ModelParams, adam_step
from src.domain.exceptions import NumericalError
from src.domain.models import ExperimentReport, ProcessSpec, StreamBatch
from src.domain.repositories import ParameterRepository
from src.infrastructure.synthdata import generate_batch, uniform_grid

logger = logging.getLogger(__name__)

GATE_PATHS = 4
GATE_LENGTH = 8


class GanExperimentConfig(BaseModel):
    """Generator, discriminator and data settings; the data is an OU process on [0, 1]"""
    epochs: int = Field(default=200, ge=0)
    paths: int = Field(default=256, ge=2)
    length: int = Field(default=100, ge=3)
    generator_depth: int = Field(default=3, ge=1)
    discriminator_depth: int = Field(default=4, ge=1)
    target_norm: float = Field(default=1.0, gt=0.0)
    adam: AdamConfig = Field(default_factory=lambda: AdamConfig(lr=1e-2))
    process: ProcessSpec = Field(default_factory=lambda: ProcessSpec(kind="ou"))
    sample_paths: int = Field(default=32, ge=0)
    permutations: int = Field(default=200, ge=100)
    seed: int = 0
    log_every: int = Field(default=10, ge=1)


def build_generator(depth: int) -> DeepSigModel:
    """Pointwise network keeping the time-augmented noise, expanding lift, pointwise linear readout"""
    config = preset("generator")
    config.blocks[0].depth = depth
    return build_model(config, input_channels=2)


def brownian_noise(rng: np.random.Generator, count: int, length: int) -> np.ndarray:
    """Time-augmented Brownian motion with `length` points on [0, 1], shape (count, length, 2)"""
    dt = 1.0 / (length - 1)
    increments = rng.normal(0.0, np.sqrt(dt), size=(count, length - 1))
    values = np.concatenate([np.zeros((count, 1)), np.cumsum(increments, axis=1)], axis=1)
    return time_augment_array(values[..., None])


class GenerativeExperiment:
    """Generator forward/backward against fixed reference features"""

    def __init__(self, model: DeepSigModel, kernel: KernelConfig, reference_features: np.ndarray):
        self.model = model
        self.kernel = kernel
        self.reference_features = reference_features

    def generate(self, params: ModelParams, noise: np.ndarray) -> tuple[np.ndarray, list]:
        """(b, n, 1) generated values for (b, n + 1, 2) noise"""
        return self.model.forward(params, noise)

    def loss_and_grad(self, params: ModelParams, noise: np.ndarray) -> tuple[float, np.ndarray]:
        values, caches = self.generate(params, noise)
        paths = time_augment_array(values)
        statistic, grad_paths = mmd_and_gradient(paths, self.reference_features, self.kernel)
        grads, _ = self.model.backward(params, caches, grad_paths[..., 1:])
        return statistic, grads

    def loss(self, params: ModelParams, noise: np.ndarray) -> float:
        values, _ = self.generate(params, noise)
        paths = time_augment_array(values)
        generated = normalized_features(paths, self.kernel)
        diff = generated.mean(axis=0) - self.reference_features.mean(axis=0)
        return float(np.dot(diff, diff))


def check_generator_gradients(config: GanExperimentConfig, seed: int, samples: int = 50):
    """Finite-difference check of dT/dtheta on a miniature instance"""
    rng = np.random.default_rng(seed)
    model = build_generator(config.generator_depth)
    params = model.init_params(seed)
    kernel = KernelConfig(depth=config.discriminator_depth, normalization_target=config.target_norm)
    spec = config.process.model_copy(update={"length": GATE_LENGTH, "seed": seed})
    real = time_augment_array(generate_batch(spec, GATE_PATHS).points)
    experiment = GenerativeExperiment(model, kernel, normalized_features(real, kernel))
    noise = brownian_noise(rng, GATE_PATHS, GATE_LENGTH + 1)
    _, grads = experiment.loss_and_grad(params, noise)
    coordinates = rng.choice(params.size, size=min(samples, params.size), replace=False)
    return finite_difference_check(
        "generator MMD loss",
        lambda values: experiment.loss(params.with_values(values), noise),
        params.values,
        grads,
        coordinates,
    )


class GenerativeExperimentUseCase:
    """Use case for training the signature generator on OU paths"""

    def __init__(self, parameter_repository: Optional[ParameterRepository] = None, threads: int = 1):
        self.parameter_repository = parameter_repository
        self.threads = threads

    def execute(self, config: GanExperimentConfig,
                save_params: Optional[str] = None) -> tuple[ExperimentReport, Optional[StreamBatch]]:
        """
        Train the generator with full-batch Adam on the MMD loss

        Args:
            config: Experiment configuration
            save_params: Path for the trained generator parameters

        Returns:
            The report and a batch of generated sample paths
        """
        started = time.perf_counter()
        train_seed, test_seed, noise_seed = (
            int(s.generate_state(1)[0]) for s in np.random.SeedSequence(config.seed).spawn(3)
        )
        gradient_gate(check_generator_gradients(config, config.seed))

        kernel = KernelConfig(depth=config.discriminator_depth, normalization_target=config.target_norm)
        process = config.process.model_copy(update={"kind": "ou", "length": config.length})
        real = time_augment_array(generate_batch(process.model_copy(update={"seed": train_seed}),
                                                 config.paths, self.threads).points)
        held_out = time_augment_array(generate_batch(process.model_copy(update={"seed": test_seed}),
                                                     config.paths, self.threads).points)
        model = build_generator(config.generator_depth)
        params = model.init_params(config.seed)
        experiment = GenerativeExperiment(model, kernel, normalized_features(real, kernel))
        rng = np.random.default_rng(noise_seed)
        logger.info(f"Generator: {model.num_parameters} parameters, {config.paths} paths of length {config.length}")

        trace = []
        for epoch in range(config.epochs + 1):
            noise = brownian_noise(rng, config.paths, config.length + 1)
            statistic, grads = experiment.loss_and_grad(params, noise)
            if not np.isfinite(statistic):
                raise NumericalError(f"MMD loss became non-finite at epoch {epoch}")
            trace.append(statistic)
            if epoch % config.log_every == 0 or epoch == config.epochs:
                logger.info(f"epoch {epoch}/{config.epochs}: T = {statistic:.4e}")
            if epoch < config.epochs:
                params = adam_step(params, grads, config.adam)

        noise = brownian_noise(rng, config.paths, config.length + 1)
        values, _ = experiment.generate(params, noise)
        generated = time_augment_array(values)
        test = permutation_test(generated, held_out, kernel, config.permutations, seed=config.seed,
                                threads=self.threads)
        if save_params:
            if self.parameter_repository is None:
                raise ValueError("no parameter repository configured")
            self.parameter_repository.save(save_params, params.values, params.segments)

        report = ExperimentReport(
            experiment="gan",
            config=config.model_dump(mode="json"),
            seed=config.seed,
            loss_trace={"mmd": trace},
            metrics={
                "initial_mmd": trace[0],
                "final_mmd": trace[-1],
                "held_out_mmd": test.statistic,
                "held_out_p_value": test.p_value,
                "num_parameters": model.num_parameters,
            },
            notes=[
                f"OU parameters theta={process.theta}, mu={process.mu}, sigma={process.sigma}, x0={process.x0}",
                "loss trace entry k is the MMD before update k + 1; the last entry is after training",
            ],
            version=__version__,
            wall_clock_seconds=time.perf_counter() - started,
        )
        count = min(config.sample_paths, config.paths)
        samples = StreamBatch(points=values[:count], times=uniform_grid(config.length)) if count else None
        return report, samples
