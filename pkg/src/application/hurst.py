"""Hurst-parameter regression experiment"""
import logging
import time
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from src import __version__
from src.application.estimators import RescaledRangeEstimator, SignatureNetworkEstimator
from src.core.streamnet.architectures import ModelConfig, preset
from src.core.streamnet.training import TrainingConfig
from src.domain.models import ExperimentReport
from src.domain.repositories import ParameterRepository
from src.domain.services import HurstEstimator
from src.infrastructure.synthdata import HurstDatasetConfig, RescaledRangeReading, build_hurst_dataset

logger = logging.getLogger(__name__)

HurstModel = Literal["feedforward", "neural-sig", "neural-sig-augment", "deep-sig", "deeper-sig", "rr"]


class HurstExperimentConfig(BaseModel):
    """Dataset, model and training settings; run r uses seed + r for the model"""
    model: HurstModel = "deep-sig"
    architecture: Optional[ModelConfig] = None
    dataset: HurstDatasetConfig = Field(default_factory=HurstDatasetConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    runs: int = Field(default=3, ge=1)
    rr_reading: RescaledRangeReading = "pooled"
    seed: int = 0


class HurstExperimentUseCase:
    """Use case for training Hurst estimators on seeded fBM data"""

    def __init__(self, parameter_repository: Optional[ParameterRepository] = None, threads: int = 1):
        """
        Initialize the experiment use case

        Args:
            parameter_repository: Where trained parameters are saved when requested
            threads: Worker threads for dataset generation
        """
        self.parameter_repository = parameter_repository
        self.threads = threads

    def _estimator(self, config: HurstExperimentConfig, run: int) -> HurstEstimator:
        if config.model == "rr":
            return RescaledRangeEstimator(config.rr_reading)
        architecture = config.architecture or preset(config.model)
        return SignatureNetworkEstimator(architecture, config.training, seed=config.seed + run)

    def execute(self, config: HurstExperimentConfig, save_params: Optional[str] = None) -> ExperimentReport:
        """
        Build the dataset, then train and evaluate `config.runs` estimators

        Args:
            config: Experiment configuration
            save_params: Path for the parameters of the last run

        Returns:
            ExperimentReport with per-run traces and the mean final test MSE
        """
        started = time.perf_counter()
        dataset_config = config.dataset.model_copy(update={"seed": config.seed})
        data = build_hurst_dataset(dataset_config, self.threads)
        runs = 1 if config.model == "rr" else config.runs

        traces: dict[str, list[float]] = {}
        test_mse, baseline = [], []
        estimator: Optional[HurstEstimator] = None
        for run in range(runs):
            estimator = self._estimator(config, run)
            history = estimator.fit(data.train_paths, data.train_hurst, data.test_paths, data.test_hurst)
            for key, values in history.items():
                traces[f"run{run}.{key}"] = [float(v) for v in values]
            predictions = estimator.predict(data.test_paths)
            test_mse.append(float(np.mean((predictions - data.test_hurst) ** 2)))
            if isinstance(estimator, SignatureNetworkEstimator):
                baseline.append(estimator.baseline_test_mse)
            logger.info(f"{config.model} run {run}: test MSE {test_mse[-1]:.4e}")

        metrics = {
            "test_mse_runs": test_mse,
            "mean_test_mse": float(np.mean(test_mse)),
            "runs": runs,
        }
        if baseline:
            metrics["baseline_test_mse_runs"] = baseline
            metrics["num_parameters"] = estimator.model.num_parameters
        if save_params and isinstance(estimator, SignatureNetworkEstimator):
            if self.parameter_repository is None:
                raise ValueError("no parameter repository configured")
            self.parameter_repository.save(save_params, estimator.params.values, estimator.params.segments)

        return ExperimentReport(
            experiment="hurst",
            config=config.model_dump(mode="json"),
            seed=config.seed,
            loss_trace=traces,
            metrics=metrics,
            notes=[
                f"Hurst parameters drawn uniformly on [{dataset_config.hurst_low}, {dataset_config.hurst_high}]",
                f"rescaled range uses the {config.rr_reading} reading of each path",
            ],
            version=__version__,
            wall_clock_seconds=time.perf_counter() - started,
        )
