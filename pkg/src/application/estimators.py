"""Hurst parameter estimators"""
import logging
from typing import Optional

import numpy as np

from src.core.gradcheck import check_model_gradients, gradient_gate
from src.core.signature import time_augment_array
from src.core.streamnet.architectures import ModelConfig, build_model
from src.core.streamnet.params import ModelParams
from src.core.streamnet.training import TrainingConfig, evaluate_mse, predict, train_regressor
from src.domain.services import HurstEstimator
from src.infrastructure.synthdata import RescaledRangeReading, rescaled_range_from_path

logger = logging.getLogger(__name__)

GATE_SAMPLES = 2


class RescaledRangeEstimator(HurstEstimator):
    """Classical R/S on each path; nothing to train"""
    name = "rr"

    def __init__(self, reading: RescaledRangeReading = "pooled"):
        self.reading = reading

    def fit(self, train_paths, train_targets, test_paths, test_targets) -> dict[str, list[float]]:
        return {}

    def predict(self, paths: np.ndarray) -> np.ndarray:
        return np.array([rescaled_range_from_path(path, self.reading) for path in paths])


class SignatureNetworkEstimator(HurstEstimator):
    """A deep signature model (or plain MLP) regressing H from the sampled path

    A finite-difference gradient gate on a couple of training paths runs before any
    optimizer step and raises GradientCheckError on failure.
    """

    def __init__(self, architecture: ModelConfig, training: TrainingConfig, seed: int = 0):
        self.name = architecture.name
        self.architecture = architecture
        self.training = training
        self.seed = seed
        self.model = None
        self.params: Optional[ModelParams] = None
        self.baseline_test_mse: Optional[float] = None

    def inputs(self, paths: np.ndarray) -> np.ndarray:
        paths = np.asarray(paths, dtype=np.float64)
        if self.architecture.time_augment:
            return time_augment_array(paths[..., None])
        return paths[..., None]

    def fit(self, train_paths, train_targets, test_paths, test_targets) -> dict[str, list[float]]:
        train_x, test_x = self.inputs(train_paths), self.inputs(test_paths)
        self.model = build_model(self.architecture, train_x.shape[-1], train_x.shape[1])
        self.params = self.model.init_params(self.seed)
        logger.info(f"Model {self.name}: {self.model.num_parameters} parameters")
        gradient_gate(check_model_gradients(self.model, self.params, train_x[:GATE_SAMPLES], seed=self.seed,
                                            name=f"model {self.name}"))
        self.baseline_test_mse = evaluate_mse(self.model, self.params, test_x, test_targets)
        training = self.training.model_copy(update={"seed": self.seed})
        self.params, history = train_regressor(self.model, self.params, train_x, train_targets, test_x,
                                               test_targets, training)
        return {"train_mse": history.train_mse, "test_mse": history.test_mse}

    def predict(self, paths: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("estimator must be fitted before predicting")
        return predict(self.model, self.params, self.inputs(paths))
