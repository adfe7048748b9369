"""Domain service interfaces"""
from abc import ABC, abstractmethod

import numpy as np


class HurstEstimator(ABC):
    """Interface for estimators of the Hurst parameter of sampled paths"""

    name: str = "estimator"

    @abstractmethod
    def fit(
        self,
        train_paths: np.ndarray,
        train_targets: np.ndarray,
        test_paths: np.ndarray,
        test_targets: np.ndarray,
    ) -> dict[str, list[float]]:
        """Fit on (b, n) paths and return per-epoch loss traces"""
        pass

    @abstractmethod
    def predict(self, paths: np.ndarray) -> np.ndarray:
        """Estimate H for each of the (b, n) paths"""
        pass
