"""Linear functionals on signature features"""
from dataclasses import dataclass

import numpy as np


@dataclass
class LinearReadout:
    coefficients: np.ndarray
    intercept: float

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features) @ self.coefficients + self.intercept


def fit_linear_readout(features: np.ndarray, targets: np.ndarray) -> LinearReadout:
    """Least-squares fit of targets ~ features @ w + c"""
    features = np.asarray(features, dtype=np.float64)
    design = np.column_stack([features, np.ones(len(features))])
    solution, *_ = np.linalg.lstsq(design, np.asarray(targets, dtype=np.float64), rcond=None)
    return LinearReadout(coefficients=solution[:-1], intercept=float(solution[-1]))
