"""Small input-validation helpers shared by estimators and metric functions."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .errors import ConfigurationError


def check_gain_series(x, name="series") -> np.ndarray:
    """Validate a 1-D finite gain series, returned as float64."""
    arr = check_array(
        x, ensure_2d=False, dtype=np.float64, ensure_min_samples=0, input_name=name
    )
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    return arr


def check_branch_matrix(X) -> np.ndarray:
    """Validate an (n_slots, 3) branch-gain matrix: direct, relay1, relay2."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=0, input_name="branch gains")
    if X.shape[1] != 3:
        raise ValueError(
            f"expected 3 branch columns (direct, relay1, relay2), got {X.shape[1]}"
        )
    return X


def check_sweep(values, name="sweep") -> np.ndarray:
    """Validate a strictly increasing 1-D sweep of thresholds."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be 1-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    if arr.size >= 2 and not np.all(np.diff(arr) > 0):
        raise ConfigurationError(f"{name} must be strictly increasing")
    return arr


def check_probability(p, name="probability") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"{name} must lie in [0, 1], got {p}")
    return p
