"""Fixed board evaluation heuristics.

The default weight vector penalizes column heights, bumpiness, maximum
height, and (heavily) holes. It drives the synthetic trainer and the
"favorable piece" selection; values are free parameters recorded in config.
"""
from __future__ import annotations

import numpy as np

from .learner import feature_dim


def default_oracle_weights(width: int = 10, height: int = 20) -> np.ndarray:
    w = np.empty(feature_dim(width, height))
    w[:width] = -0.5                    # per-column heights
    w[width: 2 * width - 1] = -0.2      # adjacent height differences
    w[2 * width - 1] = -0.5             # max height
    w[2 * width] = -4.0                 # holes
    return w


def heuristic_evaluator(weights: np.ndarray):
    """Wrap a fixed weight vector as an afterstate-features evaluator."""
    w = np.asarray(weights, dtype=float)

    def evaluate(features: np.ndarray) -> float:
        return float(w @ features)

    return evaluate
