"""Shared random projection with nonlinearity, applied before statistics.

Every client expands features with the same seeded projection, so the
expanded features are still a deterministic function of the raw ones and all
aggregation identities carry over unchanged. The projection lifts linearly
inseparable classes into a space where the shared-covariance head can work,
at the price of a larger upload (the payload grows with the output
dimension).
"""

from dataclasses import dataclass

import numpy as np

from .data import LabeledFeatureSet

_ACTIVATIONS = ("relu", "tanh", "none")


@dataclass(frozen=True)
class ExpansionConfig:
    """Seeded projection from ``input_dim`` to ``output_dim`` features."""

    input_dim: int
    output_dim: int
    seed: int = 0
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("dimensions must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")


def projection_matrix(cfg: ExpansionConfig) -> np.ndarray:
    """The shared d x d' matrix: standard-normal entries scaled by 1/sqrt(d).

    Deterministic in the seed, so disjoint clients derive bit-identical
    projections without coordination.
    """
    rng = np.random.default_rng(cfg.seed)
    return rng.standard_normal((cfg.input_dim, cfg.output_dim)) / np.sqrt(cfg.input_dim)


def apply_projection(features: np.ndarray, matrix: np.ndarray, activation: str) -> np.ndarray:
    """Map feature rows through ``activation(features @ matrix)``."""
    projected = np.asarray(features, dtype=np.float64) @ matrix
    if activation == "relu":
        return np.maximum(projected, 0.0)
    if activation == "tanh":
        return np.tanh(projected)
    if activation == "none":
        return projected
    raise ValueError(f"unknown activation {activation!r}")


def expand(data: LabeledFeatureSet, cfg: ExpansionConfig) -> LabeledFeatureSet:
    """Expand every row of ``data``; labels are untouched."""
    if data.dim != cfg.input_dim:
        raise ValueError(
            f"dimension mismatch: data has dim {data.dim}, config expects {cfg.input_dim}"
        )
    mapped = apply_projection(data.features, projection_matrix(cfg), cfg.activation)
    return LabeledFeatureSet(mapped, data.labels.copy(), data.num_classes, cfg.output_dim)
