"""Shared fixtures and independent oracles used across the suite.

The oracles here deliberately take different code paths from the library:
scipy densities instead of the in-repo solver, matmul instead of streaming
rank-1 updates, true generating parameters instead of estimates.
"""

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from fedcgs import (
    GlobalStatistics,
    LabeledFeatureSet,
    SyntheticSpec,
    generate_synthetic,
    head_probabilities,
    synthetic_params,
)


def split_even_odd(data: LabeledFeatureSet) -> tuple[LabeledFeatureSet, LabeledFeatureSet]:
    """Deterministic iid train/test split: even rows train, odd rows test."""
    idx = np.arange(data.n)
    return data.take(idx[idx % 2 == 0]), data.take(idx[idx % 2 == 1])


def make_train_test(spec: SyntheticSpec) -> tuple[LabeledFeatureSet, LabeledFeatureSet]:
    return split_even_odd(generate_synthetic(spec))


@pytest.fixture(scope="session")
def bench_spec() -> SyntheticSpec:
    """The desk-scale benchmark shape: N=2000 train rows, d=32, C=5."""
    return SyntheticSpec(num_classes=5, dim=32, samples_per_class=800, seed=11)


@pytest.fixture(scope="session")
def bench_data(bench_spec):
    train, test = make_train_test(bench_spec)
    assert train.n == 2000
    return train, test


def bayes_predict(x: np.ndarray, means: np.ndarray, cov: np.ndarray,
                  priors: np.ndarray | None = None) -> np.ndarray:
    """Bayes rule under the true generating parameters (scipy densities)."""
    num_classes = means.shape[0]
    if priors is None:
        priors = np.full(num_classes, 1.0 / num_classes)
    scores = np.stack(
        [
            multivariate_normal(mean=means[j], cov=cov).logpdf(x) + np.log(priors[j])
            for j in range(num_classes)
        ],
        axis=-1,
    )
    return np.argmax(scores, axis=-1)


def density_ratio_probabilities(
    stats: GlobalStatistics, eps: float, x: np.ndarray
) -> np.ndarray:
    """Posterior class probabilities evaluated directly from Gaussian densities.

    Uses scipy's multivariate normal with the identical ridged covariance, so
    any disagreement with the linear head is the head's fault, not the
    ridge's.
    """
    cov = stats.covariance + eps * np.eye(stats.dim)
    log_scores = np.full((np.atleast_2d(x).shape[0], stats.num_classes), -np.inf)
    for j in np.flatnonzero(stats.present):
        rv = multivariate_normal(mean=stats.prototypes[j], cov=cov)
        log_scores[:, j] = rv.logpdf(np.atleast_2d(x)) + np.log(stats.priors[j])
    shifted = log_scores - log_scores.max(axis=1, keepdims=True)
    weights = np.where(np.isfinite(shifted), np.exp(shifted), 0.0)
    return weights / weights.sum(axis=1, keepdims=True)


def assert_head_matches_densities(head, stats, points, tol=1e-10):
    ours = np.stack([head_probabilities(head, p) for p in points])
    oracle = density_ratio_probabilities(stats, head.ridge_used, points)
    np.testing.assert_allclose(ours, oracle, atol=tol, rtol=0.0)


def xor_dataset(per_blob: int, noise: float, seed: int) -> LabeledFeatureSet:
    """Checkerboard blobs at (+-1, +-1); label is the XOR of the sign pattern.

    Linearly inseparable by construction: both classes share mean zero.
    """
    rng = np.random.default_rng(seed)
    centers = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=np.float64)
    labels_per_blob = np.array([0, 0, 1, 1])
    feats, labels = [], []
    for center, label in zip(centers, labels_per_blob):
        feats.append(center + noise * rng.standard_normal((per_blob, 2)))
        labels.append(np.full(per_blob, label))
    return LabeledFeatureSet(
        np.concatenate(feats), np.concatenate(labels), num_classes=2, dim=2
    )


def skewed_client(
    data: LabeledFeatureSet,
    dominant_classes: tuple[int, ...],
    size: int,
    uniform_fraction: float = 0.2,
    seed: int = 0,
) -> LabeledFeatureSet:
    """A personalization-style local split: mostly dominant classes.

    ``uniform_fraction`` of the budget is sampled from all of ``data``; the
    rest only from rows whose label is dominant. The number of dominant
    classes is the caller's knob.
    """
    rng = np.random.default_rng(seed)
    n_uniform = int(round(uniform_fraction * size))
    uniform_idx = rng.choice(data.n, size=n_uniform, replace=False)
    dominant_pool = np.flatnonzero(np.isin(data.labels, dominant_classes))
    dominant_idx = rng.choice(dominant_pool, size=size - n_uniform, replace=False)
    return data.take(np.concatenate([uniform_idx, dominant_idx]))


def random_spd(dim: int, seed: int) -> np.ndarray:
    """G^T G + I: comfortably positive definite."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim))
    return g.T @ g + np.eye(dim)
