"""Deviation measurement, communication accounting, accuracy, JSON reports."""

import json
from dataclasses import dataclass, field

import numpy as np

from .aggregate import GlobalStatistics
from .data import LabeledFeatureSet
from .head import LinearHead, predict


def deviation(stats: GlobalStatistics, reference: GlobalStatistics) -> tuple[float, float]:
    """L2 gap of the global means and Frobenius gap of the covariances.

    The covariance gap uses the Frobenius norm; at the scales this library
    verifies (<= 1e-9) the choice of matrix norm is immaterial.
    """
    if stats.dim != reference.dim or stats.num_classes != reference.num_classes:
        raise ValueError(
            f"dimension mismatch: ({stats.dim}, {stats.num_classes}) vs "
            f"({reference.dim}, {reference.num_classes})"
        )
    delta_mu = float(np.linalg.norm(stats.global_mean - reference.global_mean))
    delta_sigma = float(np.linalg.norm(stats.covariance - reference.covariance, ord="fro"))
    return delta_mu, delta_sigma


def count_upload(dim: int, num_classes: int, scope: str = "full_statistics") -> int:
    """Scalars uploaded per client: (C + d) * d + C.

    That is C*d class-sum entries, d*d second-moment entries, and C counts.
    Every scope transmits the same number of scalars; masking changes the
    encoding, not the count.
    """
    if dim < 1 or num_classes < 1:
        raise ValueError("dim and num_classes must be >= 1")
    if scope not in ("counts_only", "full_statistics"):
        raise ValueError(f"unknown scope {scope!r}")
    return (num_classes + dim) * dim + num_classes


def evaluate(head: LinearHead, test: LabeledFeatureSet) -> float:
    """Fraction of correct argmax predictions; ties break to the lowest class.

    Test labels naming a globally absent class can never be predicted and
    count as errors.
    """
    if test.dim != head.dim:
        raise ValueError(f"dimension mismatch: head {head.dim}, test {test.dim}")
    return float(np.mean(predict(head, test.features) == test.labels))


@dataclass
class RunReport:
    """One simulation run's metrics, serializable to a stable JSON schema."""

    accuracy: float
    delta_mu: float
    delta_sigma: float
    params_per_client: int
    params_total: int
    bytes_per_client: int
    elapsed_seconds: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "delta_mu": self.delta_mu,
            "delta_sigma": self.delta_sigma,
            "params_per_client": self.params_per_client,
            "params_total": self.params_total,
            "bytes_per_client": self.bytes_per_client,
            "elapsed_seconds": self.elapsed_seconds,
            "config": self.config,
        }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
