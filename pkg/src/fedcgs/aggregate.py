"""Server-side reconstruction of global feature statistics.

From the summed client statistics (class sums A^j, raw second moment B,
class counts N^j) the server recovers, exactly up to floating point:

    prototype   mu_j  = A^j / N^j
    global mean mu    = A / N,  A = sum_j A^j
    covariance  Sigma = (B - mu^T A - A^T mu + N mu^T mu) / (N - 1)

with row-vector outer products. ``centralized_reference`` computes the same
quantities by the direct two-pass definitions (subtract the mean, then outer
products) and exists as an independent check, not as part of the pipeline.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .client_stats import ClientStatistics, compute_client_stats, merge_stats, zero_stats
from .data import LabeledFeatureSet
from .linalg import symmetrize

_SIDECAR_HEADER = struct.Struct("<4sIII")  # magic, version, d, C
_SIDECAR_MAGIC = b"FCGB"
_SIDECAR_VERSION = 1


class DegenerateCovarianceError(ValueError):
    """Fewer than two samples: the sample covariance is undefined."""


@dataclass
class GlobalStatistics:
    """Aggregated view of the whole federation's features.

    Classes that no client holds are flagged absent: their prototype row is
    zero and ``present`` is False there. ``priors`` are the global class
    fractions N^j / N.
    """

    class_sums: np.ndarray  # (C, d)
    class_counts: np.ndarray  # (C,)
    total_count: int
    prototypes: np.ndarray  # (C, d)
    present: np.ndarray  # (C,) bool
    global_mean: np.ndarray  # (d,)
    covariance: np.ndarray  # (d, d)
    priors: np.ndarray  # (C,)
    dim: int
    num_classes: int


def aggregate(stats_sum: ClientStatistics) -> GlobalStatistics:
    """Turn the (securely or plainly) summed uploads into global statistics."""
    n = stats_sum.total_count
    if n < 2:
        raise DegenerateCovarianceError(f"need at least 2 samples, got {n}")

    counts = stats_sum.class_counts
    present = counts > 0
    prototypes = np.zeros_like(stats_sum.class_sums)
    prototypes[present] = stats_sum.class_sums[present] / counts[present, None]

    feature_sum = stats_sum.feature_sum()
    mean = feature_sum / n
    cov = (
        stats_sum.second_moment
        - np.outer(mean, feature_sum)
        - np.outer(feature_sum, mean)
        + n * np.outer(mean, mean)
    ) / (n - 1)
    cov = symmetrize(cov)  # kill any residual floating-point asymmetry

    priors = counts / n
    if abs(priors.sum() - 1.0) > 1e-12:
        raise AssertionError("class priors do not sum to 1")
    return GlobalStatistics(
        class_sums=stats_sum.class_sums.copy(),
        class_counts=counts.copy(),
        total_count=n,
        prototypes=prototypes,
        present=present,
        global_mean=mean,
        covariance=cov,
        priors=priors,
        dim=stats_sum.dim,
        num_classes=stats_sum.num_classes,
    )


def centralized_reference(data: LabeledFeatureSet) -> GlobalStatistics:
    """Two-pass ground truth computed from pooled raw features.

    Prototypes and the mean are direct per-group averages; the covariance
    subtracts the mean first and sums outer products of the residuals. Used
    as the oracle that the one-shot reconstruction is measured against.
    """
    if data.n < 2:
        raise DegenerateCovarianceError(f"need at least 2 samples, got {data.n}")
    counts = data.label_histogram()
    present = counts > 0
    prototypes = np.zeros((data.num_classes, data.dim))
    class_sums = np.zeros((data.num_classes, data.dim))
    for cls in np.flatnonzero(present):
        rows = data.features[data.labels == cls]
        class_sums[cls] = rows.sum(axis=0)
        prototypes[cls] = rows.mean(axis=0)
    mean = data.features.mean(axis=0)
    centered = data.features - mean
    cov = symmetrize(centered.T @ centered) / (data.n - 1)
    return GlobalStatistics(
        class_sums=class_sums,
        class_counts=counts,
        total_count=data.n,
        prototypes=prototypes,
        present=present,
        global_mean=mean,
        covariance=cov,
        priors=counts / data.n,
        dim=data.dim,
        num_classes=data.num_classes,
    )


def aggregate_plain(client_stats: list[ClientStatistics]) -> GlobalStatistics:
    """Fold client statistics in ascending position order and aggregate."""
    if not client_stats:
        raise ValueError("no client statistics to aggregate")
    acc = zero_stats(client_stats[0].dim, client_stats[0].num_classes)
    for stats in client_stats:
        acc = merge_stats(acc, stats)
    return aggregate(acc)


def centralized_from_data(data: LabeledFeatureSet) -> GlobalStatistics:
    """One client holding everything: aggregate(compute_client_stats(data))."""
    return aggregate(compute_client_stats(data))


def save_global_statistics(stats: GlobalStatistics, path) -> None:
    """Write metadata JSON at ``path`` plus a binary sidecar next to it.

    The sidecar holds prototypes, mean, covariance, and class sums as
    float64 little-endian blocks after a 16-byte header. This file is what
    personalization clients download in their one extra round.
    """
    path = Path(path)
    sidecar = path.with_suffix(".bin")
    meta = {
        "dim": stats.dim,
        "num_classes": stats.num_classes,
        "total_count": stats.total_count,
        "class_counts": stats.class_counts.tolist(),
        "priors": stats.priors.tolist(),
        "present": stats.present.astype(bool).tolist(),
        "sidecar": sidecar.name,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    with open(sidecar, "wb") as fh:
        fh.write(
            _SIDECAR_HEADER.pack(_SIDECAR_MAGIC, _SIDECAR_VERSION, stats.dim, stats.num_classes)
        )
        fh.write(stats.prototypes.astype("<f8").tobytes(order="C"))
        fh.write(stats.global_mean.astype("<f8").tobytes())
        fh.write(stats.covariance.astype("<f8").tobytes(order="C"))
        fh.write(stats.class_sums.astype("<f8").tobytes(order="C"))


def load_global_statistics(path) -> GlobalStatistics:
    """Inverse of save_global_statistics."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    dim = int(meta["dim"])
    num_classes = int(meta["num_classes"])
    with open(path.parent / meta["sidecar"], "rb") as fh:
        raw = fh.read()
    magic, version, d, c = _SIDECAR_HEADER.unpack_from(raw)
    if magic != _SIDECAR_MAGIC or version != _SIDECAR_VERSION:
        raise ValueError(f"bad sidecar header: magic={magic!r}, version={version}")
    if (d, c) != (dim, num_classes):
        raise ValueError("sidecar shape disagrees with metadata")
    off = _SIDECAR_HEADER.size
    expected = off + 8 * (2 * num_classes * dim + dim + dim * dim)
    if len(raw) != expected:
        raise ValueError(f"sidecar has {len(raw)} bytes, expected {expected}")

    def block(count):
        nonlocal off
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).copy()
        off += 8 * count
        return arr

    prototypes = block(num_classes * dim).reshape(num_classes, dim)
    mean = block(dim)
    cov = block(dim * dim).reshape(dim, dim)
    class_sums = block(num_classes * dim).reshape(num_classes, dim)
    counts = np.asarray(meta["class_counts"], dtype=np.int64)
    return GlobalStatistics(
        class_sums=class_sums,
        class_counts=counts,
        total_count=int(meta["total_count"]),
        prototypes=prototypes,
        present=np.asarray(meta["present"], dtype=bool),
        global_mean=mean,
        covariance=cov,
        priors=np.asarray(meta["priors"], dtype=np.float64),
        dim=dim,
        num_classes=num_classes,
    )
