"""Per-client sufficient statistics and their associative merge.

A client reduces its local data to per-class feature sums, one raw
second-moment matrix, and per-class counts. These are exactly mergeable:
summing them over any partition of a dataset reproduces the statistics of
the whole, which is what makes the one-shot protocol immune to how data is
split across clients.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .data import LabeledFeatureSet

_PAYLOAD_HEADER = struct.Struct("<II")  # d, C


@dataclass
class ClientStatistics:
    """Local upload: class feature sums, raw second moment, class counts.

    ``class_sums[j]`` is the sum of feature rows with label j (zero vector if
    the class is absent locally); ``second_moment`` is the label-agnostic sum
    of row outer products; ``class_counts[j]`` is the number of label-j rows.
    """

    class_sums: np.ndarray  # (C, d) float64
    second_moment: np.ndarray  # (d, d) float64
    class_counts: np.ndarray  # (C,) int64
    dim: int
    num_classes: int

    def __post_init__(self):
        self.class_sums = np.ascontiguousarray(self.class_sums, dtype=np.float64)
        self.second_moment = np.ascontiguousarray(self.second_moment, dtype=np.float64)
        self.class_counts = np.ascontiguousarray(self.class_counts, dtype=np.int64)
        if self.class_sums.shape != (self.num_classes, self.dim):
            raise ValueError(f"class_sums has shape {self.class_sums.shape}")
        if self.second_moment.shape != (self.dim, self.dim):
            raise ValueError(f"second_moment has shape {self.second_moment.shape}")
        if self.class_counts.shape != (self.num_classes,):
            raise ValueError(f"class_counts has shape {self.class_counts.shape}")
        if np.any(self.class_counts < 0):
            raise ValueError("class counts must be non-negative")

    @property
    def total_count(self) -> int:
        return int(self.class_counts.sum())

    def feature_sum(self) -> np.ndarray:
        """Label-agnostic feature sum (the column sums of class_sums)."""
        return self.class_sums.sum(axis=0)


def zero_stats(dim: int, num_classes: int) -> ClientStatistics:
    """The identity element for merge_stats."""
    return ClientStatistics(
        np.zeros((num_classes, dim)),
        np.zeros((dim, dim)),
        np.zeros(num_classes, dtype=np.int64),
        dim,
        num_classes,
    )


def compute_client_stats(data: LabeledFeatureSet) -> ClientStatistics:
    """Reduce a client's local data to its sufficient statistics.

    Streams over samples in file order with double-precision accumulators;
    an empty client yields all-zero statistics.
    """
    stats = zero_stats(data.dim, data.num_classes)
    sums = stats.class_sums
    moment = stats.second_moment
    counts = stats.class_counts
    for row, label in zip(data.features, data.labels):
        sums[label] += row
        moment += np.outer(row, row)
        counts[label] += 1
    return stats


def merge_stats(a: ClientStatistics, b: ClientStatistics) -> ClientStatistics:
    """Componentwise sum of two statistics; associative and commutative."""
    if a.dim != b.dim or a.num_classes != b.num_classes:
        raise ValueError(
            f"shape mismatch: ({a.dim}, {a.num_classes}) vs ({b.dim}, {b.num_classes})"
        )
    return ClientStatistics(
        a.class_sums + b.class_sums,
        a.second_moment + b.second_moment,
        a.class_counts + b.class_counts,
        a.dim,
        a.num_classes,
    )


def serialize_stats(stats: ClientStatistics) -> bytes:
    """Upload payload: d u32, C u32, C counts u64, C*d sums, d*d second moment.

    Sums and the full row-major second-moment matrix are little-endian
    doubles. This layout is what the secure-sum round encodes and what the
    communication accounting counts: (C + d) * d + C scalars per client.
    """
    return b"".join(
        (
            _PAYLOAD_HEADER.pack(stats.dim, stats.num_classes),
            stats.class_counts.astype("<u8").tobytes(),
            stats.class_sums.astype("<f8").tobytes(order="C"),
            stats.second_moment.astype("<f8").tobytes(order="C"),
        )
    )


def deserialize_stats(payload: bytes) -> ClientStatistics:
    """Inverse of serialize_stats."""
    if len(payload) < _PAYLOAD_HEADER.size:
        raise ValueError("payload too short for header")
    dim, num_classes = _PAYLOAD_HEADER.unpack_from(payload)
    expected = _PAYLOAD_HEADER.size + 8 * (num_classes + num_classes * dim + dim * dim)
    if len(payload) != expected:
        raise ValueError(f"payload has {len(payload)} bytes, expected {expected}")
    off = _PAYLOAD_HEADER.size
    counts = np.frombuffer(payload, dtype="<u8", count=num_classes, offset=off).astype(np.int64)
    off += 8 * num_classes
    sums = np.frombuffer(payload, dtype="<f8", count=num_classes * dim, offset=off).reshape(
        num_classes, dim
    )
    off += 8 * num_classes * dim
    moment = np.frombuffer(payload, dtype="<f8", count=dim * dim, offset=off).reshape(dim, dim)
    return ClientStatistics(sums.copy(), moment.copy(), counts, dim, num_classes)
