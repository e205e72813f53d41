"""Split one labeled feature set into disjoint per-client datasets.

Label-shift heterogeneity follows the usual Dirichlet construction: for each
class, client proportions are drawn from Dir(alpha * 1_M) and the class's
samples are dealt out by largest-remainder rounding. Lower alpha means more
skew; clients may come out empty under extreme settings, which downstream
statistics handle as zero contributions.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledFeatureSet


class PartitionError(ValueError):
    """Invalid partition request (e.g. more clients than samples)."""


@dataclass(frozen=True)
class PartitionSpec:
    """How to split a dataset across ``num_clients``.

    scheme: "dirichlet" (label shift, needs ``alpha``), "uniform" (random
    near-equal split), or "by_assignment" (``assignment[i]`` is the client id
    of sample ``i``).
    """

    num_clients: int
    scheme: str = "dirichlet"
    alpha: float | None = 0.5
    seed: int = 0
    assignment: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.num_clients < 1:
            raise ValueError("num_clients must be >= 1")
        if self.scheme not in ("dirichlet", "uniform", "by_assignment"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "dirichlet" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("dirichlet scheme requires alpha > 0")
        if self.scheme == "by_assignment" and self.assignment is None:
            raise ValueError("by_assignment scheme requires an assignment array")


def _largest_remainder_counts(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` that best match ``proportions``.

    Ties in the fractional parts are broken by ascending client id (stable
    sort on the negated fractions), so the result is fully deterministic.
    """
    raw = proportions * total
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def partition_indices(labels: np.ndarray, num_classes: int, spec: PartitionSpec) -> list[np.ndarray]:
    """Assign each sample index to a client; returns one sorted index array per client.

    Every index appears exactly once across the outputs.
    """
    n = len(labels)
    if spec.num_clients > n:
        raise PartitionError(f"cannot split {n} samples across {spec.num_clients} clients")

    rng = np.random.default_rng(spec.seed)
    out: list[list[int]] = [[] for _ in range(spec.num_clients)]

    if spec.scheme == "by_assignment":
        assignment = np.asarray(spec.assignment, dtype=np.int64)
        if assignment.shape != (n,):
            raise PartitionError(
                f"assignment must have one entry per sample, got shape {assignment.shape}"
            )
        if assignment.min() < 0 or assignment.max() >= spec.num_clients:
            raise PartitionError("assignment contains out-of-range client ids")
        return [np.flatnonzero(assignment == i) for i in range(spec.num_clients)]

    if spec.scheme == "uniform":
        perm = rng.permutation(n)
        splits = np.array_split(perm, spec.num_clients)
        return [np.sort(s) for s in splits]

    # dirichlet: per class, deal shuffled sample indices out by drawn proportions
    for cls in range(num_classes):
        cls_idx = np.flatnonzero(labels == cls)
        if len(cls_idx) == 0:
            continue
        rng.shuffle(cls_idx)
        proportions = rng.dirichlet(np.full(spec.num_clients, spec.alpha))
        counts = _largest_remainder_counts(proportions, len(cls_idx))
        start = 0
        for client, cnt in enumerate(counts):
            out[client].extend(cls_idx[start : start + cnt])
            start += cnt
    return [np.sort(np.asarray(idx, dtype=np.int64)) for idx in out]


def partition(data: LabeledFeatureSet, spec: PartitionSpec) -> list[LabeledFeatureSet]:
    """Split ``data`` into ``spec.num_clients`` disjoint client datasets.

    The outputs are disjoint and their union is exactly the input; each
    client's rows keep their original relative order.
    """
    parts = partition_indices(data.labels, data.num_classes, spec)
    return [data.take(idx) for idx in parts]
