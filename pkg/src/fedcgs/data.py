"""Labeled feature sets: binary file format and a synthetic generator.

The on-disk format (little-endian) is the exchange contract with external
feature exporters:

    magic   4 bytes  b"FCGS"
    version u32      1
    N       u64      number of rows
    d       u32      feature dimension
    C       u32      number of classes

24 bytes of header, then ``N * d`` float32 features row-major, then ``N``
labels as u32. Features are stored single precision (typical extractor
output); they are promoted to float64 on load and all downstream math runs
in double.
"""

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"FCGS"
VERSION = 1
_HEADER = struct.Struct("<4sIQII")  # magic, version, N, d, C


class FormatError(ValueError):
    """File does not start with the expected magic/version."""


class IntegrityError(ValueError):
    """Header and payload disagree with the declared invariants."""


class TruncationError(ValueError):
    """Payload is shorter than the header declares."""


class IoError(OSError):
    """Underlying read/write failure."""


@dataclass
class LabeledFeatureSet:
    """``n`` feature row-vectors of dimension ``dim`` with labels in [0, C).

    ``features`` is float64 in memory (promoted from the float32 storage),
    ``labels`` is int64. Empty sets (n == 0) are legal in memory -- extreme
    non-IID partitions produce them -- but cannot be written to disk.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    dim: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.features.shape != (len(self.labels), self.dim):
            raise ValueError(
                f"shape mismatch: features {self.features.shape}, "
                f"{len(self.labels)} labels, dim {self.dim}"
            )
        if self.num_classes < 1 or self.dim < 1:
            raise ValueError("num_classes and dim must be positive")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels must lie in [0, num_classes)")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def take(self, indices) -> "LabeledFeatureSet":
        """Subset by row indices (copies)."""
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledFeatureSet(
            self.features[idx].copy(), self.labels[idx].copy(), self.num_classes, self.dim
        )

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes).astype(np.int64)


def write_feature_file(data: LabeledFeatureSet, path) -> None:
    """Write ``data`` to ``path``; the float32 round-trip is bit-exact."""
    if data.n < 1:
        raise ValueError("cannot write an empty feature set")
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, data.n, data.dim, data.num_classes))
            fh.write(data.features.astype(np.float32).tobytes(order="C"))
            fh.write(data.labels.astype(np.uint32).tobytes())
    except OSError as exc:
        raise IoError(f"failed to write feature file {path!r}: {exc}") from exc


def read_feature_file(path) -> LabeledFeatureSet:
    """Read a feature file, validating header, payload length, and labels."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"failed to read feature file {path!r}: {exc}") from exc

    if len(raw) < _HEADER.size:
        raise FormatError(f"file too short for header ({len(raw)} bytes)")
    magic, version, n, dim, num_classes = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if n < 1 or dim < 1 or num_classes < 1:
        raise IntegrityError(f"degenerate header: N={n}, d={dim}, C={num_classes}")

    expected = _HEADER.size + n * dim * 4 + n * 4
    if len(raw) < expected:
        raise TruncationError(f"expected {expected} bytes, file has {len(raw)}")
    if len(raw) > expected:
        raise IntegrityError(f"trailing bytes: expected {expected}, file has {len(raw)}")

    off = _HEADER.size
    feats = np.frombuffer(raw, dtype="<f4", count=n * dim, offset=off).reshape(n, dim)
    off += n * dim * 4
    labels = np.frombuffer(raw, dtype="<u4", count=n, offset=off).astype(np.int64)
    if not np.all(np.isfinite(feats)):
        raise IntegrityError("features contain non-finite entries")
    if labels.max() >= num_classes:
        raise IntegrityError(
            f"label {int(labels.max())} out of range for {num_classes} classes"
        )
    return LabeledFeatureSet(feats.astype(np.float64), labels, num_classes, dim)


@dataclass(frozen=True)
class SyntheticSpec:
    """Shared-covariance Gaussian mixture: a stand-in for extractor output.

    Class means are ``class_mean_scale`` times seeded unit-norm directions;
    every class shares the isotropic covariance ``shared_covariance_scale * I``.
    Under this model the closed-form shared-covariance head is Bayes-optimal,
    which makes accuracy sharply checkable against the true-parameter rule.
    """

    num_classes: int
    dim: int
    samples_per_class: int
    class_mean_scale: float = 3.0
    shared_covariance_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 1 or self.dim < 1 or self.samples_per_class < 1:
            raise ValueError("all counts must be positive")
        if self.class_mean_scale <= 0 or self.shared_covariance_scale <= 0:
            raise ValueError("scales must be positive")


def synthetic_params(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """True generating parameters: (C x d class means, d x d shared covariance)."""
    means_seq, _ = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(means_seq)
    dirs = rng.standard_normal((spec.num_classes, spec.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    means = spec.class_mean_scale * dirs
    cov = spec.shared_covariance_scale * np.eye(spec.dim)
    return means, cov


def generate_synthetic(spec: SyntheticSpec) -> LabeledFeatureSet:
    """Draw the labeled set described by ``spec``; pure function of the spec.

    Rows are grouped by class (class 0 first). Values are rounded to float32
    so the set survives a file round trip bit-exactly.
    """
    means, _ = synthetic_params(spec)
    _, samples_seq = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(samples_seq)
    std = np.sqrt(spec.shared_covariance_scale)
    noise = rng.standard_normal((spec.num_classes, spec.samples_per_class, spec.dim))
    feats = (means[:, None, :] + std * noise).reshape(-1, spec.dim)
    labels = np.repeat(np.arange(spec.num_classes, dtype=np.int64), spec.samples_per_class)
    feats = feats.astype(np.float32).astype(np.float64)
    return LabeledFeatureSet(feats, labels, spec.num_classes, spec.dim)
