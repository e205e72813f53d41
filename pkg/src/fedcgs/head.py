"""Training-free linear classifier built from global feature statistics.

Under class-conditional Gaussians with a shared covariance, the posterior
argmax is linear in the feature vector:

    w_j = Sigma^-1 mu_j
    b_j = log pi_j - 0.5 * mu_j^T Sigma^-1 mu_j

so softmax(W f + b) equals the normalized ratio of class densities. The
quadratic form in the bias uses the inverse covariance; building it with the
plain covariance instead silently breaks that equivalence, which the test
suite pins down as a regression case.

Sigma is ridge-regularized before factorization: Sigma_eps = Sigma + eps * I
with eps = ridge_scale * trace(Sigma) / d, and the same Sigma_eps must be
used on both sides of any density comparison. One Cholesky factorization is
shared by all classes; b_j reuses mu_j^T w_j so no second solve is needed.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregate import GlobalStatistics
from .linalg import NotPositiveDefiniteError, cholesky_factor, solve_triangular

_SIDECAR_HEADER = struct.Struct("<4sIII")  # magic, version, d, C
_SIDECAR_MAGIC = b"FCGH"
_SIDECAR_VERSION = 1


class SingularCovarianceError(ValueError):
    """Covariance not positive definite even after the ridge was applied."""


@dataclass
class LinearHead:
    """Closed-form classifier: logits are ``weights @ f + bias``.

    Rows for globally absent classes are zero and masked out of both the
    argmax and the softmax (semantically their logit is -inf). ``ridge_used``
    records the eps that was actually added to the covariance diagonal.
    """

    weights: np.ndarray  # (C, d)
    bias: np.ndarray  # (C,)
    present: np.ndarray  # (C,) bool
    ridge_used: float
    dim: int
    num_classes: int


def build_head(global_stats: GlobalStatistics, ridge_scale: float = 1e-6) -> LinearHead:
    """Configure the linear head from global statistics; no training involved."""
    if ridge_scale < 0:
        raise ValueError("ridge_scale must be >= 0")
    d = global_stats.dim
    eps = ridge_scale * float(np.trace(global_stats.covariance)) / d
    cov = global_stats.covariance + eps * np.eye(d)
    try:
        lower = cholesky_factor(cov)
    except NotPositiveDefiniteError as exc:
        raise SingularCovarianceError(
            f"covariance is singular even with ridge eps={eps!r}; "
            f"increase ridge_scale"
        ) from exc

    weights = np.zeros((global_stats.num_classes, d))
    bias = np.full(global_stats.num_classes, -np.inf)
    present = global_stats.present
    if present.any():
        protos = global_stats.prototypes[present]
        solved = solve_triangular(lower, solve_triangular(lower, protos.T), transpose=True)
        weights[present] = solved.T
        quad = np.einsum("cd,cd->c", protos, weights[present])
        bias[present] = np.log(global_stats.priors[present]) - 0.5 * quad
    bias = np.where(present, bias, 0.0)
    weights[~present] = 0.0
    return LinearHead(
        weights=weights,
        bias=bias,
        present=present.copy(),
        ridge_used=eps,
        dim=d,
        num_classes=global_stats.num_classes,
    )


def head_logits(head: LinearHead, features: np.ndarray) -> np.ndarray:
    """Raw scores ``W f + b`` for one feature vector or a batch of rows.

    Absent classes get -inf so they can never win an argmax.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != head.dim:
        raise ValueError(
            f"dimension mismatch: head expects {head.dim}, got {features.shape[-1]}"
        )
    scores = features @ head.weights.T + head.bias
    return np.where(head.present, scores, -np.inf)


def head_probabilities(head: LinearHead, features: np.ndarray) -> np.ndarray:
    """Softmax over present-class logits; absent classes get probability 0.

    Max-logit subtraction keeps the exponentials in range; the returned
    vector sums to 1.
    """
    logits = head_logits(head, features)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    weights = np.where(head.present, np.exp(shifted), 0.0)
    return weights / weights.sum(axis=-1, keepdims=True)


def predict(head: LinearHead, features: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties break to the lowest class index."""
    logits = head_logits(head, np.atleast_2d(np.asarray(features, dtype=np.float64)))
    return np.argmax(logits, axis=-1)


def save_head(head: LinearHead, path) -> None:
    """Metadata JSON plus a binary sidecar with W and b as float64."""
    path = Path(path)
    sidecar = path.with_suffix(".bin")
    meta = {
        "dim": head.dim,
        "num_classes": head.num_classes,
        "present": head.present.astype(bool).tolist(),
        "ridge_used": head.ridge_used,
        "sidecar": sidecar.name,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    with open(sidecar, "wb") as fh:
        fh.write(_SIDECAR_HEADER.pack(_SIDECAR_MAGIC, _SIDECAR_VERSION, head.dim, head.num_classes))
        fh.write(head.weights.astype("<f8").tobytes(order="C"))
        fh.write(head.bias.astype("<f8").tobytes())


def load_head(path) -> LinearHead:
    """Inverse of save_head."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    dim = int(meta["dim"])
    num_classes = int(meta["num_classes"])
    with open(path.parent / meta["sidecar"], "rb") as fh:
        raw = fh.read()
    magic, version, d, c = _SIDECAR_HEADER.unpack_from(raw)
    if magic != _SIDECAR_MAGIC or version != _SIDECAR_VERSION or (d, c) != (dim, num_classes):
        raise ValueError("sidecar header disagrees with metadata")
    off = _SIDECAR_HEADER.size
    weights = np.frombuffer(raw, dtype="<f8", count=num_classes * dim, offset=off).reshape(
        num_classes, dim
    )
    off += 8 * num_classes * dim
    bias = np.frombuffer(raw, dtype="<f8", count=num_classes, offset=off)
    return LinearHead(
        weights=weights.copy(),
        bias=bias.copy(),
        present=np.asarray(meta["present"], dtype=bool),
        ridge_used=float(meta["ridge_used"]),
        dim=dim,
        num_classes=num_classes,
    )
