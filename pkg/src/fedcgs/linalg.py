"""Dense linear-algebra primitives shared by the statistics pipeline.

Vectors are 1-D float64 arrays, symmetric matrices are square 2-D float64
arrays; everything here works on plain ndarrays. All accumulation and solves
run in double precision regardless of how features were stored on disk. The
factorization/solve kernels are written here directly: the pipeline only ever
needs rank-1 updates and one Cholesky factorization per run.
"""

import numpy as np


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky pivot is not strictly positive."""


def as_vector(v, dim: int | None = None) -> np.ndarray:
    """Validate and return ``v`` as a finite 1-D float64 array."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    return v


def as_symmetric(m, dim: int | None = None, *, atol: float = 0.0) -> np.ndarray:
    """Validate and return ``m`` as a finite symmetric float64 matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    if not np.array_equal(m, m.T) and not np.allclose(m, m.T, atol=atol, rtol=0.0):
        raise ValueError("matrix is not symmetric")
    return m


def outer_accumulate(acc: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Return ``acc + v^T v`` for a row vector ``v`` (rank-1 update).

    The outer product of a vector with itself is exactly symmetric in IEEE
    arithmetic, so symmetry of ``acc`` is preserved bit for bit.
    """
    acc = np.asarray(acc, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if acc.ndim != 2 or acc.shape[0] != acc.shape[1]:
        raise ValueError(f"accumulator must be square, got shape {acc.shape}")
    if v.ndim != 1 or v.shape[0] != acc.shape[0]:
        raise ValueError(
            f"dimension mismatch: accumulator is {acc.shape[0]}x{acc.shape[0]}, "
            f"vector has shape {v.shape}"
        )
    return acc + np.outer(v, v)


def cholesky_factor(m: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^T = m for symmetric positive definite m.

    Raises NotPositiveDefiniteError on the first non-positive pivot; callers
    are expected to regularize (ridge) before retrying.
    """
    m = np.asarray(m, dtype=np.float64)
    d = m.shape[0]
    lower = np.zeros((d, d), dtype=np.float64)
    for j in range(d):
        pivot = m[j, j] - lower[j, :j] @ lower[j, :j]
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(
                f"non-positive pivot {pivot!r} at index {j}"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < d:
            lower[j + 1 :, j] = (m[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_triangular(lower: np.ndarray, rhs: np.ndarray, *, transpose: bool = False) -> np.ndarray:
    """Solve L x = rhs (or L^T x = rhs) by substitution; rhs may hold columns."""
    d = lower.shape[0]
    b = np.asarray(rhs, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != d:
        raise ValueError(f"dimension mismatch: factor is {d}x{d}, rhs has shape {rhs.shape}")
    x = np.zeros_like(b)
    if not transpose:
        for i in range(d):
            x[i] = (b[i] - lower[i, :i] @ x[:i]) / lower[i, i]
    else:
        for i in range(d - 1, -1, -1):
            x[i] = (b[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x[:, 0] if squeeze else x


def cholesky_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve m x = rhs for symmetric positive definite m without forming m^-1.

    ``rhs`` may be a vector or a matrix of right-hand-side columns.
    """
    lower = cholesky_factor(as_symmetric(m))
    y = solve_triangular(lower, rhs)
    return solve_triangular(lower, y, transpose=True)


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Average a nearly-symmetric matrix with its transpose."""
    m = np.asarray(m, dtype=np.float64)
    return 0.5 * (m + m.T)
