"""Small input checks shared by the estimators."""

from __future__ import annotations

import numpy as np

from .core import DimensionError


def check_cov(M, n: int, name: str = "covariance", *, definite: bool = False) -> np.ndarray:
    """Return ``M`` as a symmetric ``n x n`` float matrix, checking PSD (or PD)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape != (n, n):
        raise DimensionError(f"{name} must be {n}x{n}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    if np.abs(M - M.T).max(initial=0.0) > 1e-9 * max(1.0, np.abs(M).max(initial=0.0)):
        raise ValueError(f"{name} is not symmetric")
    M = 0.5 * (M + M.T)
    if n and not np.any(M - np.diag(np.diag(M))):
        w = np.sort(np.diag(M))
    else:
        w = np.linalg.eigvalsh(M) if n else np.zeros(0)
    floor = -1e-12 * max(1.0, float(np.abs(w).max(initial=0.0)))
    if definite and n and w.min() <= 0.0:
        raise ValueError(f"{name} is not positive definite")
    if n and w.min() < floor:
        raise ValueError(f"{name} is not positive semi-definite")
    return M


def check_vector(v, n: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1 or (n is not None and v.shape[0] != n):
        raise DimensionError(f"{name} must have length {n}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v
