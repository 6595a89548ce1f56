"""Gaussian variables on manifolds.

A :class:`GaussianState` keeps the mean on the group and the covariance on
the tangent space, either local (at the mean, the default) or global (at the
identity).  The ``frame`` tag keeps the two from being mixed silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .core import DimensionError

__all__ = [
    "LOCAL",
    "GLOBAL",
    "INFINITE_VARIANCE",
    "GaussianState",
    "NotPSDError",
    "repair_psd",
    "propagate",
    "local_to_global_cov",
    "global_to_local_cov",
    "sample",
]

LOCAL = "local"
GLOBAL = "global"

#: stand-in for an unbounded variance along a direction; such diagonal
#: entries are skipped by the PSD checks
INFINITE_VARIANCE = 1e12

PSD_CLAMP = 1e-9


class NotPSDError(ValueError):
    pass


def repair_psd(cov, clamp: float = PSD_CLAMP) -> np.ndarray:
    """Symmetrize ``cov`` and clamp slightly negative eigenvalues to zero.

    Eigenvalues below ``-clamp`` (relative to the largest finite scale) are
    reported as errors instead of being hidden.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise DimensionError(f"covariance must be square, got {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise NotPSDError("covariance has non-finite entries")
    cov = 0.5 * (cov + cov.T)
    if cov.size == 0:
        return cov
    try:
        # positive definite matrices need no repair
        np.linalg.cholesky(cov)
        return cov
    except np.linalg.LinAlgError:
        pass
    huge = np.diag(cov) >= INFINITE_VARIANCE
    core = cov[np.ix_(~huge, ~huge)]
    if core.size:
        w, V = np.linalg.eigh(core)
        scale = max(1.0, float(np.abs(w).max()))
        if w.min() < -clamp * scale:
            raise NotPSDError(f"covariance has eigenvalue {w.min():.3e}")
        if w.min() < 0.0:
            core = (V * np.clip(w, 0.0, None)) @ V.T
            core = 0.5 * (core + core.T)
            cov = cov.copy()
            cov[np.ix_(~huge, ~huge)] = core
    return cov


@dataclass(frozen=True)
class GaussianState:
    """``X ~ N(mean, cov)`` with ``cov`` on the tangent space named by ``frame``."""

    mean: Any
    cov: np.ndarray
    frame: str = LOCAL

    def __post_init__(self):
        if self.frame not in (LOCAL, GLOBAL):
            raise ValueError(f"frame must be {LOCAL!r} or {GLOBAL!r}")
        cov = repair_psd(self.cov)
        if cov.shape != (self.mean.dof, self.mean.dof):
            raise DimensionError(
                f"covariance {cov.shape} does not match the {self.mean.dof}-DoF mean"
            )
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)

    @property
    def dof(self) -> int:
        return self.mean.dof

    def to_global(self) -> GaussianState:
        if self.frame == GLOBAL:
            return self
        return GaussianState(self.mean, local_to_global_cov(self.mean, self.cov), GLOBAL)

    def to_local(self) -> GaussianState:
        if self.frame == LOCAL:
            return self
        return GaussianState(self.mean, global_to_local_cov(self.mean, self.cov), LOCAL)

    def error(self, X) -> np.ndarray:
        """Tangent error of ``X`` about the mean, in this state's frame."""
        return X.minus(self.mean) if self.frame == LOCAL else X.lminus(self.mean)

    def nees(self, X) -> float:
        """Normalized estimation error squared of a true value ``X``."""
        e = self.error(X)
        return float(e @ np.linalg.solve(self.cov, e))


def propagate(state: GaussianState, f: Callable[[Any], Any], J) -> GaussianState:
    """Push ``state`` through ``f`` with the Jacobian ``J`` of ``f`` at the mean.

    ``J`` must be of the flavour matching ``state.frame`` (right Jacobians for
    local covariances, left ones for global covariances).
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape[1] != state.dof:
        raise DimensionError(f"Jacobian {J.shape} does not match the {state.dof}-DoF state")
    mean = f(state.mean)
    if J.shape[0] != mean.dof:
        raise DimensionError(f"Jacobian {J.shape} does not match the {mean.dof}-DoF image")
    return GaussianState(mean, J @ state.cov @ J.T, state.frame)


def local_to_global_cov(X, cov_local) -> np.ndarray:
    A = X.adj()
    return repair_psd(A @ np.asarray(cov_local, dtype=float) @ A.T)


def global_to_local_cov(X, cov_global) -> np.ndarray:
    A = X.adj_inv()
    return repair_psd(A @ np.asarray(cov_global, dtype=float) @ A.T)


def sample(state: GaussianState, rng, size: int | None = None):
    """Draw ``X = mean (+) tau`` with ``tau ~ N(0, cov)``.

    ``rng`` is a seed or a ``numpy`` Generator.  Local states use right plus,
    global ones left plus.  Returns one element, or a list when ``size`` is
    given.
    """
    rng = np.random.default_rng(rng)
    n = state.dof
    L = np.linalg.cholesky(state.cov + 1e-12 * np.eye(n))
    k = 1 if size is None else int(size)
    taus = rng.standard_normal((k, n)) @ L.T
    if np.all(state.cov == 0.0):
        taus[:] = 0.0
    plus = state.mean.plus if state.frame == LOCAL else state.mean.lplus
    out = [plus(t) for t in taus]
    return out[0] if size is None else out
