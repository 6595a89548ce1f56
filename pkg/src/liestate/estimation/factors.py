"""Factors of the smoothing-and-mapping problem.

A factor is a typed measurement tied to some blocks of the composite state.
Each kind registers a function returning the raw error ``e`` and its
Jacobians wrt the connected blocks (right-plus perturbations).  The whitened
residual is ``r = S e`` with ``S = L^T`` for ``Omega = L L^T``, so that
``|r|^2 = e^T Omega e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .._validation import check_cov, check_vector
from ..composite import Composite
from ..core import DimensionError, LieGroup
from .eskf import beacon_observation

__all__ = [
    "Factor",
    "FactorGraph",
    "RESIDUALS",
    "register_residual",
    "sqrt_information",
    "bias_correct",
    "bias_correct_jac",
    "prior_factor",
    "motion_factor",
    "beacon_factor",
    "calibrated_motion_factor",
    "factor_error",
    "factor_residual",
]

ResidualFn = Callable[[Any, Sequence[LieGroup]], tuple[np.ndarray, list[np.ndarray]]]

#: kind -> function(measurement, blocks) returning (error, [dE/dblock, ...])
RESIDUALS: dict[str, ResidualFn] = {}


def register_residual(kind: str):
    def deco(fn: ResidualFn) -> ResidualFn:
        RESIDUALS[kind] = fn
        return fn
    return deco


def sqrt_information(omega) -> np.ndarray:
    """``S`` with ``S^T S = Omega``, the transposed lower Cholesky factor."""
    omega = np.asarray(omega, dtype=float)
    try:
        L = np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as exc:
        raise ValueError("information matrix is not positive definite") from exc
    return L.T


@dataclass(frozen=True)
class Factor:
    kind: str
    handles: tuple[int, ...]
    measurement: Any
    information: np.ndarray
    sqrt_info: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in RESIDUALS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        object.__setattr__(self, "handles", tuple(int(h) for h in self.handles))
        omega = np.atleast_2d(np.asarray(self.information, dtype=float))
        omega = check_cov(omega, omega.shape[0], "information", definite=True)
        omega.setflags(write=False)
        object.__setattr__(self, "information", omega)
        object.__setattr__(self, "sqrt_info", sqrt_information(omega))

    @classmethod
    def from_covariance(cls, kind: str, handles, measurement, cov) -> Factor:
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(kind, tuple(handles), measurement, np.linalg.inv(cov))

    @property
    def dim(self) -> int:
        return self.information.shape[0]


def factor_error(factor: Factor, state: Composite) -> tuple[np.ndarray, list[np.ndarray]]:
    blocks = [state[h] for h in factor.handles]
    return RESIDUALS[factor.kind](factor.measurement, blocks)


def factor_residual(factor: Factor, state: Composite) -> tuple[np.ndarray, list[np.ndarray]]:
    """Whitened residual and its whitened Jacobian blocks."""
    e, Js = factor_error(factor, state)
    S = factor.sqrt_info
    return S @ e, [S @ J for J in Js]


@dataclass(frozen=True)
class FactorGraph:
    """A composite state together with the factors constraining it."""

    state: Composite
    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        n = len(self.state)
        for f in self.factors:
            for h in f.handles:
                if not 0 <= h < n:
                    raise DimensionError(f"{f.kind} factor refers to missing block {h}")
            e, Js = factor_error(f, self.state)
            if e.shape != (f.dim,):
                raise DimensionError(f"{f.kind} residual has size {e.size}, information is {f.dim}")
            for h, J in zip(f.handles, Js):
                if J.shape != (f.dim, self.state[h].dof):
                    raise DimensionError(f"{f.kind} Jacobian block for {h} has shape {J.shape}")

    def with_state(self, state: Composite) -> FactorGraph:
        return FactorGraph(state, self.factors)

    def without(self, kind: str) -> FactorGraph:
        return FactorGraph(self.state, tuple(f for f in self.factors if f.kind != kind))

    @property
    def n_residuals(self) -> int:
        return sum(f.dim for f in self.factors)


# -- bias model ---------------------------------------------------------------

_BIAS_JAC = np.array([[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]])


def bias_correct(u_tilde, c) -> np.ndarray:
    """Remove the longitudinal and angular biases ``c = (c_v, c_w)`` from a planar twist."""
    u = check_vector(u_tilde, 3, "twist").copy()
    c = check_vector(c, 2, "bias")
    u[0] -= c[0]
    u[2] -= c[1]
    return u


def bias_correct_jac() -> np.ndarray:
    return _BIAS_JAC.copy()


# -- residual kinds -------------------------------------------------------------


@register_residual("prior")
def _prior(measurement: LieGroup, blocks):
    (X,) = blocks
    J, _ = X.minus_jacs(measurement)
    return X.minus(measurement), [J]


@register_residual("motion")
def _motion(u, blocks):
    Xi, Xj = blocks
    J_j, J_i = Xj.minus_jacs(Xi)
    return np.asarray(u, dtype=float) - Xj.minus(Xi), [-J_i, -J_j]


@register_residual("beacon")
def _beacon(y, blocks):
    X, b = blocks
    e, J_x, J_b = beacon_observation(X, b.vector)
    return np.asarray(y, dtype=float) - e, [-J_x, -J_b]


@register_residual("calibrated-motion")
def _calibrated_motion(u_tilde, blocks):
    c, Xi, Xj = blocks
    J_j, J_i = Xj.minus_jacs(Xi)
    e = bias_correct(u_tilde, c.vector) - Xj.minus(Xi)
    return e, [bias_correct_jac(), -J_i, -J_j]


# -- constructors ---------------------------------------------------------------


def prior_factor(i: int, mean: LieGroup, cov) -> Factor:
    return Factor.from_covariance("prior", (i,), mean, cov)


def motion_factor(i: int, j: int, u, cov) -> Factor:
    return Factor.from_covariance("motion", (i, j), check_vector(u, name="twist"), cov)


def beacon_factor(i: int, k: int, y, cov) -> Factor:
    return Factor.from_covariance("beacon", (i, k), check_vector(y, name="measurement"), cov)


def calibrated_motion_factor(c: int, i: int, j: int, u_tilde, cov) -> Factor:
    return Factor.from_covariance(
        "calibrated-motion", (c, i, j), check_vector(u_tilde, 3, "twist"), cov
    )
