"""Error-state Kalman filter for pose localization against known beacons.

The filter is written once against the group interface; passing ``Pose2``
with planar beacons or ``Pose3`` with spatial beacons selects 2D or 3D.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_cov, check_vector
from ..core import LieGroup
from ..uncertainty import LOCAL, GaussianState

__all__ = [
    "ControlInput",
    "BeaconMeasurement",
    "SingularInnovationError",
    "eskf_predict",
    "eskf_correct",
    "eskf_correct_many",
    "beacon_observation",
    "ESKFLocalizer",
]


class SingularInnovationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ControlInput:
    """A twist already integrated over the sampling period, with its covariance."""

    u: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        u = check_vector(self.u, name="control")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "W", check_cov(self.W, u.shape[0], "W"))


@dataclass(frozen=True)
class BeaconMeasurement:
    """Beacon position measured in the robot frame."""

    beacon_id: int
    y: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        y = check_vector(self.y, name="measurement")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "N", check_cov(self.N, y.shape[0], "N", definite=True))


def beacon_observation(X: LieGroup, b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expected measurement ``X^-1 . b`` and its Jacobians wrt ``X`` and ``b``."""
    Xi = X.inverse()
    J_xi_x = X.inverse_jac()
    J_e_xi, J_e_b = Xi.act_jacs(b)
    return Xi.act(b), J_e_xi @ J_xi_x, J_e_b


def eskf_predict(state: GaussianState, control: ControlInput) -> GaussianState:
    if state.frame != LOCAL:
        raise ValueError("the filter keeps its covariance in the local frame")
    return GaussianState(*_predict(state.mean, state.cov, control))


def _predict(X: LieGroup, P: np.ndarray, control: ControlInput):
    cls = type(X)
    E = cls.exp(control.u)
    F, G = E.adj_inv(), cls.rjac(control.u)
    return X.compose(E), F @ P @ F.T + G @ control.W @ G.T


def eskf_correct(state: GaussianState, meas: BeaconMeasurement, beacon) -> GaussianState:
    return eskf_correct_many(state, [meas], {meas.beacon_id: beacon})


def eskf_correct_many(
    state: GaussianState,
    measurements: Sequence[BeaconMeasurement],
    beacons: Mapping[int, np.ndarray] | Sequence[np.ndarray],
) -> GaussianState:
    """Joint correction with all ``measurements`` stacked in one innovation."""
    if not measurements:
        return state
    return GaussianState(*_correct(state.mean, state.cov, measurements, beacons))


def _correct(X: LieGroup, P: np.ndarray, measurements, beacons):
    if not measurements:
        return X, P
    # the inverse and its Jacobian are shared by every beacon
    Xi = X.inverse()
    J_xi_x = X.inverse_jac()
    zs, Hs, Ns = [], [], []
    for m in measurements:
        b = np.asarray(beacons[m.beacon_id], dtype=float)
        J_e_xi, _ = Xi.act_jacs(b)
        zs.append(m.y - Xi.act(b))
        Hs.append(J_e_xi @ J_xi_x)
        Ns.append(m.N)
    z = np.concatenate(zs)
    H = np.vstack(Hs)
    N = _blockdiag(Ns)
    Z = H @ P @ H.T + N
    try:
        K = np.linalg.solve(Z, H @ P).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationError("innovation covariance is singular") from exc
    dx = K @ z
    P_new = P - K @ Z @ K.T
    return X.plus(dx), P_new


def _blockdiag(mats) -> np.ndarray:
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n))
    o = 0
    for m in mats:
        k = m.shape[0]
        out[o:o + k, o:o + k] = m
        o += k
    return out


class ESKFLocalizer(BaseEstimator):
    """Run the filter over a control/measurement log.

    Parameters
    ----------
    initial_pose : LieGroup
        Mean of the initial belief.
    initial_cov : array
        Its local covariance.
    beacons : mapping or sequence
        Known beacon positions, indexed by beacon id.

    ``fit(controls, measurements)`` takes one ``ControlInput`` per step and
    one list of ``BeaconMeasurement`` per step (possibly empty), and stores
    the filtered beliefs in ``states_``.
    """

    def __init__(self, initial_pose=None, initial_cov=None, beacons=None):
        self.initial_pose = initial_pose
        self.initial_cov = initial_cov
        self.beacons = beacons

    def fit(self, controls: Sequence[ControlInput], measurements=None):
        if self.initial_pose is None or self.beacons is None:
            raise ValueError("initial_pose and beacons are required")
        n = self.initial_pose.dof
        cov = np.zeros((n, n)) if self.initial_cov is None else self.initial_cov
        state = GaussianState(self.initial_pose, cov)
        if measurements is None:
            measurements = [[] for _ in controls]
        if len(measurements) != len(controls):
            raise ValueError("need one measurement list per control")
        states = []
        X, P = state.mean, state.cov
        for u, ms in zip(controls, measurements):
            X, P = _predict(X, P, u)
            X, P = _correct(X, P, ms, self.beacons)
            state = GaussianState(X, P)
            X, P = state.mean, state.cov
            states.append(state)
        self.states_ = states
        return self

    @property
    def poses_(self) -> list:
        check_is_fitted(self, "states_")
        return [s.mean for s in self.states_]

    def nees(self, truth: Sequence[LieGroup]) -> np.ndarray:
        check_is_fitted(self, "states_")
        return np.array([s.nees(x) for s, x in zip(self.states_, truth)])
