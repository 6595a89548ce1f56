"""SE(3) rigid motions with tangent ordering (rho, theta), each in R^3."""

from __future__ import annotations

import math

import numpy as np

from .core import DimensionError, LieGroup, as_tangent
from .rot3 import Rot3, _log_matrix, _rodrigues, jl_inv_so3, jl_so3, skew

__all__ = [
    "Pose3",
    "q_matrix_se3",
    "exp_se3",
    "log_se3",
    "adj_se3",
    "jl_se3",
    "jr_se3",
    "jl_inv_se3",
    "jr_inv_se3",
]

# below this angle the Q coefficients are evaluated from their series;
# their closed forms lose all digits to cancellation well above 1e-4
SERIES_ANGLE = 0.1


def _q_coefficients(t: float) -> tuple[float, float, float]:
    """(t - sin t)/t^3, (1 - t^2/2 - cos t)/t^4 and (t - sin t - t^3/6)/t^5."""
    if t < SERIES_ANGLE:
        t2 = t * t
        c1 = 1 / 6 - t2 / 120 + t2 * t2 / 5040 - t2**3 / 362880
        c2 = -1 / 24 + t2 / 720 - t2 * t2 / 40320 + t2**3 / 3628800
        c3 = -1 / 120 + t2 / 5040 - t2 * t2 / 362880 + t2**3 / 39916800
        return c1, c2, c3
    s, c = math.sin(t), math.cos(t)
    return (
        (t - s) / t**3,
        (1.0 - 0.5 * t * t - c) / t**4,
        (t - s - t**3 / 6.0) / t**5,
    )


def q_matrix_se3(rho, theta) -> np.ndarray:
    """Upper-right block of the SE(3) left Jacobian."""
    return _q_matrix(as_tangent(rho, 3), as_tangent(theta, 3))


def _q_matrix(rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
    t = math.sqrt(float(theta @ theta))
    P = skew(rho)
    T = skew(theta)
    c1, c2, c3 = _q_coefficients(t)
    TP = T @ P
    PT = P @ T
    TPT = TP @ T
    TT = T @ T
    return (
        0.5 * P
        + c1 * (TP + PT + TPT)
        - c2 * (TT @ P + P @ TT - 3.0 * TPT)
        - 0.5 * (c2 - 3.0 * c3) * (TPT @ T + T @ TPT)
    )


def jl_se3(tau) -> np.ndarray:
    return _jl(as_tangent(tau, 6))


def _jl(tau: np.ndarray) -> np.ndarray:
    rho, theta = tau[:3], tau[3:]
    J = np.zeros((6, 6))
    Jl = jl_so3(theta)
    J[:3, :3] = Jl
    J[3:, 3:] = Jl
    J[:3, 3:] = _q_matrix(rho, theta)
    return J


def jl_inv_se3(tau) -> np.ndarray:
    tau = as_tangent(tau, 6)
    rho, theta = tau[:3], tau[3:]
    J = np.zeros((6, 6))
    Ji = jl_inv_so3(theta)
    J[:3, :3] = Ji
    J[3:, 3:] = Ji
    J[:3, 3:] = -Ji @ _q_matrix(rho, theta) @ Ji
    return J


def jr_se3(tau) -> np.ndarray:
    return _jl(-as_tangent(tau, 6))


def jr_inv_se3(tau) -> np.ndarray:
    return jl_inv_se3(-as_tangent(tau, 6))


class Pose3(LieGroup):
    """Rigid motion ``(R, t)`` in 3D."""

    __slots__ = ("_R", "_t")
    dim = 3

    def __init__(self, R=None, t=None):
        if R is None:
            R = np.eye(3)
        if isinstance(R, Rot3):
            R = R.matrix()
        R = np.array(R, dtype=float)
        t = np.zeros(3) if t is None else np.array(t, dtype=float)
        if R.shape != (3, 3) or t.shape != (3,):
            raise DimensionError("Pose3 needs a 3x3 rotation and a 3-vector")
        R.setflags(write=False)
        t.setflags(write=False)
        self._R = R
        self._t = t

    @classmethod
    def _wrap(cls, R: np.ndarray, t: np.ndarray) -> Pose3:
        # internal results are fresh, well-shaped arrays; skip copy and checks
        X = object.__new__(cls)
        R.setflags(write=False)
        t.setflags(write=False)
        X._R, X._t = R, t
        return X

    @classmethod
    def from_matrix(cls, M) -> Pose3:
        M = np.asarray(M, dtype=float)
        if M.shape != (4, 4):
            raise DimensionError("SE(3) matrix must be 4x4")
        return cls(Rot3(M[:3, :3]).matrix(), M[:3, 3])

    @property
    def dof(self) -> int:
        return 6

    @property
    def translation(self) -> np.ndarray:
        return self._t

    def rotation(self) -> np.ndarray:
        return self._R

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self._R
        M[:3, 3] = self._t
        return M

    @classmethod
    def identity(cls) -> Pose3:
        return cls()

    def identity_like(self) -> Pose3:
        return Pose3()

    def compose(self, other: Pose3) -> Pose3:
        if not isinstance(other, Pose3):
            self._check_same(other)
        return Pose3._wrap(self._R @ other._R, self._t + self._R @ other._t)

    def inverse(self) -> Pose3:
        Rt = self._R.T
        return Pose3._wrap(Rt.copy(), -Rt @ self._t)

    @classmethod
    def exp(cls, tau) -> Pose3:
        tau = as_tangent(tau, 6)
        rho, theta = tau[:3], tau[3:]
        return cls._wrap(_rodrigues(theta), jl_so3(theta) @ rho)

    def log(self) -> np.ndarray:
        theta = _log_matrix(self._R)
        return np.concatenate([jl_inv_so3(theta) @ self._t, theta])

    def adj(self) -> np.ndarray:
        A = np.zeros((6, 6))
        A[:3, :3] = self._R
        A[3:, 3:] = self._R
        A[:3, 3:] = skew(self._t) @ self._R
        return A

    def adj_inv(self) -> np.ndarray:
        Rt = self._R.T
        A = np.zeros((6, 6))
        A[:3, :3] = Rt
        A[3:, 3:] = Rt
        A[:3, 3:] = -Rt @ skew(self._t)
        return A

    def act(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (3,):
            raise DimensionError("SE(3) acts on 3-vectors")
        return self._t + self._R @ p

    def act_jacs(self, p):
        p = np.asarray(p, dtype=float)
        J = np.empty((3, 6))
        J[:, :3] = self._R
        J[:, 3:] = -self._R @ skew(p)
        return J, self._R.copy()

    @classmethod
    def rjac(cls, tau) -> np.ndarray:
        return jr_se3(tau)

    @classmethod
    def ljac(cls, tau) -> np.ndarray:
        return jl_se3(tau)

    @classmethod
    def rjacinv(cls, tau) -> np.ndarray:
        return jr_inv_se3(tau)

    @classmethod
    def ljacinv(cls, tau) -> np.ndarray:
        return jl_inv_se3(tau)

    @classmethod
    def hat(cls, tau) -> np.ndarray:
        tau = as_tangent(tau, 6)
        m = np.zeros((4, 4))
        m[:3, :3] = skew(tau[3:])
        m[:3, 3] = tau[:3]
        return m

    @classmethod
    def vee(cls, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        w = m[:3, :3]
        return np.array([
            m[0, 3], m[1, 3], m[2, 3],
            0.5 * (w[2, 1] - w[1, 2]), 0.5 * (w[0, 2] - w[2, 0]), 0.5 * (w[1, 0] - w[0, 1]),
        ])

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 2.0,
               max_angle: float = np.pi - 1e-3) -> Pose3:
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        return cls(_rodrigues(u * rng.uniform(0.0, max_angle)), rng.uniform(-scale, scale, 3))


def exp_se3(tau) -> Pose3:
    return Pose3.exp(tau)


def log_se3(M: Pose3) -> np.ndarray:
    return M.log()


def adj_se3(M: Pose3) -> np.ndarray:
    return M.adj()
