"""SE(2) rigid motions with tangent ordering (rho_x, rho_y, theta)."""

from __future__ import annotations

import math

import numpy as np

from .core import DimensionError, LieGroup, as_tangent
from .rot2 import SKEW1, wrap_angle

__all__ = [
    "Pose2",
    "v_matrix_se2",
    "v_inv_se2",
    "exp_se2",
    "log_se2",
    "inverse_se2",
    "compose_se2",
    "adj_se2",
    "act_se2",
]

SMALL_ANGLE = 1e-4


def _ab(t: float) -> tuple[float, float, float]:
    """sin t / t, (1 - cos t)/t and (t - sin t)/t^2."""
    if abs(t) < SMALL_ANGLE:
        t2 = t * t
        return 1.0 - t2 / 6.0, t / 2.0 - t * t2 / 24.0, t / 6.0 - t * t2 / 120.0
    s = math.sin(0.5 * t)
    return math.sin(t) / t, 2.0 * s * s / t, (t - math.sin(t)) / (t * t)


def v_matrix_se2(theta: float) -> np.ndarray:
    a, b, _ = _ab(theta)
    return np.array([[a, -b], [b, a]])


def v_inv_se2(theta: float) -> np.ndarray:
    """Closed-form inverse of V(theta) = a I + b [1]x."""
    a, b, _ = _ab(theta)
    d = a * a + b * b
    return np.array([[a, b], [-b, a]]) / d


class Pose2(LieGroup):
    """Planar rigid motion ``(R(theta), t)``."""

    __slots__ = ("_th", "_c", "_s", "_t")
    dim = 2

    def __init__(self, x: float = 0.0, y: float = 0.0, theta: float = 0.0):
        th = wrap_angle(float(theta))
        self._th = th
        self._c = math.cos(th)
        self._s = math.sin(th)
        t = np.array([x, y], dtype=float)
        t.setflags(write=False)
        self._t = t

    @classmethod
    def from_rt(cls, R, t) -> Pose2:
        R = np.asarray(R, dtype=float)
        return cls(t[0], t[1], math.atan2(R[1, 0], R[0, 0]))

    @classmethod
    def from_matrix(cls, M) -> Pose2:
        M = np.asarray(M, dtype=float)
        if M.shape != (3, 3):
            raise DimensionError("SE(2) matrix must be 3x3")
        return cls.from_rt(M[:2, :2], M[:2, 2])

    @property
    def dof(self) -> int:
        return 3

    @property
    def x(self) -> float:
        return float(self._t[0])

    @property
    def y(self) -> float:
        return float(self._t[1])

    @property
    def angle(self) -> float:
        return self._th

    @property
    def translation(self) -> np.ndarray:
        return self._t

    def rotation(self) -> np.ndarray:
        return np.array([[self._c, -self._s], [self._s, self._c]])

    def matrix(self) -> np.ndarray:
        M = np.eye(3)
        M[:2, :2] = self.rotation()
        M[:2, 2] = self._t
        return M

    def coeffs(self) -> np.ndarray:
        return np.array([self._t[0], self._t[1], self._th])

    @classmethod
    def identity(cls) -> Pose2:
        return cls()

    def identity_like(self) -> Pose2:
        return Pose2()

    def compose(self, other: Pose2) -> Pose2:
        if not isinstance(other, Pose2):
            self._check_same(other)
        c, s = self._c, self._s
        ox, oy = other._t
        return Pose2(
            self._t[0] + c * ox - s * oy,
            self._t[1] + s * ox + c * oy,
            self._th + other._th,
        )

    def inverse(self) -> Pose2:
        c, s = self._c, self._s
        x, y = self._t
        return Pose2(-c * x - s * y, s * x - c * y, -self._th)

    @classmethod
    def exp(cls, tau) -> Pose2:
        r1, r2, th = as_tangent(tau, 3)
        a, b, _ = _ab(th)
        return cls(a * r1 - b * r2, b * r1 + a * r2, th)

    def log(self) -> np.ndarray:
        th = self._th
        a, b, _ = _ab(th)
        d = a * a + b * b
        x, y = self._t
        return np.array([(a * x + b * y) / d, (-b * x + a * y) / d, th])

    def adj(self) -> np.ndarray:
        x, y = self._t
        return np.array([[self._c, -self._s, y], [self._s, self._c, -x], [0.0, 0.0, 1.0]])

    def adj_inv(self) -> np.ndarray:
        R = self.rotation()
        A = np.eye(3)
        A[:2, :2] = R.T
        A[:2, 2] = R.T @ SKEW1 @ self._t
        return A

    def act(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (2,):
            raise DimensionError("SE(2) acts on 2-vectors")
        return self._t + self.rotation() @ p

    def act_jacs(self, p):
        p = np.asarray(p, dtype=float)
        R = self.rotation()
        J = np.empty((2, 3))
        J[:, :2] = R
        J[:, 2] = R @ SKEW1 @ p
        return J, R

    @classmethod
    def rjac(cls, tau) -> np.ndarray:
        r1, r2, th = as_tangent(tau, 3)
        a, b, c = _ab(th)
        return np.array([
            [a, b, r1 * c - r2 * _one_minus_cos_over_t2(th)],
            [-b, a, r1 * _one_minus_cos_over_t2(th) + r2 * c],
            [0.0, 0.0, 1.0],
        ])

    @classmethod
    def ljac(cls, tau) -> np.ndarray:
        r1, r2, th = as_tangent(tau, 3)
        a, b, c = _ab(th)
        d = _one_minus_cos_over_t2(th)
        return np.array([
            [a, -b, r1 * c + r2 * d],
            [b, a, -r1 * d + r2 * c],
            [0.0, 0.0, 1.0],
        ])

    @classmethod
    def rjacinv(cls, tau) -> np.ndarray:
        return _inv_jac(cls.rjac(tau))

    @classmethod
    def ljacinv(cls, tau) -> np.ndarray:
        return _inv_jac(cls.ljac(tau))

    @classmethod
    def hat(cls, tau) -> np.ndarray:
        r1, r2, th = as_tangent(tau, 3)
        return np.array([[0.0, -th, r1], [th, 0.0, r2], [0.0, 0.0, 0.0]])

    @classmethod
    def vee(cls, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return np.array([m[0, 2], m[1, 2], 0.5 * (m[1, 0] - m[0, 1])])

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 2.0) -> Pose2:
        x, y = rng.uniform(-scale, scale, size=2)
        return cls(x, y, rng.uniform(-np.pi, np.pi))


def _one_minus_cos_over_t2(t: float) -> float:
    if abs(t) < SMALL_ANGLE:
        return 0.5 - t * t / 24.0
    s = math.sin(0.5 * t)
    return 2.0 * s * s / (t * t)


def _inv_jac(J: np.ndarray) -> np.ndarray:
    # block upper-triangular [[A, c], [0, 1]] -> [[A^-1, -A^-1 c], [0, 1]]
    A = J[:2, :2]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    Ai = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
    out = np.eye(3)
    out[:2, :2] = Ai
    out[:2, 2] = -Ai @ J[:2, 2]
    return out


# -- functional API ---------------------------------------------------------


def exp_se2(tau) -> Pose2:
    return Pose2.exp(tau)


def log_se2(M: Pose2) -> np.ndarray:
    return M.log()


def inverse_se2(M: Pose2) -> Pose2:
    return M.inverse()


def compose_se2(Ma: Pose2, Mb: Pose2) -> Pose2:
    return Ma.compose(Mb)


def adj_se2(M: Pose2) -> np.ndarray:
    return M.adj()


def act_se2(M: Pose2, p) -> np.ndarray:
    return M.act(p)

