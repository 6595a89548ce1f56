"""3D rotations: unit quaternions (S3) and rotation matrices (SO(3)).

Both use the rotation vector ``theta * u`` as tangent, so every Jacobian
below is shared by the two representations.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DimensionError, LieGroup, as_tangent

__all__ = [
    "skew",
    "vee3",
    "UnitQuaternion",
    "Rot3",
    "exp_q",
    "log_q",
    "exp_so3",
    "log_so3",
    "q_to_R",
    "jr_so3",
    "jr_inv_so3",
    "jl_so3",
    "jl_inv_so3",
    "SMALL_ANGLE",
]

SMALL_ANGLE = 1e-4
UNIT_TOL = 1e-9
_I3 = np.eye(3)
_I3.setflags(write=False)


def skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee3(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def _vec3(tau) -> np.ndarray:
    return as_tangent(tau, 3)


# -- coefficient functions ----------------------------------------------------
# (1 - cos t)/t^2 and (t - sin t)/t^3, with their series below SMALL_ANGLE


def _coef_a(t: float) -> float:
    if t < SMALL_ANGLE:
        return 0.5 - t * t / 24.0
    s = math.sin(0.5 * t)
    return 2.0 * s * s / (t * t)


def _coef_b(t: float) -> float:
    if t < SMALL_ANGLE:
        return 1.0 / 6.0 - t * t / 120.0
    return (t - math.sin(t)) / (t * t * t)


def _coef_inv(t: float) -> float:
    # 1/t^2 - (1 + cos t) / (2 t sin t)
    if t < SMALL_ANGLE:
        return 1.0 / 12.0 + t * t / 720.0
    return 1.0 / (t * t) - (1.0 + math.cos(t)) / (2.0 * t * math.sin(t))


def exp_so3(theta_u) -> Rot3:
    """Rodrigues formula."""
    return Rot3(_rodrigues(_vec3(theta_u)), strict=False, _trusted=True)


def _rodrigues(v: np.ndarray) -> np.ndarray:
    t = math.sqrt(float(v @ v))
    K = skew(v)
    if t < SMALL_ANGLE:
        return _I3 + K + 0.5 * (K @ K)
    return _I3 + (math.sin(t) / t) * K + _coef_a(t) * (K @ K)


def _log_matrix(R: np.ndarray) -> np.ndarray:
    w = vee3(R)  # = sin(t) u
    s = math.sqrt(float(w @ w))
    c = 0.5 * (np.trace(R) - 1.0)
    t = math.atan2(s, c)
    if t < SMALL_ANGLE:
        # t / sin t ~ 1 + t^2/6
        return (1.0 + t * t / 6.0) * w
    if c > -0.99:
        return (t / s) * w
    # near the antipode: the symmetric part gives u u^T
    B = (0.5 * (R + R.T) - c * np.eye(3)) / (1.0 - c)
    k = int(np.argmax(np.diag(B)))
    u = B[:, k] / math.sqrt(max(B[k, k], 0.0))
    u /= np.linalg.norm(u)
    if u @ w < 0.0:
        u = -u
    return t * u


def log_so3(R: Rot3) -> np.ndarray:
    return _log_matrix(R.matrix())


def exp_q(theta_u) -> UnitQuaternion:
    v = _vec3(theta_u)
    t = math.sqrt(float(v @ v))
    if t < SMALL_ANGLE:
        # sin(t/2)/t ~ 1/2 - t^2/48
        k = 0.5 - t * t / 48.0
        return UnitQuaternion(math.cos(0.5 * t), *(k * v))
    k = math.sin(0.5 * t) / t
    return UnitQuaternion(math.cos(0.5 * t), *(k * v))


def log_q(q: UnitQuaternion) -> np.ndarray:
    w, v = q.w, q.vec
    if w < 0.0:
        w, v = -w, -v
    n = math.sqrt(float(v @ v))
    if n < SMALL_ANGLE * 0.5:
        # 2 atan(n / w) / n ~ 2/w (1 - n^2 / (3 w^2))
        return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * v
    return 2.0 * math.atan2(n, w) / n * v


def q_to_R(q: UnitQuaternion) -> np.ndarray:
    w, x, y, z = q.wxyz
    return np.array(
        [
            [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
        ]
    )


def jr_so3(theta_u) -> np.ndarray:
    v = _vec3(theta_u)
    t = math.sqrt(float(v @ v))
    K = skew(v)
    return _I3 - _coef_a(t) * K + _coef_b(t) * (K @ K)


def jl_so3(theta_u) -> np.ndarray:
    v = _vec3(theta_u)
    t = math.sqrt(float(v @ v))
    K = skew(v)
    return _I3 + _coef_a(t) * K + _coef_b(t) * (K @ K)


def jr_inv_so3(theta_u) -> np.ndarray:
    v = _vec3(theta_u)
    t = math.sqrt(float(v @ v))
    K = skew(v)
    return _I3 + 0.5 * K + _coef_inv(t) * (K @ K)


def jl_inv_so3(theta_u) -> np.ndarray:
    v = _vec3(theta_u)
    t = math.sqrt(float(v @ v))
    K = skew(v)
    return _I3 - 0.5 * K + _coef_inv(t) * (K @ K)


class _Spatial(LieGroup):
    """Shared Jacobians of S3 and SO(3)."""

    __slots__ = ()
    dim = 3

    @property
    def dof(self) -> int:
        return 3

    def rotation(self) -> np.ndarray:
        raise NotImplementedError

    def adj(self) -> np.ndarray:
        return self.rotation().copy()

    def adj_inv(self) -> np.ndarray:
        return self.rotation().T.copy()

    def act(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (3,):
            raise DimensionError("3D rotations act on 3-vectors")
        return self.rotation() @ v

    def act_jacs(self, v):
        v = np.asarray(v, dtype=float)
        R = self.rotation()
        return -R @ skew(v), R.copy()

    @classmethod
    def rjac(cls, tau) -> np.ndarray:
        return jr_so3(tau)

    @classmethod
    def ljac(cls, tau) -> np.ndarray:
        return jl_so3(tau)

    @classmethod
    def rjacinv(cls, tau) -> np.ndarray:
        return jr_inv_so3(tau)

    @classmethod
    def ljacinv(cls, tau) -> np.ndarray:
        return jl_inv_so3(tau)

    def plus_jacs(self, tau):
        tau = _vec3(tau)
        return _rodrigues(tau).T, jr_so3(tau)

    @classmethod
    def hat(cls, tau) -> np.ndarray:
        return skew(_vec3(tau))

    @classmethod
    def vee(cls, m) -> np.ndarray:
        return vee3(m)

    @classmethod
    def random(cls, rng: np.random.Generator, max_angle: float = np.pi - 1e-3):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        return cls.exp(u * rng.uniform(0.0, max_angle))


class UnitQuaternion(_Spatial):
    """Unit quaternion stored as (w, x, y, z).

    The sign is left untouched through compositions; ``log`` folds ``q``
    onto the ``w >= 0`` cover.
    """

    __slots__ = ("_q",)

    def __init__(self, w: float = 1.0, x: float = 0.0, y: float = 0.0, z: float = 0.0,
                 *, strict: bool = False):
        q = np.array([w, x, y, z], dtype=float)
        n = float(np.linalg.norm(q))
        if not math.isfinite(n) or n == 0.0:
            raise ValueError("quaternion needs a finite non-zero value")
        if strict and abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"|q| = {n} is not unit")
        q /= n
        q.setflags(write=False)
        self._q = q

    @property
    def w(self) -> float:
        return float(self._q[0])

    @property
    def vec(self) -> np.ndarray:
        return self._q[1:].copy()

    @property
    def wxyz(self) -> np.ndarray:
        return self._q.copy()

    def coeffs(self) -> np.ndarray:
        return self.wxyz

    @classmethod
    def identity(cls) -> UnitQuaternion:
        return cls()

    def identity_like(self) -> UnitQuaternion:
        return UnitQuaternion()

    @classmethod
    def exp(cls, tau) -> UnitQuaternion:
        return exp_q(tau)

    def log(self) -> np.ndarray:
        return log_q(self)

    def compose(self, other: UnitQuaternion) -> UnitQuaternion:
        self._check_same(other)
        w1, x1, y1, z1 = self._q
        w2, x2, y2, z2 = other._q
        return UnitQuaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def inverse(self) -> UnitQuaternion:
        w, x, y, z = self._q
        return UnitQuaternion(w, -x, -y, -z)

    def rotation(self) -> np.ndarray:
        return q_to_R(self)

    def matrix(self) -> np.ndarray:
        return self.rotation()

    def rotate_by_product(self, v) -> np.ndarray:
        """q v q* computed with quaternion products (cross-check of ``act``)."""
        p = UnitQuaternion.__new__(UnitQuaternion)
        p._q = np.concatenate([[0.0], np.asarray(v, dtype=float)])
        r = _qmul(_qmul(self._q, p._q), self.inverse()._q)
        return r[1:]


def _qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


class Rot3(_Spatial):
    """3x3 rotation matrix."""

    __slots__ = ("_R",)

    def __init__(self, R=None, *, strict: bool = False, _trusted: bool = False):
        if R is None:
            R = np.eye(3)
        R = np.array(R, dtype=float)
        if R.shape != (3, 3):
            raise DimensionError("Rot3 needs a 3x3 matrix")
        if strict:
            if np.abs(R.T @ R - np.eye(3)).max() > UNIT_TOL or np.linalg.det(R) < 0:
                raise ValueError("matrix is not a proper rotation")
        elif not _trusted:
            U, _, Vt = np.linalg.svd(R)
            R = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
        R.setflags(write=False)
        self._R = R

    @classmethod
    def identity(cls) -> Rot3:
        return cls()

    def identity_like(self) -> Rot3:
        return Rot3()

    @classmethod
    def exp(cls, tau) -> Rot3:
        return exp_so3(tau)

    def log(self) -> np.ndarray:
        return _log_matrix(self._R)

    def compose(self, other: Rot3) -> Rot3:
        self._check_same(other)
        return Rot3(self._R @ other._R, _trusted=True)

    def inverse(self) -> Rot3:
        return Rot3(self._R.T, _trusted=True)

    def rotation(self) -> np.ndarray:
        return self._R

    def matrix(self) -> np.ndarray:
        return self._R
