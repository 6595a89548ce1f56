"""Planar rotations: unit complex numbers (S1) and 2x2 rotation matrices (SO(2)).

Both share the scalar tangent ``theta`` (stored as a length-1 vector) and
identical Jacobians, which are all scalars.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DimensionError, LieGroup, as_tangent

__all__ = [
    "SKEW1",
    "wrap_angle",
    "UnitComplex",
    "Rot2",
    "exp_s1",
    "log_s1",
    "exp_so2",
    "log_so2",
    "rot2_matrix",
    "jac_blocks_rot2",
    "act_rot2",
    "jac_act_R",
    "jac_act_v",
]

#: the generator [1]x of so(2)
SKEW1 = np.array([[0.0, -1.0], [1.0, 0.0]])
SKEW1.setflags(write=False)

UNIT_TOL = 1e-9


def wrap_angle(a):
    """Wrap an angle (or array of angles) to (-pi, pi]."""
    if isinstance(a, float) and -math.pi < a <= math.pi:
        return a
    w = np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)
    return float(w) if np.ndim(w) == 0 else w


def rot2_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _scalar(tau) -> float:
    return float(as_tangent(tau, 1)[0])


class _Planar(LieGroup):
    """Shared machinery of S1 and SO(2); subclasses store the element."""

    __slots__ = ()
    dim = 2

    @property
    def dof(self) -> int:
        return 1

    @property
    def angle(self) -> float:
        raise NotImplementedError

    def rotation(self) -> np.ndarray:
        return rot2_matrix(self.angle)

    def log(self) -> np.ndarray:
        return np.array([self.angle])

    def adj(self) -> np.ndarray:
        return np.ones((1, 1))

    def act(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (2,):
            raise DimensionError("planar rotations act on 2-vectors")
        return self.rotation() @ v

    def act_jacs(self, v):
        v = np.asarray(v, dtype=float)
        R = self.rotation()
        return (R @ SKEW1 @ v).reshape(2, 1), R

    @classmethod
    def rjac(cls, tau) -> np.ndarray:
        _scalar(tau)
        return np.ones((1, 1))

    @classmethod
    def ljac(cls, tau) -> np.ndarray:
        return cls.rjac(tau)

    @classmethod
    def rjacinv(cls, tau) -> np.ndarray:
        return cls.rjac(tau)

    @classmethod
    def ljacinv(cls, tau) -> np.ndarray:
        return cls.rjac(tau)

    def inverse_jac(self) -> np.ndarray:
        return -np.ones((1, 1))

    def compose_jacs(self, other):
        self._check_same(other)
        return np.ones((1, 1)), np.ones((1, 1))

    def plus_jacs(self, tau):
        _scalar(tau)
        return np.ones((1, 1)), np.ones((1, 1))

    def minus_jacs(self, other):
        self._check_same(other)
        return np.ones((1, 1)), -np.ones((1, 1))

    @classmethod
    def hat(cls, tau) -> np.ndarray:
        return _scalar(tau) * SKEW1

    @classmethod
    def vee(cls, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return np.array([0.5 * (m[1, 0] - m[0, 1])])

    @classmethod
    def random(cls, rng: np.random.Generator, *args):
        return cls.exp([rng.uniform(-np.pi, np.pi)])


class UnitComplex(_Planar):
    """Unit complex number ``re + i im``."""

    __slots__ = ("_z",)

    def __init__(self, re: float = 1.0, im: float = 0.0, *, strict: bool = False):
        n = math.hypot(re, im)
        if not math.isfinite(n) or n == 0.0:
            raise ValueError("unit complex number needs a finite non-zero value")
        if strict and abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"|z| = {n} is not unit")
        self._z = complex(re / n, im / n)

    @property
    def re(self) -> float:
        return self._z.real

    @property
    def im(self) -> float:
        return self._z.imag

    @property
    def angle(self) -> float:
        return math.atan2(self._z.imag, self._z.real)

    @classmethod
    def identity(cls) -> UnitComplex:
        return cls(1.0, 0.0)

    def identity_like(self) -> UnitComplex:
        return UnitComplex()

    @classmethod
    def exp(cls, tau) -> UnitComplex:
        th = _scalar(tau)
        return cls(math.cos(th), math.sin(th))

    def compose(self, other: UnitComplex) -> UnitComplex:
        self._check_same(other)
        z = self._z * other._z
        return UnitComplex(z.real, z.imag)

    def inverse(self) -> UnitComplex:
        return UnitComplex(self._z.real, -self._z.imag)

    def matrix(self) -> np.ndarray:
        return self.rotation()

    def coeffs(self) -> np.ndarray:
        return np.array([self.re, self.im])


class Rot2(_Planar):
    """2x2 rotation matrix."""

    __slots__ = ("_R",)

    def __init__(self, R=None, *, strict: bool = False):
        if R is None:
            R = np.eye(2)
        R = np.array(R, dtype=float)
        if R.shape != (2, 2):
            raise DimensionError("Rot2 needs a 2x2 matrix")
        if strict:
            if np.abs(R.T @ R - np.eye(2)).max() > UNIT_TOL or np.linalg.det(R) < 0:
                raise ValueError("matrix is not a proper rotation")
        else:
            # re-project onto SO(2) through the angle
            R = rot2_matrix(math.atan2(R[1, 0] - R[0, 1], R[0, 0] + R[1, 1]))
        R.setflags(write=False)
        self._R = R

    @property
    def angle(self) -> float:
        return math.atan2(self._R[1, 0], self._R[0, 0])

    def rotation(self) -> np.ndarray:
        return self._R

    @classmethod
    def identity(cls) -> Rot2:
        return cls()

    def identity_like(self) -> Rot2:
        return Rot2()

    @classmethod
    def exp(cls, tau) -> Rot2:
        return cls(rot2_matrix(_scalar(tau)), strict=True)

    def compose(self, other: Rot2) -> Rot2:
        self._check_same(other)
        return Rot2(self._R @ other._R)

    def inverse(self) -> Rot2:
        return Rot2(self._R.T, strict=True)

    def matrix(self) -> np.ndarray:
        return self._R


# -- functional API ---------------------------------------------------------


def exp_s1(theta: float) -> UnitComplex:
    return UnitComplex.exp([theta])


def log_s1(z: UnitComplex) -> float:
    """Angle of ``z`` in (-pi, pi]."""
    return wrap_angle(z.angle)


def exp_so2(theta: float) -> Rot2:
    return Rot2.exp([theta])


def log_so2(R: Rot2) -> float:
    return wrap_angle(R.angle)


def jac_blocks_rot2() -> dict[str, float]:
    """The scalar Jacobian blocks shared by S1 and SO(2)."""
    return {
        "adj": 1.0,
        "inv": -1.0,
        "compose_lhs": 1.0,
        "compose_rhs": 1.0,
        "jr": 1.0,
        "jl": 1.0,
        "plus_x": 1.0,
        "plus_tau": 1.0,
        "minus_y": 1.0,
        "minus_x": -1.0,
    }


def act_rot2(R: _Planar, v) -> np.ndarray:
    return R.act(v)


def jac_act_R(R: _Planar, v) -> np.ndarray:
    """d(Rv)/dR = R [1]x v, a 2x1 block."""
    return R.act_jacs(v)[0]


def jac_act_v(R: _Planar, v) -> np.ndarray:
    return R.act_jacs(v)[1]
