"""The translation group (R^n, +).

Elements, algebra and tangent coincide, so Exp and Log are the identity and
every Jacobian is ``+-I``.  Beacons and sensor biases live here.
"""

from __future__ import annotations

import numpy as np

from .core import DimensionError, LieGroup, as_tangent

__all__ = ["TransN", "exp_t", "log_t", "compose_t", "inverse_t", "adj_t", "tn_matrix"]


class TransN(LieGroup):
    __slots__ = ("_v",)

    def __init__(self, v):
        v = as_tangent(v)
        v = v.copy()
        v.setflags(write=False)
        self._v = v

    @property
    def dof(self) -> int:
        return self._v.shape[0]

    @property
    def dim(self) -> int:
        return self._v.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self._v

    def coeffs(self) -> np.ndarray:
        return self._v.copy()

    @classmethod
    def identity(cls, n: int) -> TransN:
        return cls(np.zeros(n))

    def identity_like(self) -> TransN:
        return TransN(np.zeros(self.dof))

    def compose(self, other: TransN) -> TransN:
        self._check_same(other)
        return TransN(self._v + other._v)

    def inverse(self) -> TransN:
        return TransN(-self._v)

    @classmethod
    def exp(cls, tau) -> TransN:
        return cls(tau)

    def log(self) -> np.ndarray:
        return self._v.copy()

    def plus(self, tau) -> TransN:
        return TransN(self._v + as_tangent(tau, self.dof))

    def minus(self, other: TransN) -> np.ndarray:
        self._check_same(other)
        return self._v - other._v

    def adj(self) -> np.ndarray:
        return np.eye(self.dof)

    def adj_inv(self) -> np.ndarray:
        return np.eye(self.dof)

    def act(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dof,):
            raise DimensionError(f"T({self.dof}) acts on {self.dof}-vectors")
        return self._v + p

    def act_jacs(self, p):
        n = self.dof
        return np.eye(n), np.eye(n)

    @classmethod
    def rjac(cls, tau) -> np.ndarray:
        return np.eye(as_tangent(tau).shape[0])

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
        return -np.eye(self.dof)

    def plus_jacs(self, tau):
        n = self.dof
        return np.eye(n), np.eye(n)

    def minus_jacs(self, other):
        n = self.dof
        return np.eye(n), -np.eye(n)

    def matrix(self) -> np.ndarray:
        """The T(n) homogeneous form [[I, t], [0, 1]]."""
        return tn_matrix(self._v)

    @classmethod
    def hat(cls, tau) -> np.ndarray:
        tau = as_tangent(tau)
        n = tau.shape[0]
        m = np.zeros((n + 1, n + 1))
        m[:n, n] = tau
        return m

    @classmethod
    def vee(cls, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return m[:-1, -1].copy()

    @classmethod
    def random(cls, rng: np.random.Generator, n: int = 2, scale: float = 5.0) -> TransN:
        return cls(rng.uniform(-scale, scale, n))


def tn_matrix(t) -> np.ndarray:
    t = as_tangent(t)
    n = t.shape[0]
    T = np.eye(n + 1)
    T[:n, n] = t
    return T


def exp_t(v) -> TransN:
    return TransN.exp(v)


def log_t(t: TransN) -> np.ndarray:
    return t.log()


def compose_t(a: TransN, b: TransN) -> TransN:
    return a.compose(b)


def inverse_t(a: TransN) -> TransN:
    return a.inverse()


def adj_t(a: TransN) -> np.ndarray:
    return a.adj()
