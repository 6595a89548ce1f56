"""Abstract group contract and the numerical-derivative oracle.

Every concrete group (``UnitComplex``, ``Rot2``, ``UnitQuaternion``, ``Rot3``,
``Pose2``, ``Pose3``, ``TransN``) derives from :class:`LieGroup`.  Tangent
vectors are plain 1-D ``numpy`` arrays of length ``dof``; the matrix forms of
the Lie algebra are only reachable through :meth:`LieGroup.hat`.

Plus and minus default to their *right* (local frame) flavour::

    X + tau  ==  X.plus(tau)   == X o Exp(tau)
    Y - X    ==  Y.minus(X)    == Log(X^-1 o Y)

The left (global frame) versions are spelled out as ``lplus``/``lminus``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Callable

import numpy as np

__all__ = [
    "LieGroup",
    "DimensionError",
    "as_tangent",
    "rplus",
    "rminus",
    "lplus",
    "lminus",
    "adj",
    "jac_numeric",
    "jac_chain",
    "jac_crossed_rl",
    "jac_crossed_lr",
    "jac_right_to_left",
    "FD_EPS",
]

FD_EPS = 1e-6


class DimensionError(ValueError):
    """Raised when tangent vectors, Jacobians or elements have mismatched sizes."""


def as_tangent(tau, dof: int | None = None) -> np.ndarray:
    """Return ``tau`` as a finite float vector, checking its length if given."""
    if type(tau) is np.ndarray and tau.dtype == np.float64 and tau.ndim == 1:
        arr = tau
    else:
        arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"tangent must be a vector, got shape {arr.shape}")
    if dof is not None and arr.shape[0] != dof:
        raise DimensionError(f"tangent of length {arr.shape[0]} where {dof} was expected")
    if not np.isfinite(arr).all():
        raise ValueError("tangent has non-finite entries")
    return arr


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class LieGroup(ABC):
    """A point on a Lie group manifold.

    Subclasses provide composition, inversion, Exp/Log, the adjoint matrix,
    the group action and the closed-form right Jacobian of the group.
    Everything else (plus/minus in both flavours and their Jacobians) is
    derived here from those primitives, and may be overridden where a
    cheaper closed form exists.
    """

    __slots__ = ()

    # -- primitives ------------------------------------------------------
    @property
    @abstractmethod
    def dof(self) -> int:
        """Degrees of freedom, i.e. the tangent dimension."""

    @abstractmethod
    def compose(self, other: LieGroup) -> LieGroup: ...

    @abstractmethod
    def inverse(self) -> LieGroup: ...

    @abstractmethod
    def log(self) -> np.ndarray: ...

    @classmethod
    @abstractmethod
    def exp(cls, tau) -> LieGroup: ...

    @abstractmethod
    def adj(self) -> np.ndarray: ...

    @abstractmethod
    def act(self, v) -> np.ndarray: ...

    @abstractmethod
    def act_jacs(self, v) -> tuple[np.ndarray, np.ndarray]:
        """Jacobians of ``X.act(v)`` with respect to ``X`` and ``v``."""

    @classmethod
    @abstractmethod
    def rjac(cls, tau) -> np.ndarray:
        """Right Jacobian of the group, i.e. of ``Exp`` at ``tau``."""

    @abstractmethod
    def identity_like(self) -> LieGroup: ...

    @abstractmethod
    def matrix(self) -> np.ndarray:
        """Matrix (or array) representation used for comparisons."""

    @classmethod
    @abstractmethod
    def hat(cls, tau) -> np.ndarray: ...

    @classmethod
    @abstractmethod
    def vee(cls, m) -> np.ndarray: ...

    @classmethod
    @abstractmethod
    def random(cls, rng: np.random.Generator, *args) -> LieGroup: ...

    # -- derived Jacobians of the group ----------------------------------
    @classmethod
    def ljac(cls, tau) -> np.ndarray:
        return cls.rjac(-as_tangent(tau))

    @classmethod
    def rjacinv(cls, tau) -> np.ndarray:
        return np.linalg.inv(cls.rjac(tau))

    @classmethod
    def ljacinv(cls, tau) -> np.ndarray:
        return cls.rjacinv(-as_tangent(tau))

    # -- operators -------------------------------------------------------
    def plus(self, tau) -> LieGroup:
        return self.compose(type(self).exp(as_tangent(tau, self.dof)))

    def minus(self, other: LieGroup) -> np.ndarray:
        self._check_same(other)
        return other.inverse().compose(self).log()

    def lplus(self, tau) -> LieGroup:
        """Exp(tau) o X, with ``tau`` expressed at the identity."""
        return type(self).exp(as_tangent(tau, self.dof)).compose(self)

    def lminus(self, other: LieGroup) -> np.ndarray:
        self._check_same(other)
        return self.compose(other.inverse()).log()

    def between(self, other: LieGroup) -> LieGroup:
        return self.inverse().compose(other)

    def __mul__(self, other):
        if isinstance(other, LieGroup):
            return self.compose(other)
        return NotImplemented

    def __add__(self, tau):
        if isinstance(tau, LieGroup):
            return NotImplemented
        return self.plus(tau)

    def __sub__(self, other):
        if isinstance(other, LieGroup):
            return self.minus(other)
        return NotImplemented

    # -- elementary Jacobian blocks --------------------------------------
    def adj_inv(self) -> np.ndarray:
        return self.inverse().adj()

    def inverse_jac(self) -> np.ndarray:
        return -self.adj()

    def compose_jacs(self, other: LieGroup) -> tuple[np.ndarray, np.ndarray]:
        """Jacobians of ``self o other`` wrt ``self`` and ``other``."""
        self._check_same(other)
        return other.adj_inv(), np.eye(self.dof)

    def log_jac(self) -> np.ndarray:
        return type(self).rjacinv(self.log())

    def plus_jacs(self, tau) -> tuple[np.ndarray, np.ndarray]:
        tau = as_tangent(tau, self.dof)
        cls = type(self)
        return cls.exp(tau).adj_inv(), cls.rjac(tau)

    def minus_jacs(self, other: LieGroup) -> tuple[np.ndarray, np.ndarray]:
        """Jacobians of ``self - other`` wrt ``self`` and ``other``."""
        tau = self.minus(other)
        cls = type(self)
        return cls.rjacinv(tau), -cls.ljacinv(tau)

    # -- misc --------------------------------------------------------------
    def isapprox(self, other: LieGroup, tol: float = 1e-9) -> bool:
        if type(self) is not type(other) or self.dof != other.dof:
            return False
        return bool(np.linalg.norm(self.minus(other)) <= tol)

    def _check_same(self, other: LieGroup) -> None:
        if type(self) is not type(other) or self.dof != other.dof:
            raise DimensionError(
                f"cannot combine {type(self).__name__}({self.dof}) "
                f"with {type(other).__name__}({getattr(other, 'dof', '?')})"
            )

    def __repr__(self) -> str:
        body = np.array2string(np.asarray(self.coeffs()), precision=6, separator=", ")
        return f"{type(self).__name__}({body})"

    def coeffs(self) -> np.ndarray:
        return self.matrix().ravel()


# ---------------------------------------------------------------------------
# functional spellings
# ---------------------------------------------------------------------------


def rplus(X: LieGroup, tau) -> LieGroup:
    """X o Exp(tau), ``tau`` in the tangent space at ``X``."""
    return X.plus(tau)


def rminus(Y: LieGroup, X: LieGroup) -> np.ndarray:
    """Log(X^-1 o Y), expressed in the tangent space at ``X``."""
    return Y.minus(X)


def lplus(tau, X: LieGroup) -> LieGroup:
    """Exp(tau) o X, ``tau`` in the tangent space at the identity."""
    return X.lplus(tau)


def lminus(Y: LieGroup, X: LieGroup) -> np.ndarray:
    """Log(Y o X^-1), expressed in the tangent space at the identity."""
    return Y.lminus(X)


def adj(X: LieGroup) -> np.ndarray:
    return X.adj()


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


def _dof_of(x: Any) -> int:
    if hasattr(x, "dof"):
        return int(x.dof)
    return int(np.size(x))


def _perturb(x: Any, tau: np.ndarray, side: str):
    if hasattr(x, "plus"):
        return x.plus(tau) if side == "right" else x.lplus(tau)
    return np.asarray(x, dtype=float).reshape(-1) + tau


def _difference(y: Any, y0: Any, side: str) -> np.ndarray:
    if hasattr(y0, "minus"):
        return y.minus(y0) if side == "right" else y.lminus(y0)
    return np.asarray(y, dtype=float).reshape(-1) - np.asarray(y0, dtype=float).reshape(-1)


def jac_numeric(
    f: Callable[[Any], Any],
    X: Any,
    eps: float = FD_EPS,
    *,
    domain: str = "right",
    codomain: str | None = None,
) -> np.ndarray:
    """Central finite-difference Jacobian of ``f`` at ``X``.

    ``X`` and ``f(X)`` may be group elements, composites or plain vectors.
    Column ``i`` is ``(f(X+h e_i) - f(X)) - (f(X-h e_i) - f(X))`` over ``2h``
    where plus acts on the domain and minus on the codomain.  ``domain`` and
    ``codomain`` select the right or left flavour of each; ``codomain``
    defaults to ``domain``, so ``domain="left"`` gives the left Jacobian and
    mixing them gives the crossed Jacobians.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    codomain = domain if codomain is None else codomain
    for side in (domain, codomain):
        if side not in ("right", "left"):
            raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    y0 = f(X)
    m = _dof_of(X)
    cols = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = eps
        d_plus = _difference(f(_perturb(X, e, domain)), y0, codomain)
        d_minus = _difference(f(_perturb(X, -e, domain)), y0, codomain)
        col = (d_plus - d_minus) / (2.0 * eps)
        if not np.all(np.isfinite(col)):
            raise FloatingPointError("f produced non-finite output during differentiation")
        cols.append(col)
    return np.column_stack(cols) if cols else np.zeros((_dof_of(y0), 0))


def jac_chain(J_zy: np.ndarray, J_yx: np.ndarray) -> np.ndarray:
    """dZ/dX = dZ/dY . dY/dX."""
    J_zy = np.atleast_2d(np.asarray(J_zy, dtype=float))
    J_yx = np.atleast_2d(np.asarray(J_yx, dtype=float))
    if J_zy.shape[1] != J_yx.shape[0]:
        raise DimensionError(f"cannot chain {J_zy.shape} with {J_yx.shape}")
    return J_zy @ J_yx


def _check_square(A: np.ndarray, n: int, what: str) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape != (n, n):
        raise DimensionError(f"{what} must be {n}x{n}, got {A.shape}")
    return A


def jac_right_to_left(J_right, ad_x, ad_y) -> np.ndarray:
    """Left Jacobian from the right one: ``Ad_Y . J_right . Ad_X^-1``."""
    J_right = np.atleast_2d(np.asarray(J_right, dtype=float))
    n, m = J_right.shape
    ad_x = _check_square(ad_x, m, "Ad_X")
    ad_y = _check_square(ad_y, n, "Ad_Y")
    return ad_y @ J_right @ np.linalg.inv(ad_x)


def jac_crossed_rl(J_right, ad_y) -> np.ndarray:
    """Crossed Jacobian from the local tangent at X to the global tangent.

    Right plus on the domain, left minus on the codomain:
    ``J = Ad_Y . J_right = J_left . Ad_X``.
    """
    J_right = np.atleast_2d(np.asarray(J_right, dtype=float))
    ad_y = _check_square(ad_y, J_right.shape[0], "Ad_Y")
    return ad_y @ J_right


def jac_crossed_lr(J_right, ad_x) -> np.ndarray:
    """Crossed Jacobian from the global tangent to the local tangent at f(X).

    Left plus on the domain, right minus on the codomain:
    ``J = J_right . Ad_X^-1 = Ad_Y^-1 . J_left``.
    """
    J_right = np.atleast_2d(np.asarray(J_right, dtype=float))
    ad_x = _check_square(ad_x, J_right.shape[1], "Ad_X")
    return J_right @ np.linalg.inv(ad_x)
