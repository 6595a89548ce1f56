"""Composite (bundle) manifolds of non-interacting group blocks.

A :class:`Composite` concatenates heterogeneous group elements; identity,
inverse, composition, Exp and Log all act block by block.  Block handles are
the integer positions fixed at construction, and :class:`Layout` maps each
handle to its slice of the stacked tangent vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import DimensionError, LieGroup, as_tangent
from .rot2 import Rot2, UnitComplex
from .rot3 import Rot3, UnitQuaternion
from .se2 import Pose2
from .se3 import Pose3
from .trans import TransN

__all__ = ["Layout", "Composite", "dplus", "dminus", "assemble_jacobian", "jac_composite"]

GROUP_KINDS = (UnitComplex, Rot2, UnitQuaternion, Rot3, Pose2, Pose3, TransN)


@dataclass(frozen=True)
class Layout:
    dofs: tuple[int, ...]
    _slices: tuple[slice, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dofs = tuple(int(d) for d in self.dofs)
        object.__setattr__(self, "dofs", dofs)
        ends = np.cumsum(dofs, dtype=int) if dofs else np.zeros(0, dtype=int)
        object.__setattr__(
            self, "_slices", tuple(slice(int(e) - d, int(e)) for e, d in zip(ends, dofs))
        )

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(s.start for s in self._slices)

    @property
    def total(self) -> int:
        return sum(self.dofs)

    def slice(self, handle: int) -> slice:
        return self._slices[handle]

    def split(self, tau: np.ndarray) -> list[np.ndarray]:
        return [tau[s] for s in self._slices]


# layouts are immutable, so one instance per block-size tuple is shared
_LAYOUTS: dict[tuple[int, ...], Layout] = {}


class Composite(LieGroup):
    """An ordered tuple of group elements treated as one manifold point."""

    __slots__ = ("_blocks", "_layout")

    def __init__(self, blocks: Iterable[LieGroup]):
        blocks = tuple(blocks)
        for b in blocks:
            if not isinstance(b, GROUP_KINDS):
                raise TypeError(f"unsupported block kind {type(b).__name__}")
        self._blocks = blocks
        dofs = tuple(b.dof for b in blocks)
        layout = _LAYOUTS.get(dofs)
        if layout is None:
            layout = _LAYOUTS.setdefault(dofs, Layout(dofs))
        self._layout = layout

    @property
    def blocks(self) -> tuple[LieGroup, ...]:
        return self._blocks

    @property
    def layout(self) -> Layout:
        return self._layout

    @property
    def dof(self) -> int:
        return self._layout.total

    def __len__(self) -> int:
        return len(self._blocks)

    def __getitem__(self, handle: int) -> LieGroup:
        return self._blocks[handle]

    def replace(self, handle: int, block: LieGroup) -> Composite:
        old = self._blocks[handle]
        if type(old) is not type(block) or old.dof != block.dof:
            raise DimensionError("replacement block must keep the block kind and size")
        blocks = list(self._blocks)
        blocks[handle] = block
        return Composite(blocks)

    def _check_layout(self, other: Composite) -> None:
        if not isinstance(other, Composite) or len(other) != len(self):
            raise DimensionError("composite layouts differ")
        for a, b in zip(self._blocks, other._blocks):
            if type(a) is not type(b) or a.dof != b.dof:
                raise DimensionError("composite layouts differ")

    # -- diamond operations ---------------------------------------------
    def identity_like(self) -> Composite:
        return Composite(b.identity_like() for b in self._blocks)

    def compose(self, other: Composite) -> Composite:
        self._check_layout(other)
        return Composite(a.compose(b) for a, b in zip(self._blocks, other._blocks))

    def inverse(self) -> Composite:
        return Composite(b.inverse() for b in self._blocks)

    def log(self) -> np.ndarray:
        if not self._blocks:
            return np.zeros(0)
        return np.concatenate([b.log() for b in self._blocks])

    @classmethod
    def exp(cls, tau) -> Composite:
        raise TypeError("composite Exp needs a template; use Composite.exp_like")

    def exp_like(self, tau) -> Composite:
        tau = as_tangent(tau, self.dof)
        return Composite(type(b).exp(t) for b, t in zip(self._blocks, self._layout.split(tau)))

    def plus(self, tau) -> Composite:
        tau = as_tangent(tau, self.dof)
        return Composite(b.plus(t) for b, t in zip(self._blocks, self._layout.split(tau)))

    def minus(self, other: Composite) -> np.ndarray:
        self._check_layout(other)
        if not self._blocks:
            return np.zeros(0)
        return np.concatenate([a.minus(b) for a, b in zip(self._blocks, other._blocks)])

    def lplus(self, tau) -> Composite:
        tau = as_tangent(tau, self.dof)
        return Composite(b.lplus(t) for b, t in zip(self._blocks, self._layout.split(tau)))

    def lminus(self, other: Composite) -> np.ndarray:
        self._check_layout(other)
        return np.concatenate([a.lminus(b) for a, b in zip(self._blocks, other._blocks)])

    def isapprox(self, other, tol: float = 1e-9) -> bool:
        try:
            return bool(np.linalg.norm(self.minus(other)) <= tol)
        except DimensionError:
            return False

    # -- block-diagonal Jacobians -----------------------------------------
    def _blockdiag(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        n = self.dof
        out = np.zeros((n, n))
        for i, M in enumerate(mats):
            s = self._layout.slice(i)
            out[s, s] = M
        return out

    def adj(self) -> np.ndarray:
        raise NotImplementedError("composites have no adjoint")

    def inverse_jac(self) -> np.ndarray:
        return self._blockdiag([b.inverse_jac() for b in self._blocks])

    def compose_jacs(self, other: Composite):
        self._check_layout(other)
        pairs = [a.compose_jacs(b) for a, b in zip(self._blocks, other._blocks)]
        return self._blockdiag([p[0] for p in pairs]), self._blockdiag([p[1] for p in pairs])

    def plus_jacs(self, tau):
        tau = as_tangent(tau, self.dof)
        pairs = [b.plus_jacs(t) for b, t in zip(self._blocks, self._layout.split(tau))]
        return self._blockdiag([p[0] for p in pairs]), self._blockdiag([p[1] for p in pairs])

    def minus_jacs(self, other: Composite):
        self._check_layout(other)
        pairs = [a.minus_jacs(b) for a, b in zip(self._blocks, other._blocks)]
        return self._blockdiag([p[0] for p in pairs]), self._blockdiag([p[1] for p in pairs])

    def act(self, v):
        raise NotImplementedError("composites have no group action")

    def act_jacs(self, v):
        raise NotImplementedError("composites have no group action")

    @classmethod
    def rjac(cls, tau):
        raise TypeError("use Composite.rjac_at for a composite right Jacobian")

    def rjac_at(self, tau) -> np.ndarray:
        tau = as_tangent(tau, self.dof)
        return self._blockdiag([type(b).rjac(t) for b, t in zip(self._blocks, self._layout.split(tau))])

    def matrix(self) -> np.ndarray:
        return np.concatenate([np.ravel(b.coeffs()) for b in self._blocks]) if self._blocks else np.zeros(0)

    @classmethod
    def hat(cls, tau):
        raise NotImplementedError

    @classmethod
    def vee(cls, m):
        raise NotImplementedError

    @classmethod
    def random(cls, rng, *args):
        raise NotImplementedError("build composites from random blocks")

    def __repr__(self) -> str:
        return "Composite<" + ", ".join(repr(b) for b in self._blocks) + ">"


def dplus(X: Composite, tau) -> Composite:
    """Blockwise right plus, X <> Exp<tau>."""
    return X.plus(tau)


def dminus(Y: Composite, X: Composite) -> np.ndarray:
    """Blockwise right minus, Log<X^<> <> Y>."""
    return Y.minus(X)


def assemble_jacobian(
    blocks: Mapping[tuple[int, int], np.ndarray],
    row_dofs: Sequence[int],
    col_dofs: Sequence[int],
) -> np.ndarray:
    """Place the ``(row_handle, col_handle)`` blocks into one dense matrix.

    Pairs missing from ``blocks`` are zero.
    """
    rows, cols = Layout(tuple(row_dofs)), Layout(tuple(col_dofs))
    J = np.zeros((rows.total, cols.total))
    for (i, j), B in blocks.items():
        B = np.atleast_2d(np.asarray(B, dtype=float))
        rs, cs = rows.slice(i), cols.slice(j)
        if B.shape != (rs.stop - rs.start, cs.stop - cs.start):
            raise DimensionError(f"block ({i}, {j}) has shape {B.shape}")
        J[rs, cs] = B
    return J


def jac_composite(
    f: Callable[[Composite], tuple[Composite, Mapping[tuple[int, int], np.ndarray]]],
    X: Composite,
):
    """Evaluate ``f`` and assemble its per-block Jacobians.

    ``f`` returns its value (a :class:`Composite`) together with the
    ``{(out_block, in_block): J}`` mapping of its non-zero blocks.
    """
    Y, blocks = f(X)
    return Y, assemble_jacobian(blocks, Y.layout.dofs, X.layout.dofs)
