"""Batch smoothing and mapping by Gauss-Newton on the composite state."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..composite import Composite, Layout
from ..core import LieGroup
from ..trans import TransN
from .factors import Factor, FactorGraph, bias_correct, factor_residual

__all__ = [
    "RankDeficientError",
    "ConvergenceError",
    "SolveReport",
    "sam_residuals",
    "sam_jacobian",
    "sam_cost",
    "null_space_dim",
    "sam_step",
    "sam_solve",
    "dead_reckon",
    "SAMSolver",
]

#: singular values of J below RANK_RTOL * max are counted as zero
RANK_RTOL = 1e-8
DAMPING_START = 1e-6
DAMPING_FACTOR = 10.0
MAX_DAMPING = 1e8


class RankDeficientError(np.linalg.LinAlgError):
    """``J^T J`` is singular; ``null_dim`` directions are unobservable."""

    def __init__(self, null_dim: int, null_basis: np.ndarray | None = None):
        super().__init__(f"normal equations are rank deficient (null space dimension {null_dim})")
        self.null_dim = null_dim
        self.null_basis = null_basis


class ConvergenceError(RuntimeError):
    pass


def sam_residuals(graph: FactorGraph) -> np.ndarray:
    rs = [factor_residual(f, graph.state)[0] for f in graph.factors]
    return np.concatenate(rs) if rs else np.zeros(0)


def sam_cost(graph: FactorGraph) -> float:
    r = sam_residuals(graph)
    return float(r @ r)


def _linearize(graph: FactorGraph) -> tuple[np.ndarray, np.ndarray]:
    layout = graph.state.layout
    J = np.zeros((graph.n_residuals, layout.total))
    r = np.zeros(graph.n_residuals)
    row = 0
    for f in graph.factors:
        rf, Js = factor_residual(f, graph.state)
        k = rf.shape[0]
        r[row:row + k] = rf
        for h, Jb in zip(f.handles, Js):
            J[row:row + k, layout.slice(h)] += Jb
        row += k
    return r, J


def sam_jacobian(graph: FactorGraph) -> np.ndarray:
    """Stacked whitened Jacobian; factor rows in graph order, block columns in state order."""
    return _linearize(graph)[1]


def null_space_dim(J: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, np.ndarray]:
    """Dimension of the null space of ``J^T J`` and an orthonormal basis of it."""
    n = J.shape[1]
    if J.shape[0] == 0:
        return n, np.eye(n)
    _, s, Vt = np.linalg.svd(J, full_matrices=True)
    s_full = np.zeros(n)
    s_full[: s.shape[0]] = s
    small = s_full <= rtol * max(s_full.max(initial=0.0), np.finfo(float).tiny)
    return int(small.sum()), Vt[small].T


def sam_step(graph: FactorGraph, damping: float = 0.0, *, check_rank: bool = True) -> np.ndarray:
    """The optimal step ``-(J^T J + damping I)^-1 J^T r`` at the current state."""
    r, J = _linearize(graph)
    if check_rank:
        k, basis = null_space_dim(J)
        if k:
            raise RankDeficientError(k, basis)
    H = J.T @ J
    if damping:
        H = H + damping * np.eye(H.shape[0])
    return -np.linalg.solve(H, J.T @ r)


@dataclass(frozen=True)
class SolveReport:
    graph: FactorGraph
    iterations: int
    converged: bool
    cost: float
    initial_cost: float
    costs: tuple[float, ...]


def sam_solve(
    graph: FactorGraph,
    max_iters: int = 50,
    tol: float = 1e-8,
    rel_cost_tol: float = 1e-12,
) -> SolveReport:
    """Iterate Gauss-Newton steps ``X <- X (+) dx`` until the step or the cost stalls.

    Pure Gauss-Newton is tried first.  When a step raises the cost, the
    normal equations are damped with ``lambda`` starting at 1e-6 and growing
    tenfold until the cost goes down; the next iteration is undamped again.
    """
    cost = sam_cost(graph)
    costs = [cost]
    initial = cost
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        dx = sam_step(graph)
        cand = graph.with_state(graph.state.plus(dx))
        new_cost = sam_cost(cand)
        lam = DAMPING_START
        while new_cost > cost and lam <= MAX_DAMPING:
            dx = sam_step(graph, lam, check_rank=False)
            cand = graph.with_state(graph.state.plus(dx))
            new_cost = sam_cost(cand)
            lam *= DAMPING_FACTOR
        if new_cost > cost:
            # no descent left at double precision
            converged = True
            break
        decrease = cost - new_cost
        graph, cost = cand, new_cost
        costs.append(cost)
        if np.max(np.abs(dx), initial=0.0) < tol or decrease <= rel_cost_tol * max(costs[-2], 1e-300):
            converged = True
            break
    return SolveReport(graph, it, converged, cost, initial, tuple(costs))


def dead_reckon(
    template: Composite,
    factors: Sequence[Factor],
    bias=None,
) -> Composite:
    """Initial guess: poses from the prior through the odometry, beacons from
    their first sighting.

    Pose blocks are the non-translation blocks of ``template``; blocks not
    reached by any factor keep their template value.  ``bias`` (block handle)
    names a calibration block whose template value is used to correct the
    calibrated-motion twists.
    """
    blocks: list[LieGroup] = list(template.blocks)
    known: set[int] = set()
    for f in factors:
        if f.kind == "prior":
            blocks[f.handles[0]] = f.measurement
            known.add(f.handles[0])
    motions = [f for f in factors if f.kind in ("motion", "calibrated-motion")]
    progress = True
    while progress:
        progress = False
        for f in motions:
            i, j = f.handles[-2:]
            if i in known and j not in known:
                u = f.measurement
                if f.kind == "calibrated-motion":
                    c = blocks[f.handles[0]].vector if bias is None else blocks[bias].vector
                    u = bias_correct(u, c)
                blocks[j] = blocks[i].plus(u)
                known.add(j)
                progress = True
    for f in factors:
        if f.kind == "beacon":
            i, k = f.handles
            if k not in known and i in known:
                blocks[k] = TransN(blocks[i].act(f.measurement))
                known.add(k)
    return Composite(blocks)


class SAMSolver(BaseEstimator):
    """Gauss-Newton smoother over a :class:`FactorGraph`.

    ``fit(graph)`` optimizes from ``graph.state`` unless ``initialize`` is
    set, in which case the state is first re-seeded by :func:`dead_reckon`.
    After fitting, ``graph_`` holds the optimized problem, ``state_`` its
    composite state, ``covariance_`` the inverse of ``J^T J`` at the optimum
    and ``n_iter_``, ``cost_``, ``converged_`` the run summary.
    """

    def __init__(self, max_iters: int = 50, tol: float = 1e-8,
                 rel_cost_tol: float = 1e-12, initialize: bool = True):
        self.max_iters = max_iters
        self.tol = tol
        self.rel_cost_tol = rel_cost_tol
        self.initialize = initialize

    def fit(self, graph: FactorGraph, y=None):
        if self.initialize:
            graph = graph.with_state(dead_reckon(graph.state, graph.factors))
        rep = sam_solve(graph, self.max_iters, self.tol, self.rel_cost_tol)
        self.report_ = rep
        self.graph_ = rep.graph
        self.state_ = rep.graph.state
        self.n_iter_ = rep.iterations
        self.cost_ = rep.cost
        self.initial_cost_ = rep.initial_cost
        self.converged_ = rep.converged
        J = sam_jacobian(rep.graph)
        self.covariance_ = np.linalg.inv(J.T @ J)
        return self

    def block_covariance(self, handle: int) -> np.ndarray:
        check_is_fitted(self, "state_")
        s = self.state_.layout.slice(handle)
        return self.covariance_[s, s]

    def block_std(self, handle: int) -> np.ndarray:
        return np.sqrt(np.diag(self.block_covariance(handle)))

    @property
    def layout_(self) -> Layout:
        check_is_fitted(self, "state_")
        return self.state_.layout
