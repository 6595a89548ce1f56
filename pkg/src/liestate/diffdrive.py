"""Differential-drive odometry: encoder ticks to pre-integrated SE(2) deltas,
and the intrinsic calibration of wheel radii and axle length.

Poses and deltas use the compact ``(p, theta)`` coordinates of SE(2): they
are stored as :class:`Pose2`, but residual arithmetic is plain vector
difference with the angle wrapped to (-pi, pi].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_cov
from .composite import Composite
from .estimation.factors import Factor, FactorGraph, prior_factor, register_residual
from .estimation.sam import (
    DAMPING_FACTOR,
    DAMPING_START,
    MAX_DAMPING,
    RankDeficientError,
    _linearize,
    null_space_dim,
    sam_cost,
)
from .rot2 import SKEW1, rot2_matrix, wrap_angle
from .se2 import Pose2
from .trans import TransN

__all__ = [
    "WheelParams",
    "Calib",
    "EncoderTick",
    "NoiseParams",
    "BodyMag",
    "PreintDelta",
    "THETA_TOL",
    "body_magnitudes",
    "jac_body",
    "delta_from_body",
    "jac_delta_body",
    "delta_compose",
    "jac_delta_compose",
    "encoder_noise_cov",
    "preintegrate",
    "pose_coords",
    "preint_residual",
    "preint_factor",
    "calibrate",
    "CalibrationResult",
    "DiffDriveCalibrator",
    "read_encoder_csv",
    "read_anchor_csv",
    "write_encoder_csv",
    "write_anchor_csv",
]

THETA_TOL = 1e-6
# below this turn the arc-branch Jacobian uses its series
_SERIES_TURN = 1e-2


@dataclass(frozen=True)
class WheelParams:
    r_l: float
    r_r: float
    d: float

    def __post_init__(self):
        if not (self.r_l > 0 and self.r_r > 0 and self.d > 0):
            raise ValueError("wheel radii and axle length must be positive")


@dataclass(frozen=True)
class Calib:
    """Correction factors on the left radius, right radius and axle length."""

    c_l: float = 1.0
    c_r: float = 1.0
    c_d: float = 1.0

    def __post_init__(self):
        if not (self.c_l > 0 and self.c_r > 0 and self.c_d > 0):
            raise ValueError("calibration factors must be positive")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_l, self.c_r, self.c_d])

    @classmethod
    def from_vector(cls, c) -> Calib:
        c = np.asarray(c, dtype=float)
        return cls(float(c[0]), float(c[1]), float(c[2]))


@dataclass(frozen=True)
class EncoderTick:
    dpsi_l: float
    dpsi_r: float
    t: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.dpsi_l) and math.isfinite(self.dpsi_r)):
            raise ValueError("encoder increments must be finite")


@dataclass(frozen=True)
class NoiseParams:
    k_l: float = 1e-5
    k_r: float = 1e-5
    mu_l: float = 1e-4
    mu_r: float = 1e-4
    Q_s: np.ndarray = field(default_factory=lambda: np.diag([1e-8, 1e-8]))

    def __post_init__(self):
        if min(self.k_l, self.k_r, self.mu_l, self.mu_r) < 0:
            raise ValueError("noise constants must be non-negative")
        object.__setattr__(self, "Q_s", check_cov(self.Q_s, 2, "Q_s"))


@dataclass(frozen=True)
class BodyMag:
    dl: float
    dtheta: float


@dataclass(frozen=True)
class PreintDelta:
    """Pre-integrated motion between two keyframes.

    ``c_bar`` is the calibration the ticks were integrated with; ``Jc`` maps
    calibration changes about it to first-order delta changes.
    """

    Delta: Pose2
    Q: np.ndarray
    Jc: np.ndarray
    c_bar: np.ndarray
    span: tuple[int, int] = (0, 0)

    @property
    def coords(self) -> np.ndarray:
        return pose_coords(self.Delta)


def pose_coords(X: Pose2) -> np.ndarray:
    return np.array([X.x, X.y, X.angle])


# -- body magnitudes ---------------------------------------------------------


def _c(c) -> np.ndarray:
    return c.vector if isinstance(c, Calib) else np.asarray(c, dtype=float)


def body_magnitudes(y: EncoderTick, c, p: WheelParams) -> BodyMag:
    c_l, c_r, c_d = _c(c)
    wl = p.r_l * c_l * y.dpsi_l
    wr = p.r_r * c_r * y.dpsi_r
    return BodyMag(0.5 * (wr + wl), (wr - wl) / (p.d * c_d))


def jac_body(y: EncoderTick, c, p: WheelParams) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of the body magnitudes wrt the encoder readings and the calibration.

    The turn row carries the ``1/D`` factor of the turn formula.
    """
    c_l, c_r, c_d = _c(c)
    D = p.d * c_d
    dtheta = body_magnitudes(y, c, p).dtheta
    J_y = np.array([
        [0.5 * p.r_l * c_l, 0.5 * p.r_r * c_r],
        [-p.r_l * c_l / D, p.r_r * c_r / D],
    ])
    J_c = np.array([
        [0.5 * y.dpsi_l * p.r_l, 0.5 * y.dpsi_r * p.r_r, 0.0],
        [-y.dpsi_l * p.r_l / D, y.dpsi_r * p.r_r / D, -dtheta / c_d],
    ])
    return J_y, J_c


# -- single-step delta ----------------------------------------------------------


def _arc_coefs(t: float) -> tuple[float, float, float, float]:
    """sin t/t, (1-cos t)/t, (cos t - sin t/t)/t, (sin t - (1-cos t)/t)/t."""
    s_half = math.sin(0.5 * t)
    a = math.sin(t) / t
    b = 2.0 * s_half * s_half / t
    if abs(t) < _SERIES_TURN:
        t2 = t * t
        g1 = t * (-1 / 3 + t2 / 30 - t2 * t2 / 840 + t2**3 / 45360)
        g2 = 0.5 - t2 / 8 + t2 * t2 / 144 - t2**3 / 5760
    else:
        g1 = (math.cos(t) - a) / t
        g2 = (math.sin(t) - b) / t
    return a, b, g1, g2


def delta_from_body(b: BodyMag, theta_tol: float = THETA_TOL) -> Pose2:
    """Motion over one tick: an exact arc, or the midpoint straight step when barely turning."""
    if theta_tol <= 0:
        raise ValueError("theta_tol must be positive")
    dl, dth = b.dl, b.dtheta
    if abs(dth) >= theta_tol:
        a, bb, _, _ = _arc_coefs(dth)
        return Pose2(dl * a, dl * bb, dth)
    return Pose2(dl * math.cos(0.5 * dth), dl * math.sin(0.5 * dth), dth)


def jac_delta_body(b: BodyMag, theta_tol: float = THETA_TOL) -> np.ndarray:
    """3x2 Jacobian of the tick delta coordinates wrt ``(dl, dtheta)``, on the branch in use."""
    dl, dth = b.dl, b.dtheta
    if abs(dth) >= theta_tol:
        a, bb, g1, g2 = _arc_coefs(dth)
        # R (cos - sin/t) == dl * g1, and likewise for the y row
        return np.array([[a, dl * g1], [bb, dl * g2], [0.0, 1.0]])
    ch, sh = math.cos(0.5 * dth), math.sin(0.5 * dth)
    return np.array([[ch, -0.5 * dl * sh], [sh, 0.5 * dl * ch], [0.0, 1.0]])


# -- composition ------------------------------------------------------------------


def delta_compose(Dij: Pose2, dk: Pose2) -> Pose2:
    R = rot2_matrix(Dij.angle)
    p = Dij.translation + R @ dk.translation
    return Pose2(p[0], p[1], Dij.angle + dk.angle)


def jac_delta_compose(Dij: Pose2, dk: Pose2) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of the composed coordinates wrt those of ``Dij`` and ``dk``."""
    R = rot2_matrix(Dij.angle)
    A = np.eye(3)
    A[:2, 2] = R @ SKEW1 @ dk.translation
    B = np.eye(3)
    B[:2, :2] = R
    return A, B


# -- noise --------------------------------------------------------------------------


def encoder_noise_cov(y: EncoderTick, noise: NoiseParams) -> np.ndarray:
    """Encoder covariance; the per-radian variance uses ``|dpsi|`` so reverse motion stays valid."""
    alpha = 0.5 * (noise.mu_l + noise.mu_r)
    a2 = alpha * alpha
    return np.diag([noise.k_l * abs(y.dpsi_l) + a2, noise.k_r * abs(y.dpsi_r) + a2])


def preintegrate(
    ticks: Sequence[EncoderTick],
    c,
    p: WheelParams,
    noise: NoiseParams | None = None,
    *,
    theta_tol: float = THETA_TOL,
    span: tuple[int, int] = (0, 0),
) -> PreintDelta:
    """Fold the ticks into one delta with its covariance and calibration Jacobian."""
    if len(ticks) == 0:
        raise ValueError("need at least one tick")
    noise = NoiseParams() if noise is None else noise
    c = _c(c)
    D = Pose2()
    Q = np.zeros((3, 3))
    Jc = np.zeros((3, 3))
    for y in ticks:
        b = body_magnitudes(y, c, p)
        J_by, J_bc = jac_body(y, c, p)
        J_db = jac_delta_body(b, theta_tol)
        dk = delta_from_body(b, theta_tol)
        Qb = J_by @ encoder_noise_cov(y, noise) @ J_by.T + noise.Q_s
        Qk = J_db @ Qb @ J_db.T
        A, B = jac_delta_compose(D, dk)
        Q = A @ Q @ A.T + B @ Qk @ B.T
        Jc = A @ Jc + B @ J_db @ J_bc
        D = delta_compose(D, dk)
    Q = 0.5 * (Q + Q.T)
    return PreintDelta(D, Q, Jc, c.copy(), span)


# -- residual ---------------------------------------------------------------------


def preint_residual(Xi: Pose2, Xj: Pose2, c, delta: PreintDelta, *, whiten: bool = True):
    """Residual of a pre-integrated delta between two poses, and its Jacobians.

    Returns ``(r, J_i, J_j, J_c)``; pose Jacobians are wrt right-plus
    perturbations of ``Xi`` and ``Xj``.  With ``whiten`` the residual is
    premultiplied by the square-root information of ``delta.Q``.
    """
    e, (J_c, J_i, J_j) = _preint_error(delta, [TransN(_c(c)), Xi, Xj])
    if whiten:
        S = _preint_sqrt_info(delta.Q)
        return S @ e, S @ J_i, S @ J_j, S @ J_c
    return e, J_i, J_j, J_c


def _preint_error(delta: PreintDelta, blocks):
    c, Xi, Xj = blocks
    Ri = rot2_matrix(Xi.angle)
    dp_hat = Ri.T @ (Xj.translation - Xi.translation)
    corr = delta.coords + delta.Jc @ (c.vector - delta.c_bar)
    e = np.empty(3)
    e[:2] = dp_hat - corr[:2]
    e[2] = wrap_angle(Xj.angle - Xi.angle - corr[2])
    J_i = np.zeros((3, 3))
    J_i[:2, :2] = -np.eye(2)
    J_i[:2, 2] = -SKEW1 @ dp_hat
    J_i[2, 2] = -1.0
    J_j = np.zeros((3, 3))
    J_j[:2, :2] = Ri.T @ rot2_matrix(Xj.angle)
    J_j[2, 2] = 1.0
    return e, [-delta.Jc, J_i, J_j]


register_residual("preint-motion")(_preint_error)


def _preint_info(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if np.linalg.eigvalsh(Q).min() <= 1e-15 * max(1.0, np.abs(Q).max()):
        Q = Q + 1e-12 * np.eye(3)
    return np.linalg.inv(Q)


def _preint_sqrt_info(Q) -> np.ndarray:
    return np.linalg.cholesky(_preint_info(Q)).T


def preint_factor(c: int, i: int, j: int, delta: PreintDelta) -> Factor:
    info = _preint_info(delta.Q)
    return Factor("preint-motion", (c, i, j), delta, 0.5 * (info + info.T))


# -- calibration ----------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    calib: Calib
    poses: tuple[Pose2, ...]
    iterations: int
    converged: bool
    cost: float
    covariance: np.ndarray


def _segments(ticks: Sequence[EncoderTick], anchor_times: Sequence[float]):
    segs = []
    for a, b in zip(anchor_times[:-1], anchor_times[1:]):
        seg = [y for y in ticks if a < y.t <= b]
        if not seg:
            raise ValueError(f"no encoder ticks between anchors at t={a} and t={b}")
        segs.append(seg)
    return segs


def calibrate(
    ticks: Sequence[EncoderTick],
    anchors: Sequence[tuple[float, Pose2]],
    wheel: WheelParams,
    noise: NoiseParams | None = None,
    *,
    c0=None,
    anchor_cov=None,
    calib_prior: tuple[np.ndarray, np.ndarray] | None = None,
    max_iters: int = 50,
    tol: float = 1e-10,
    theta_tol: float = THETA_TOL,
) -> CalibrationResult:
    """Estimate the calibration jointly with the keyframe poses.

    Keyframes sit at the anchor times; each anchor contributes a pose prior
    with covariance ``anchor_cov``, and the ticks between consecutive anchors
    are pre-integrated into one factor.  The deltas are re-integrated at the
    current calibration every iteration, so the first-order correction is
    always taken about the linearization point.  ``calib_prior`` is an
    optional ``(mean, cov)`` prior on the calibration.

    Raises :class:`RankDeficientError` when the data cannot determine every
    unknown, e.g. the axle factor from straight driving only.
    """
    if len(anchors) < 2:
        raise ValueError("need at least two pose anchors")
    noise = NoiseParams() if noise is None else noise
    anchors = sorted(anchors, key=lambda a: a[0])
    times = [float(t) for t, _ in anchors]
    segs = _segments(ticks, times)
    m = len(anchors)
    anchor_cov = np.diag([1e-6, 1e-6, 1e-6]) if anchor_cov is None else np.asarray(anchor_cov, float)
    extra = [prior_factor(i + 1, X, anchor_cov) for i, (_, X) in enumerate(anchors)]
    if calib_prior is not None:
        extra.append(prior_factor(0, TransN(calib_prior[0]), calib_prior[1]))

    def build(c: np.ndarray, poses: Sequence[Pose2]) -> FactorGraph:
        fs = list(extra)
        for i, seg in enumerate(segs):
            d = preintegrate(seg, c, wheel, noise, theta_tol=theta_tol, span=(i, i + 1))
            fs.append(preint_factor(0, i + 1, i + 2, d))
        return FactorGraph(Composite([TransN(c), *poses]), fs)

    c = np.ones(3) if c0 is None else _c(c0).astype(float)
    poses = [X for _, X in anchors]
    graph = build(c, poses)
    cost = sam_cost(graph)
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        r, J = _linearize(graph)
        k, basis = null_space_dim(J)
        if k:
            raise RankDeficientError(k, basis)
        H, g = J.T @ J, J.T @ r
        lam = 0.0
        while True:
            dx = -np.linalg.solve(H + lam * np.eye(H.shape[0]), g)
            state = graph.state.plus(dx)
            c_new = state[0].vector
            if np.all(c_new > 0):
                cand = build(c_new, list(state.blocks[1:]))
                new_cost = sam_cost(cand)
                if new_cost <= cost:
                    break
            lam = DAMPING_START if lam == 0.0 else lam * DAMPING_FACTOR
            if lam > MAX_DAMPING:
                cand, new_cost = graph, cost
                break
        step = float(np.max(np.abs(dx)))
        if cand is graph:
            converged = True
            break
        graph, cost = cand, new_cost
        if step < tol:
            converged = True
            break
    _, J = _linearize(graph)
    cov = np.linalg.pinv(J.T @ J)
    c = graph.state[0].vector
    return CalibrationResult(
        Calib.from_vector(c), tuple(graph.state.blocks[1:]), it, converged, cost, cov[:3, :3]
    )


class DiffDriveCalibrator(BaseEstimator):
    """Estimator front-end to :func:`calibrate`.

    ``fit(ticks, anchors)`` stores ``calib_`` (a :class:`Calib`),
    ``poses_``, ``covariance_`` (3x3, of the calibration), ``n_iter_``,
    ``converged_`` and ``cost_``.
    """

    def __init__(self, wheel: WheelParams | None = None, noise: NoiseParams | None = None,
                 c0=None, anchor_sigma: float = 1e-3, max_iters: int = 50, tol: float = 1e-10):
        self.wheel = wheel
        self.noise = noise
        self.c0 = c0
        self.anchor_sigma = anchor_sigma
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, ticks, anchors):
        if self.wheel is None:
            raise ValueError("wheel parameters are required")
        res = calibrate(
            ticks, anchors, self.wheel, self.noise, c0=self.c0,
            anchor_cov=self.anchor_sigma**2 * np.eye(3),
            max_iters=self.max_iters, tol=self.tol,
        )
        self.result_ = res
        self.calib_ = res.calib
        self.poses_ = list(res.poses)
        self.covariance_ = res.covariance
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.cost_ = res.cost
        return self


# -- log files ----------------------------------------------------------------------


def _read_rows(path, header: list[str]) -> list[list[float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != header:
        raise ValueError(f"{path}: expected header {','.join(header)}")
    try:
        return [[float(v) for v in row] for row in rows[1:] if row]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def read_encoder_csv(path) -> list[EncoderTick]:
    return [EncoderTick(l, r, t) for t, l, r in _read_rows(path, ["t", "dpsi_l", "dpsi_r"])]


def read_anchor_csv(path) -> list[tuple[float, Pose2]]:
    return [(t, Pose2(x, y, th)) for t, x, y, th in _read_rows(path, ["t", "x", "y", "theta"])]


def write_encoder_csv(path, ticks: Sequence[EncoderTick]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "dpsi_l", "dpsi_r"])
        for y in ticks:
            w.writerow([repr(y.t), repr(y.dpsi_l), repr(y.dpsi_r)])


def write_anchor_csv(path, anchors: Sequence[tuple[float, Pose2]]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "theta"])
        for t, X in anchors:
            w.writerow([repr(float(t)), repr(X.x), repr(X.y), repr(X.angle)])
