"""Conformance audit: every analytic Jacobian block against central differences.

Each audited block draws seeded random inputs bounded away from the
singularities (rotation angles up to 2.5 rad), evaluates the analytic block
and :func:`~liestate.core.jac_numeric` of the underlying map, and reports
the worst error over the trials.  The error of one trial is
``max|J - J_fd| / max(1, max|J_fd|)``: relative for large blocks, absolute
for small ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .composite import Composite
from .core import LieGroup, jac_numeric
from .diffdrive import (
    BodyMag,
    EncoderTick,
    PreintDelta,
    WheelParams,
    body_magnitudes,
    delta_compose,
    delta_from_body,
    jac_body,
    jac_delta_body,
    jac_delta_compose,
    pose_coords,
    preint_residual,
    preintegrate,
)
from .estimation.eskf import beacon_observation
from .estimation.factors import RESIDUALS, bias_correct, bias_correct_jac
from .rot2 import Rot2, UnitComplex
from .rot3 import Rot3, UnitQuaternion
from .se2 import Pose2
from .se3 import Pose3
from .trans import TransN

__all__ = ["BLOCKS", "AuditBlock", "block_error", "audit", "DEFAULT_TOL"]

DEFAULT_TOL = 1e-5
MAX_ANGLE = 2.5

Pair = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class AuditBlock:
    name: str
    draw: Callable[[np.random.Generator], Pair]  # (analytic, numeric)


BLOCKS: dict[str, AuditBlock] = {}


def _block(name: str):
    def deco(fn):
        BLOCKS[name] = AuditBlock(name, fn)
        return fn
    return deco


def block_error(J: np.ndarray, J_fd: np.ndarray) -> float:
    J = np.atleast_2d(J)
    J_fd = np.atleast_2d(J_fd)
    if J.shape != J_fd.shape:
        return float("inf")
    return float(np.max(np.abs(J - J_fd), initial=0.0) / max(1.0, np.max(np.abs(J_fd), initial=0.0)))


# -- random inputs ----------------------------------------------------------------

# group kind -> (class, tangent size, indices of the rotational tangent part, action size)
_GROUPS = {
    "s1": (UnitComplex, 1, slice(0, 1), 2),
    "so2": (Rot2, 1, slice(0, 1), 2),
    "s3": (UnitQuaternion, 3, slice(0, 3), 3),
    "so3": (Rot3, 3, slice(0, 3), 3),
    "se2": (Pose2, 3, slice(2, 3), 2),
    "se3": (Pose3, 6, slice(3, 6), 3),
    "rn": (TransN, 3, slice(0, 0), 3),
}


def _tangent(rng, kind: str, max_angle: float = MAX_ANGLE) -> np.ndarray:
    _, m, rot, _ = _GROUPS[kind]
    tau = rng.uniform(-2.0, 2.0, m)
    w = tau[rot]
    if w.size:
        n = np.linalg.norm(w)
        tau[rot] = w / max(n, 1e-12) * rng.uniform(0.0, max_angle)
    return tau


def _element(rng, kind: str) -> LieGroup:
    return _GROUPS[kind][0].exp(_tangent(rng, kind))


def _group_blocks(kind: str) -> None:
    cls, m, _, na = _GROUPS[kind]

    @_block(f"{kind}.inverse")
    def _(rng):
        X = _element(rng, kind)
        return X.inverse_jac(), jac_numeric(lambda Z: Z.inverse(), X)

    @_block(f"{kind}.compose_lhs")
    def _(rng):
        X, Y = _element(rng, kind), _element(rng, kind)
        return X.compose_jacs(Y)[0], jac_numeric(lambda Z: Z.compose(Y), X)

    @_block(f"{kind}.compose_rhs")
    def _(rng):
        X, Y = _element(rng, kind), _element(rng, kind)
        return X.compose_jacs(Y)[1], jac_numeric(lambda Z: X.compose(Z), Y)

    @_block(f"{kind}.rjac")
    def _(rng):
        tau = _tangent(rng, kind)
        return cls.rjac(tau), jac_numeric(cls.exp, tau)

    @_block(f"{kind}.ljac")
    def _(rng):
        tau = _tangent(rng, kind)
        return cls.ljac(tau), jac_numeric(cls.exp, tau, codomain="left")

    @_block(f"{kind}.rjacinv")
    def _(rng):
        tau = _tangent(rng, kind)
        return cls.rjacinv(tau), jac_numeric(lambda Z: Z.log(), cls.exp(tau))

    @_block(f"{kind}.ljacinv")
    def _(rng):
        tau = _tangent(rng, kind)
        return cls.ljacinv(tau), jac_numeric(lambda Z: Z.log(), cls.exp(tau), domain="left")

    @_block(f"{kind}.adjoint")
    def _(rng):
        X = _element(rng, kind)
        Xi = X.inverse()
        return X.adj(), jac_numeric(lambda t: X.compose(cls.exp(t)).compose(Xi).log(), np.zeros(m))

    @_block(f"{kind}.act_element")
    def _(rng):
        X, v = _element(rng, kind), rng.uniform(-2.0, 2.0, na)
        return X.act_jacs(v)[0], jac_numeric(lambda Z: Z.act(v), X)

    @_block(f"{kind}.act_vector")
    def _(rng):
        X, v = _element(rng, kind), rng.uniform(-2.0, 2.0, na)
        return X.act_jacs(v)[1], jac_numeric(X.act, v)

    @_block(f"{kind}.plus_element")
    def _(rng):
        X, tau = _element(rng, kind), _tangent(rng, kind)
        return X.plus_jacs(tau)[0], jac_numeric(lambda Z: Z.plus(tau), X)

    @_block(f"{kind}.plus_tangent")
    def _(rng):
        X, tau = _element(rng, kind), _tangent(rng, kind)
        return X.plus_jacs(tau)[1], jac_numeric(X.plus, tau)

    @_block(f"{kind}.minus_lhs")
    def _(rng):
        X = _element(rng, kind)
        Y = X.plus(_tangent(rng, kind))
        return Y.minus_jacs(X)[0], jac_numeric(lambda Z: Z.minus(X), Y)

    @_block(f"{kind}.minus_rhs")
    def _(rng):
        X = _element(rng, kind)
        Y = X.plus(_tangent(rng, kind))
        return Y.minus_jacs(X)[1], jac_numeric(lambda Z: Y.minus(Z), X)


for _kind in _GROUPS:
    _group_blocks(_kind)


# -- composite -------------------------------------------------------------------------


def _composite(rng) -> Composite:
    return Composite([_element(rng, "se2"), _element(rng, "rn"), _element(rng, "so3")])


def _composite_tangent(rng) -> np.ndarray:
    return np.concatenate([_tangent(rng, "se2"), _tangent(rng, "rn"), _tangent(rng, "so3")])


@_block("composite.plus_element")
def _(rng):
    X, tau = _composite(rng), _composite_tangent(rng)
    return X.plus_jacs(tau)[0], jac_numeric(lambda Z: Z.plus(tau), X)


@_block("composite.plus_tangent")
def _(rng):
    X, tau = _composite(rng), _composite_tangent(rng)
    return X.plus_jacs(tau)[1], jac_numeric(X.plus, tau)


@_block("composite.minus_lhs")
def _(rng):
    X = _composite(rng)
    Y = X.plus(_composite_tangent(rng))
    return Y.minus_jacs(X)[0], jac_numeric(lambda Z: Z.minus(X), Y)


@_block("composite.minus_rhs")
def _(rng):
    X = _composite(rng)
    Y = X.plus(_composite_tangent(rng))
    return Y.minus_jacs(X)[1], jac_numeric(lambda Z: Y.minus(Z), X)


@_block("composite.inverse")
def _(rng):
    X = _composite(rng)
    return X.inverse_jac(), jac_numeric(lambda Z: Z.inverse(), X)


# -- estimation ---------------------------------------------------------------------------


@_block("estimation.bias_correct")
def _(rng):
    u = rng.uniform(-1.0, 1.0, 3)
    c = rng.uniform(-0.1, 0.1, 2)
    return bias_correct_jac(), jac_numeric(lambda cc: bias_correct(u, cc), c)


def _beacon_blocks(kind: str) -> None:
    na = _GROUPS[kind][3]

    @_block(f"estimation.beacon_obs_{kind}")
    def _(rng):
        X, b = _element(rng, kind), rng.uniform(-5.0, 5.0, na)
        return beacon_observation(X, b)[1], jac_numeric(lambda Z: Z.inverse().act(b), X)

    @_block(f"estimation.beacon_obs_b_{kind}")
    def _(rng):
        X, b = _element(rng, kind), rng.uniform(-5.0, 5.0, na)
        return beacon_observation(X, b)[2], jac_numeric(lambda bb: X.inverse().act(bb), b)

    @_block(f"estimation.motion_factor_{kind}")
    def _(rng):
        Xi = _element(rng, kind)
        Xj = Xi.plus(_tangent(rng, kind, 2.0))
        u = _tangent(rng, kind, 2.0)
        e, (J_i, J_j) = RESIDUALS["motion"](u, [Xi, Xj])
        # the error is u - (Xj - Xi); differentiate that expression directly
        Ji_fd = jac_numeric(lambda Z: u - Xj.minus(Z), Xi)
        Jj_fd = jac_numeric(lambda Z: u - Z.minus(Xi), Xj)
        return np.hstack([J_i, J_j]), np.hstack([Ji_fd, Jj_fd])


for _kind in ("se2", "se3"):
    _beacon_blocks(_kind)


@_block("estimation.calibrated_motion_bias")
def _(rng):
    Xi = _element(rng, "se2")
    Xj = Xi.plus(_tangent(rng, "se2", 2.0))
    c = TransN(rng.uniform(-0.1, 0.1, 2))
    u = _tangent(rng, "se2", 2.0)
    fn = RESIDUALS["calibrated-motion"]
    J_c = fn(u, [c, Xi, Xj])[1][0]
    return J_c, jac_numeric(lambda cc: fn(u, [cc, Xi, Xj])[0], c)


# -- differential drive ---------------------------------------------------------------------

_WHEEL = WheelParams(0.1, 0.105, 0.5)


def _tick(rng, t: float = 0.0) -> EncoderTick:
    return EncoderTick(float(rng.uniform(0.2, 1.5)), float(rng.uniform(0.2, 1.5)), t)


def _calib(rng) -> np.ndarray:
    return rng.uniform(0.9, 1.1, 3)


def _b_vec(b: BodyMag) -> np.ndarray:
    return np.array([b.dl, b.dtheta])


@_block("diffdrive.body_encoders")
def _(rng):
    y, c = _tick(rng), _calib(rng)
    f = lambda v: _b_vec(body_magnitudes(EncoderTick(v[0], v[1]), c, _WHEEL))  # noqa: E731
    return jac_body(y, c, _WHEEL)[0], jac_numeric(f, np.array([y.dpsi_l, y.dpsi_r]))


@_block("diffdrive.body_calib")
def _(rng):
    y, c = _tick(rng), _calib(rng)
    return jac_body(y, c, _WHEEL)[1], jac_numeric(lambda cc: _b_vec(body_magnitudes(y, cc, _WHEEL)), c)


def _delta_vec(v, tol):
    return pose_coords(delta_from_body(BodyMag(v[0], v[1]), tol))


@_block("diffdrive.delta_arc")
def _(rng):
    v = np.array([rng.uniform(0.01, 1.0), rng.choice([-1.0, 1.0]) * rng.uniform(0.01, 1.5)])
    return jac_delta_body(BodyMag(*v)), jac_numeric(lambda w: _delta_vec(w, 1e-6), v)


@_block("diffdrive.delta_straight")
def _(rng):
    # a wide threshold keeps the central differences on the straight branch
    v = np.array([rng.uniform(0.01, 1.0), rng.uniform(-0.5, 0.5)])
    return jac_delta_body(BodyMag(*v), 1.0), jac_numeric(lambda w: _delta_vec(w, 1.0), v)


def _coords_pose(v) -> Pose2:
    return Pose2(v[0], v[1], v[2])


@_block("diffdrive.compose_delta")
def _(rng):
    D, d = _element(rng, "se2"), _element(rng, "se2")
    f = lambda v: pose_coords(delta_compose(_coords_pose(v), d))  # noqa: E731
    return jac_delta_compose(D, d)[0], jac_numeric(f, pose_coords(D))


@_block("diffdrive.compose_step")
def _(rng):
    D, d = _element(rng, "se2"), _element(rng, "se2")
    f = lambda v: pose_coords(delta_compose(D, _coords_pose(v)))  # noqa: E731
    return jac_delta_compose(D, d)[1], jac_numeric(f, pose_coords(d))


def _ticks(rng, n: int = 8) -> list[EncoderTick]:
    return [_tick(rng, 0.1 * (k + 1)) for k in range(n)]


@_block("diffdrive.preint_calib")
def _(rng):
    ticks, c = _ticks(rng), _calib(rng)
    d = preintegrate(ticks, c, _WHEEL)
    return d.Jc, jac_numeric(lambda cc: preintegrate(ticks, cc, _WHEEL).coords, c)


def _residual_setup(rng):
    ticks, c = _ticks(rng), _calib(rng)
    d = preintegrate(ticks, c, _WHEEL)
    Xi = _element(rng, "se2")
    Xj = Xi.compose(d.Delta).plus(rng.uniform(-0.1, 0.1, 3))
    c_lin = c + rng.uniform(-0.02, 0.02, 3)
    return Xi, Xj, c_lin, d


def _res(Xi, Xj, c, d: PreintDelta):
    return preint_residual(Xi, Xj, c, d, whiten=False)


@_block("diffdrive.residual_pose_i")
def _(rng):
    Xi, Xj, c, d = _residual_setup(rng)
    return _res(Xi, Xj, c, d)[1], jac_numeric(lambda Z: _res(Z, Xj, c, d)[0], Xi)


@_block("diffdrive.residual_pose_j")
def _(rng):
    Xi, Xj, c, d = _residual_setup(rng)
    return _res(Xi, Xj, c, d)[2], jac_numeric(lambda Z: _res(Xi, Z, c, d)[0], Xj)


@_block("diffdrive.residual_calib")
def _(rng):
    Xi, Xj, c, d = _residual_setup(rng)
    return _res(Xi, Xj, c, d)[3], jac_numeric(lambda cc: _res(Xi, Xj, cc, d)[0], c)


# -- driver ------------------------------------------------------------------------------------


def audit(
    trials: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    inject: Iterable[str] = (),
    names: Iterable[str] | None = None,
) -> dict:
    """Run the audit and return a JSON-ready report.

    ``inject`` lists blocks whose analytic value is sign-flipped before the
    comparison, to check that the audit catches the fault.
    """
    inject = set(inject)
    unknown = inject - set(BLOCKS)
    if unknown:
        raise KeyError(f"unknown blocks: {sorted(unknown)}")
    selected = list(BLOCKS) if names is None else list(names)
    report = {}
    for idx, name in enumerate(sorted(BLOCKS)):
        if name not in selected:
            continue
        rng = np.random.default_rng([seed, idx])
        worst = 0.0
        for _ in range(trials):
            J, J_fd = BLOCKS[name].draw(rng)
            if name in inject:
                J = -np.asarray(J)
            worst = max(worst, block_error(J, J_fd))
        report[name] = {"max_error": worst, "trials": trials, "pass": bool(worst <= tol)}
    return {
        "tolerance": tol,
        "seed": seed,
        "trials": trials,
        "blocks": report,
        "failed": sorted(k for k, v in report.items() if not v["pass"]),
        "pass": all(v["pass"] for v in report.values()),
    }
