"""Seeded synthetic scenarios for the estimators.

Everything here is deterministic given the seed: the same arguments always
produce the same truth and the same noisy measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .composite import Composite
from .core import LieGroup
from .diffdrive import Calib, EncoderTick, NoiseParams, WheelParams, body_magnitudes, delta_from_body, encoder_noise_cov
from .estimation.eskf import BeaconMeasurement, ControlInput
from .estimation.factors import (
    Factor,
    FactorGraph,
    beacon_factor,
    calibrated_motion_factor,
    motion_factor,
    prior_factor,
)
from .rot2 import wrap_angle
from .se2 import Pose2
from .se3 import Pose3
from .trans import TransN

__all__ = [
    "MotionNoise",
    "LocalizationScenario",
    "make_localization",
    "make_sam_graph",
    "make_selfcal_graph",
    "SAM_PAIRS",
    "EncoderScenario",
    "make_encoder_run",
    "rollout_deltas",
]


@dataclass(frozen=True)
class MotionNoise:
    """Standard deviations of the control and beacon noise."""

    sigma_v: float = 0.1
    sigma_s: float = 0.05
    sigma_w: float = 0.05
    sigma_x: float = 0.05
    sigma_y: float = 0.05
    sigma_z: float = 0.05

    def W(self, dim: int, dt: float) -> np.ndarray:
        if dim == 2:
            return np.diag([self.sigma_v**2, self.sigma_s**2, self.sigma_w**2]) * dt
        return np.diag([self.sigma_v**2, self.sigma_s**2, self.sigma_s**2,
                        self.sigma_w**2, self.sigma_w**2, self.sigma_w**2]) * dt

    def N(self, dim: int) -> np.ndarray:
        s = [self.sigma_x, self.sigma_y, self.sigma_z][:dim]
        return np.diag(np.square(s))


NO_NOISE = MotionNoise(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

BEACONS_2D = np.array([[5.0, 2.0], [10.0, 10.0], [2.0, 14.0]])
BEACONS_3D = np.array([[5.0, 2.0, 1.0], [10.0, 10.0, -1.0], [2.0, 14.0, 2.0]])


def _identity(dim: int) -> LieGroup:
    return Pose2() if dim == 2 else Pose3()


def _nominal_twist(dim: int, v: float, w: float, dt: float) -> np.ndarray:
    if dim == 2:
        return np.array([v * dt, 0.0, w * dt])
    # a gentle helix: forward motion, yaw rate and a little pitch rate
    return np.array([v * dt, 0.0, 0.0, 0.0, 0.2 * w * dt, w * dt])


@dataclass
class LocalizationScenario:
    dim: int
    dt: float
    beacons: np.ndarray
    truth: list
    controls: list
    measurements: list
    initial_pose: LieGroup
    initial_cov: np.ndarray
    noise: MotionNoise = field(default_factory=MotionNoise)


def make_localization(
    dim: int = 2,
    steps: int = 200,
    seed: int = 0,
    *,
    noise: MotionNoise | None = None,
    noisy: bool = True,
    dt: float = 0.1,
    v: float = 1.0,
    w: float = 0.1,
    beacons=None,
) -> LocalizationScenario:
    """Robot driving a constant twist among known beacons, all measured every step.

    The truth follows the nominal twist; the reported control is the
    nominal one plus noise drawn from ``W``, and each beacon measurement is
    ``X^-1 . b`` plus noise drawn from ``N``.  The covariances handed to the
    filter are the configured ones even when ``noisy`` is off.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    noise = MotionNoise() if noise is None else noise
    rng = np.random.default_rng(seed)
    beacons = (BEACONS_2D if dim == 2 else BEACONS_3D) if beacons is None else np.asarray(beacons, float)
    W = noise.W(dim, dt)
    N = noise.N(dim)
    # both covariances are diagonal
    sw = np.sqrt(np.diag(W)) if noisy else np.zeros(W.shape[0])
    sn = np.sqrt(np.diag(N)) if noisy else np.zeros(dim)
    u_nom = _nominal_twist(dim, v, w, dt)
    X = _identity(dim)
    truth, controls, meas = [], [], []
    for _ in range(steps):
        X = X.plus(u_nom)
        truth.append(X)
        u = u_nom + sw * rng.standard_normal(u_nom.shape[0])
        controls.append(ControlInput(u, W))
        step = []
        Xi = X.inverse()
        for k, b in enumerate(beacons):
            y = Xi.act(b) + sn * rng.standard_normal(dim)
            step.append(BeaconMeasurement(k, y, N))
        meas.append(step)
    n = 3 if dim == 2 else 6
    return LocalizationScenario(dim, dt, beacons, truth, controls, meas,
                                _identity(dim), np.zeros((n, n)), noise)


# -- smoothing and mapping -------------------------------------------------------

#: (pose, beacon) pairs of the beacon factors, with poses 1..3 and beacons 4..6
SAM_PAIRS = ((1, 4), (1, 5), (2, 5), (2, 6), (3, 6))

SAM_BEACONS_2D = np.array([[0.5, 1.5], [1.5, -1.0], [2.5, 2.0]])
SAM_BEACONS_3D = np.array([[0.5, 1.5, 0.5], [1.5, -1.0, -0.5], [2.5, 2.0, 1.0]])


def _sam_truth(dim: int):
    u = np.array([1.0, 0.0, 0.4]) if dim == 2 else np.array([1.0, 0.0, 0.1, 0.05, 0.1, 0.4])
    X1 = _identity(dim)
    X2 = X1.plus(u)
    X3 = X2.plus(u)
    beacons = SAM_BEACONS_2D if dim == 2 else SAM_BEACONS_3D
    return [X1, X2, X3], u, beacons


def _draw(rng, cov: np.ndarray, noisy: bool) -> np.ndarray:
    # every covariance drawn from here is diagonal, possibly with zeros
    if not noisy:
        return np.zeros(cov.shape[0])
    return np.sqrt(np.diag(cov)) * rng.standard_normal(cov.shape[0])


def make_sam_graph(
    dim: int = 2,
    seed: int = 0,
    *,
    noise: MotionNoise | None = None,
    noisy: bool = True,
    prior_sigma: float = 0.01,
    dt: float = 1.0,
    with_prior: bool = True,
) -> tuple[FactorGraph, Composite]:
    """The three-pose, three-beacon problem: one prior, two motions, five sightings.

    Returns the graph (its state is the ground truth; pass it through
    ``dead_reckon`` or ``SAMSolver(initialize=True)`` for a realistic start)
    and the ground-truth composite ``<X1, X2, X3, b4, b5, b6>``.
    """
    noise = MotionNoise() if noise is None else noise
    rng = np.random.default_rng(seed)
    poses, _, beacons = _sam_truth(dim)
    n = poses[0].dof
    truth = Composite([*poses, *(TransN(b) for b in beacons)])
    W = noise.W(dim, dt)
    N = noise.N(dim)
    P0 = prior_sigma**2 * np.eye(n)
    factors: list[Factor] = []
    if with_prior:
        factors.append(prior_factor(0, poses[0].plus(_draw(rng, P0, noisy)), P0))
    for i in (0, 1):
        u = poses[i + 1].minus(poses[i]) + _draw(rng, W, noisy)
        factors.append(motion_factor(i, i + 1, u, W))
    for i, k in SAM_PAIRS:
        y = poses[i - 1].inverse().act(beacons[k - 4]) + _draw(rng, N, noisy)
        factors.append(beacon_factor(i - 1, k - 1, y, N))
    return FactorGraph(truth, factors), truth


def make_selfcal_graph(
    bias=(0.05, -0.02),
    seed: int = 0,
    *,
    noise: MotionNoise | None = None,
    noisy: bool = True,
    prior_sigma: float = 0.01,
    dt: float = 1.0,
) -> tuple[FactorGraph, Composite]:
    """Planar SAM with biased odometry; the state gains a leading bias block ``c``.

    The graph's state starts with a zero bias and the true poses and
    beacons; the returned truth composite is ``<c*, X1, X2, X3, b4, b5, b6>``.
    """
    noise = MotionNoise() if noise is None else noise
    rng = np.random.default_rng(seed)
    poses, _, beacons = _sam_truth(2)
    bias = np.asarray(bias, dtype=float)
    truth = Composite([TransN(bias), *poses, *(TransN(b) for b in beacons)])
    W = noise.W(2, dt)
    N = noise.N(2)
    P0 = prior_sigma**2 * np.eye(3)
    factors = [prior_factor(1, poses[0].plus(_draw(rng, P0, noisy)), P0)]
    for i in (0, 1):
        u = poses[i + 1].minus(poses[i])
        u_tilde = u + np.array([bias[0], 0.0, bias[1]]) + _draw(rng, W, noisy)
        factors.append(calibrated_motion_factor(0, i + 1, i + 2, u_tilde, W))
    for i, k in SAM_PAIRS:
        y = poses[i - 1].inverse().act(beacons[k - 4]) + _draw(rng, N, noisy)
        factors.append(beacon_factor(i, k, y, N))
    start = truth.replace(0, TransN(np.zeros(2)))
    return FactorGraph(start, factors), truth


# -- differential drive --------------------------------------------------------------


@dataclass
class EncoderScenario:
    ticks: list
    poses: list
    anchors: list
    wheel: WheelParams
    calib: Calib
    dt: float


def _body_schedule(kind: str, n: int, dt: float, v: float):
    T = n * dt
    t = (np.arange(n) + 0.5) * dt
    if kind == "figure8":
        # a full left loop then a full right loop, back at the start
        omega = np.where(t < 0.5 * T, 4.0 * np.pi / T, -4.0 * np.pi / T)
    elif kind == "straight":
        omega = np.zeros(n)
    else:
        raise ValueError(f"unknown trajectory {kind!r}")
    return np.full(n, v * dt), omega * dt


def make_encoder_run(
    kind: str = "figure8",
    n_ticks: int = 500,
    seed: int = 0,
    *,
    wheel: WheelParams | None = None,
    calib: Calib | None = None,
    noise: NoiseParams | None = None,
    noisy: bool = False,
    dt: float = 0.1,
    v: float = 0.5,
    anchor_every: int = 50,
) -> EncoderScenario:
    """Wheel increments that make the true robot drive ``kind``.

    The increments invert the body-magnitude model at the true calibration,
    so integrating them with that calibration reproduces the true path.
    Anchors are the true poses every ``anchor_every`` ticks, starting at
    ``t = 0``.
    """
    wheel = WheelParams(0.1, 0.1, 0.5) if wheel is None else wheel
    calib = Calib(1.02, 0.98, 1.05) if calib is None else calib
    noise = NoiseParams() if noise is None else noise
    rng = np.random.default_rng(seed)
    dl, dth = _body_schedule(kind, n_ticks, dt, v)
    D = wheel.d * calib.c_d
    psi_l = (dl - 0.5 * D * dth) / (wheel.r_l * calib.c_l)
    psi_r = (dl + 0.5 * D * dth) / (wheel.r_r * calib.c_r)
    ticks, poses = [], [Pose2()]
    X = Pose2()
    for k in range(n_ticks):
        y = EncoderTick(float(psi_l[k]), float(psi_r[k]), (k + 1) * dt)
        X = X.compose(delta_from_body(body_magnitudes(y, calib, wheel)))
        poses.append(X)
        if noisy:
            n = np.sqrt(np.diag(encoder_noise_cov(y, noise))) * rng.standard_normal(2)
            y = EncoderTick(y.dpsi_l + n[0], y.dpsi_r + n[1], y.t)
        ticks.append(y)
    anchors = [(k * dt, poses[k]) for k in range(0, n_ticks + 1, anchor_every)]
    return EncoderScenario(ticks, poses, anchors, wheel, calib, dt)


def rollout_deltas(dpsi_l: np.ndarray, dpsi_r: np.ndarray, c, wheel: WheelParams,
                   slip: np.ndarray | None = None) -> np.ndarray:
    """Integrate many encoder sequences at once; rows are rollouts, columns ticks.

    ``slip`` (shape ``(rollouts, ticks, 2)``) is added to the body
    magnitudes.  Returns the final ``(x, y, theta)`` of every rollout.  The
    straight-step fallback is not needed here: turns are never that small.
    """
    c_l, c_r, c_d = np.asarray(c.vector if isinstance(c, Calib) else c, dtype=float)
    wl = wheel.r_l * c_l * dpsi_l
    wr = wheel.r_r * c_r * dpsi_r
    dl = 0.5 * (wl + wr)
    dth = (wr - wl) / (wheel.d * c_d)
    if slip is not None:
        dl = dl + slip[..., 0]
        dth = dth + slip[..., 1]
    if np.min(np.abs(dth)) < 1e-6:
        raise ValueError("rollout_deltas needs turning ticks")
    dx = dl * np.sin(dth) / dth
    dy = dl * 2.0 * np.sin(0.5 * dth) ** 2 / dth
    m = dl.shape[0]
    p = np.zeros((m, 2))
    th = np.zeros(m)
    for k in range(dl.shape[1]):
        c_, s_ = np.cos(th), np.sin(th)
        p[:, 0] += c_ * dx[:, k] - s_ * dy[:, k]
        p[:, 1] += s_ * dx[:, k] + c_ * dy[:, k]
        th = th + dth[:, k]
    return np.column_stack([p, wrap_angle(th)])
