import numpy as np
import pytest

from liestate import Pose2, jac_numeric, wrap_angle
from liestate.diffdrive import (
    THETA_TOL,
    BodyMag,
    Calib,
    DiffDriveCalibrator,
    EncoderTick,
    NoiseParams,
    PreintDelta,
    WheelParams,
    body_magnitudes,
    calibrate,
    delta_compose,
    delta_from_body,
    encoder_noise_cov,
    jac_body,
    jac_delta_body,
    jac_delta_compose,
    pose_coords,
    preint_residual,
    preintegrate,
    read_anchor_csv,
    read_encoder_csv,
    write_anchor_csv,
    write_encoder_csv,
)
from liestate.estimation import RankDeficientError
from liestate.simulate import make_encoder_run

WHEEL = WheelParams(0.1, 0.1, 0.5)
C1 = Calib()


def _bm(b: BodyMag):
    return np.array([b.dl, b.dtheta])


def _ticks(rng, n=10):
    return [EncoderTick(*rng.uniform(0.5, 2.0, 2), 0.1 * (k + 1)) for k in range(n)]


# -- body magnitudes ---------------------------------------------------------------


def test_body_magnitude_examples():
    b = body_magnitudes(EncoderTick(0.7, 0.7), C1, WHEEL)
    assert np.allclose(_bm(b), [0.07, 0.0])
    b = body_magnitudes(EncoderTick(-0.7, 0.7), C1, WHEEL)
    assert np.allclose(_bm(b), [0.0, 2 * 0.1 * 0.7 / 0.5])
    b = body_magnitudes(EncoderTick(1.0, 1.2), C1, WHEEL)
    # hand computation: (0.1 + 0.12) / 2 and (0.12 - 0.1) / 0.5
    assert np.allclose(_bm(b), [0.11, 0.04], atol=1e-15)


def test_parameter_validation():
    with pytest.raises(ValueError):
        WheelParams(0.1, -0.1, 0.5)
    with pytest.raises(ValueError):
        Calib(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        EncoderTick(np.nan, 0.0)


def test_body_jacobians(rng):
    wheel = WheelParams(0.09, 0.11, 0.45)
    for _ in range(50):
        y = EncoderTick(*rng.uniform(-2, 2, 2))
        c = Calib(*rng.uniform(0.8, 1.2, 3))
        Jy, Jc = jac_body(y, c, wheel)
        num_y = jac_numeric(lambda v: _bm(body_magnitudes(EncoderTick(*v), c, wheel)),
                            np.array([y.dpsi_l, y.dpsi_r]))
        num_c = jac_numeric(lambda v: _bm(body_magnitudes(y, Calib(*v), wheel)), c.vector)
        assert np.allclose(Jy, num_y, atol=1e-8)
        assert np.allclose(Jc, num_c, atol=1e-8)
        dth = body_magnitudes(y, c, wheel).dtheta
        assert np.allclose(Jc[:, 2], [0.0, -dth / c.c_d])


def test_body_jacobian_with_unit_calibration_scales_radii():
    y = EncoderTick(0.4, 0.9)
    Jy, _ = jac_body(y, C1, WHEEL)
    assert np.allclose(Jy, [[0.05, 0.05], [-0.2, 0.2]])


# -- per-step delta ----------------------------------------------------------------


def test_delta_examples():
    d = delta_from_body(BodyMag(0.3, 0.0))
    assert np.allclose(pose_coords(d), [0.3, 0.0, 0.0])
    d = delta_from_body(BodyMag(np.pi / 2, np.pi / 2))
    assert np.allclose(pose_coords(d), [1.0, 1.0, np.pi / 2])


def test_branches_agree_at_threshold():
    for dl in (0.01, 0.5, 2.0):
        for s in (1.0, -1.0):
            arc = pose_coords(delta_from_body(BodyMag(dl, s * 1e-6), theta_tol=1e-7))
            mid = pose_coords(delta_from_body(BodyMag(dl, s * 1e-6), theta_tol=1e-5))
            assert np.abs(arc - mid).max() < 1e-12
            lo = pose_coords(delta_from_body(BodyMag(dl, s * THETA_TOL * (1 - 1e-9))))
            hi = pose_coords(delta_from_body(BodyMag(dl, s * THETA_TOL * (1 + 1e-9))))
            assert np.abs(lo - hi).max() < 1e-12


def test_branch_jacobians_continuous_for_small_steps():
    # the two Jacobians differ by about dl * dtheta / 12 at the switch
    dl = 1e-3
    a = jac_delta_body(BodyMag(dl, THETA_TOL * (1 - 1e-9)))
    b = jac_delta_body(BodyMag(dl, THETA_TOL * (1 + 1e-9)))
    assert np.abs(a - b).max() < 1e-10


def test_delta_jacobians(rng):
    assert np.allclose(jac_delta_body(BodyMag(1.0, 0.0)), [[1, 0], [0, 0.5], [0, 1]])
    f = lambda v, tol: pose_coords(delta_from_body(BodyMag(*v), theta_tol=tol))
    for _ in range(50):
        b = BodyMag(rng.uniform(-1, 1), rng.uniform(-2, 2))
        J = jac_delta_body(b)
        assert np.allclose(J, jac_numeric(lambda v: f(v, THETA_TOL), _bm(b)), atol=1e-7)
        # the fallback branch, forced on with a large threshold
        b = BodyMag(rng.uniform(-1, 1), rng.uniform(-0.5, 0.5))
        J = jac_delta_body(b, theta_tol=1.0)
        assert np.allclose(J, jac_numeric(lambda v: f(v, 1.0), _bm(b)), atol=1e-7)


def test_arc_jacobian_printed_form():
    dl = dth = np.pi / 2
    s, c = np.sin(dth), np.cos(dth)
    expect = np.array([
        [s / dth, dl * (dth * c - s) / dth**2],
        [(1 - c) / dth, dl * (dth * s - (1 - c)) / dth**2],
        [0.0, 1.0],
    ])
    assert np.allclose(jac_delta_body(BodyMag(dl, dth)), expect)


def test_delta_compose(rng):
    E = Pose2()
    for _ in range(30):
        D, d = Pose2.random(rng), Pose2.random(rng)
        assert delta_compose(E, d).isapprox(d)
        assert delta_compose(D, d).isapprox(D.compose(d), 1e-12)
        A, B = jac_delta_compose(D, d)
        coords = lambda v: pose_coords(delta_compose(Pose2(*v), d))
        assert np.allclose(A, jac_numeric(coords, pose_coords(D)), atol=1e-7)
        coords = lambda v: pose_coords(delta_compose(D, Pose2(*v)))
        assert np.allclose(B, jac_numeric(coords, pose_coords(d)), atol=1e-7)


def test_encoder_noise():
    zero = NoiseParams(0.0, 0.0, 0.0, 0.0, np.zeros((2, 2)))
    assert np.allclose(encoder_noise_cov(EncoderTick(1.0, 2.0), zero), 0.0)
    n = NoiseParams(1e-4, 2e-4, 1e-3, 1e-3)
    assert np.allclose(encoder_noise_cov(EncoderTick(0.0, 0.0), n), 1e-6 * np.eye(2))
    Q = encoder_noise_cov(EncoderTick(0.5, -0.25), n)
    assert np.isclose(Q[0, 0], 5e-5 + 1e-6) and np.isclose(Q[1, 1], 5e-5 + 1e-6)
    assert Q[0, 1] == 0.0


# -- pre-integration -----------------------------------------------------------------


def test_preintegration_starting_conditions():
    zero = NoiseParams(0.0, 0.0, 0.0, 0.0, np.zeros((2, 2)))
    d = preintegrate([EncoderTick(0.0, 0.0)] * 5, C1, WHEEL, zero)
    assert d.Delta.isapprox(Pose2()) and np.allclose(d.Q, 0.0) and np.allclose(d.Jc, 0.0)
    y = EncoderTick(1.0, 1.0)
    d = preintegrate([y], C1, WHEEL)
    assert d.Delta.isapprox(delta_from_body(body_magnitudes(y, C1, WHEEL)))
    with pytest.raises(ValueError):
        preintegrate([], C1, WHEEL)


def test_preintegration_is_the_composition(rng):
    ticks = _ticks(rng, 30)
    c = Calib(1.02, 0.97, 1.04)
    d = preintegrate(ticks, c, WHEEL)
    X = Pose2()
    for y in ticks:
        X = X.compose(delta_from_body(body_magnitudes(y, c, WHEEL)))
    assert np.abs(pose_coords(X) - d.coords).max() < 1e-12


def test_covariance_stays_psd_and_gains_information(rng):
    ticks = _ticks(rng, 20)
    prev, D = np.zeros((3, 3)), Pose2()
    for k in range(1, len(ticks) + 1):
        d = preintegrate(ticks[:k], C1, WHEEL)
        Q = d.Q
        assert np.allclose(Q, Q.T, atol=1e-18)
        assert np.linalg.eigvalsh(Q).min() >= -1e-18
        # each step adds a PSD term on top of the transported covariance
        step = delta_from_body(body_magnitudes(ticks[k - 1], C1, WHEEL))
        A, _ = jac_delta_compose(D, step)
        assert np.linalg.eigvalsh(Q - A @ prev @ A.T).min() >= -1e-18
        prev, D = Q, d.Delta


def test_raw_covariance_is_not_loewner_monotone(rng):
    # the transport through the composition shear can shrink some directions
    ticks = _ticks(rng, 20)
    gaps = [np.linalg.eigvalsh(preintegrate(ticks[:k + 1], C1, WHEEL).Q
                               - preintegrate(ticks[:k], C1, WHEEL).Q).min()
            for k in range(1, len(ticks))]
    assert min(gaps) < 0.0


def test_calibration_jacobian_matches_oracle(rng):
    for _ in range(10):
        ticks = _ticks(rng, 15)
        c = rng.uniform(0.9, 1.1, 3)
        d = preintegrate(ticks, c, WHEEL)
        num = jac_numeric(lambda v: preintegrate(ticks, v, WHEEL).coords, c, eps=1e-6)
        assert np.abs(d.Jc - num).max() < 1e-6
        # first-order prediction for a small calibration change
        dc = rng.uniform(-1e-4, 1e-4, 3)
        pred = d.coords + d.Jc @ dc
        assert np.abs(preintegrate(ticks, c + dc, WHEEL).coords - pred).max() < 1e-6


# -- residual ------------------------------------------------------------------------


def _identity_info(d: PreintDelta) -> PreintDelta:
    return PreintDelta(d.Delta, np.eye(3), d.Jc, d.c_bar, d.span)


def test_residual_zero_at_prediction(rng):
    ticks = _ticks(rng)
    d = _identity_info(preintegrate(ticks, C1, WHEEL))
    Xi = Pose2.random(rng)
    r, *_ = preint_residual(Xi, Xi.compose(d.Delta), C1.vector, d)
    assert np.allclose(r, 0.0, atol=1e-12)


def test_residual_wraps_angles():
    d = PreintDelta(Pose2(0.0, 0.0, 0.0), np.eye(3), np.zeros((3, 3)), np.ones(3), (0, 1))
    Xi = Pose2(0.0, 0.0, -np.pi + 0.05)
    Xj = Pose2(0.0, 0.0, np.pi - 0.05 + 0.2)
    r, *_ = preint_residual(Xi, Xj, np.ones(3), d)
    assert np.isclose(r[2], wrap_angle(2 * np.pi + 0.1))
    assert np.isclose(r[2], 0.1)


def test_residual_jacobians(rng):
    ticks = _ticks(rng)
    c = np.array([1.01, 0.99, 1.03])
    d = preintegrate(ticks, c, WHEEL)
    for _ in range(20):
        Xi = Pose2.random(rng)
        Xj = Xi.compose(d.Delta).plus(rng.uniform(-0.1, 0.1, 3))
        cl = c + rng.uniform(-0.02, 0.02, 3)
        r, Ji, Jj, Jc = preint_residual(Xi, Xj, cl, d)
        assert np.allclose(Ji, jac_numeric(lambda Z: preint_residual(Z, Xj, cl, d)[0], Xi), atol=1e-5)
        assert np.allclose(Jj, jac_numeric(lambda Z: preint_residual(Xi, Z, cl, d)[0], Xj), atol=1e-5)
        assert np.allclose(Jc, jac_numeric(lambda v: preint_residual(Xi, Xj, v, d)[0], cl), atol=1e-5)


# -- calibration ---------------------------------------------------------------------


def test_unit_calibration_noiseless():
    run = make_encoder_run(calib=Calib(1.0, 1.0, 1.0))
    res = calibrate(run.ticks, run.anchors, run.wheel)
    assert np.abs(res.calib.vector - 1.0).max() < 1e-8


def test_recovers_injected_calibration():
    run = make_encoder_run("figure8", 500)
    res = calibrate(run.ticks, run.anchors, run.wheel)
    assert res.converged
    assert np.abs(res.calib.vector - [1.02, 0.98, 1.05]).max() < 1e-6


def test_straight_data_leaves_axle_unobservable():
    run = make_encoder_run("straight", 500)
    with pytest.raises(RankDeficientError) as exc:
        calibrate(run.ticks, run.anchors, run.wheel)
    assert exc.value.null_dim == 1
    v = exc.value.null_basis[:3, 0]
    assert abs(v[2]) / np.linalg.norm(v) > 0.99


def test_needs_two_anchors():
    run = make_encoder_run(n_ticks=20)
    with pytest.raises(ValueError):
        calibrate(run.ticks, run.anchors[:1], run.wheel)


def test_noisy_calibration_within_predicted_spread():
    truth = np.array([1.02, 0.98, 1.05])
    noise = NoiseParams()
    z = []
    for seed in range(5):
        run = make_encoder_run(seed=seed, noisy=True, noise=noise)
        res = calibrate(run.ticks, run.anchors, run.wheel, noise)
        z.append((res.calib.vector - truth) / np.sqrt(np.diag(res.covariance)))
    assert np.abs(z).max() < 4.0


def test_estimator_front_end():
    run = make_encoder_run(n_ticks=200)
    est = DiffDriveCalibrator(wheel=run.wheel).fit(run.ticks, run.anchors)
    assert np.abs(est.calib_.vector - [1.02, 0.98, 1.05]).max() < 1e-6
    assert est.covariance_.shape == (3, 3) and est.converged_
    assert len(est.poses_) == len(run.anchors)
    with pytest.raises(ValueError):
        DiffDriveCalibrator().fit(run.ticks, run.anchors)


def test_csv_roundtrip(tmp_path):
    run = make_encoder_run(n_ticks=30, anchor_every=10)
    write_encoder_csv(tmp_path / "enc.csv", run.ticks)
    write_anchor_csv(tmp_path / "anc.csv", run.anchors)
    ticks = read_encoder_csv(tmp_path / "enc.csv")
    anchors = read_anchor_csv(tmp_path / "anc.csv")
    assert ticks == run.ticks
    assert all(t == t0 and X.isapprox(X0, 1e-15) for (t, X), (t0, X0) in zip(anchors, run.anchors))
    (tmp_path / "bad.csv").write_text("time,l,r\n0,1,2\n")
    with pytest.raises(ValueError):
        read_encoder_csv(tmp_path / "bad.csv")
