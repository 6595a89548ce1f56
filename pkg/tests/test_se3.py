import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_tangent
from liestate import Pose3, Rot3, jac_numeric, skew
from liestate.se3 import (
    adj_se3,
    exp_se3,
    jl_inv_se3,
    jl_se3,
    jr_inv_se3,
    jr_se3,
    log_se3,
    q_matrix_se3,
)

seeds = st.integers(0, 2**32 - 1)


def test_exp_examples():
    assert exp_se3(np.zeros(6)).isapprox(Pose3())
    M = exp_se3([1.0, -2.0, 0.5, 0, 0, 0])
    assert np.allclose(M.rotation(), np.eye(3)) and np.allclose(M.translation, [1, -2, 0.5])


def test_log_exp_roundtrip(rng):
    for _ in range(200):
        tau = random_tangent(Pose3, rng, 3.0)
        assert np.allclose(log_se3(exp_se3(tau)), tau, atol=1e-9)


def test_exp_matches_matrix_exponential(rng):
    for _ in range(30):
        tau = random_tangent(Pose3, rng, 3.0)
        assert np.allclose(exp_se3(tau).matrix(), expm(Pose3.hat(tau)), atol=1e-9)


def test_adjoint_closed_form(rng):
    assert np.allclose(adj_se3(Pose3()), np.eye(6))
    t = np.array([0.3, -1.0, 2.0])
    A = adj_se3(Pose3(np.eye(3), t))
    assert np.allclose(A, np.block([[np.eye(3), skew(t)], [np.zeros((3, 3)), np.eye(3)]]))
    for _ in range(20):
        M, tau = Pose3.random(rng), rng.normal(size=6)
        R, t = M.rotation(), M.translation
        assert np.allclose(M.adj(), np.block([[R, skew(t) @ R], [np.zeros((3, 3)), R]]))
        direct = Pose3.vee(M.matrix() @ Pose3.hat(tau) @ np.linalg.inv(M.matrix()))
        assert np.allclose(M.adj() @ tau, direct, atol=1e-12)


def test_jacobian_closed_forms(rng):
    assert np.allclose(jl_se3(np.zeros(6)), np.eye(6))
    for _ in range(50):
        tau = random_tangent(Pose3, rng, 2.5)
        assert np.allclose(jl_se3(tau) @ jl_inv_se3(tau), np.eye(6), atol=1e-9)
        assert np.allclose(jr_se3(tau) @ jr_inv_se3(tau), np.eye(6), atol=1e-9)
        assert np.allclose(jr_se3(tau), jl_se3(-tau), atol=1e-12)
        J_left = jac_numeric(Pose3.exp, tau, codomain="left")
        assert np.allclose(jl_se3(tau), J_left, atol=1e-6)
        assert np.allclose(q_matrix_se3(tau[:3], tau[3:]), J_left[:3, 3:], atol=1e-6)
        assert np.allclose(jr_se3(tau), jac_numeric(Pose3.exp, tau), atol=1e-6)


def test_q_matrix_small_angles(rng):
    # the series branch must agree with the oracle where the closed form cancels
    for scale in (1e-1, 1e-3, 1e-5, 1e-7):
        for _ in range(5):
            rho = rng.normal(size=3)
            th = rng.normal(size=3)
            th *= scale / np.linalg.norm(th)
            tau = np.concatenate([rho, th])
            J_left = jac_numeric(Pose3.exp, tau, codomain="left")
            assert np.allclose(q_matrix_se3(rho, th), J_left[:3, 3:], atol=1e-6)


def test_inverse_jacobian_corner(rng):
    tau = random_tangent(Pose3, rng, 2.0)
    Jinv = jl_inv_se3(tau)
    A = jl_inv_se3(np.concatenate([np.zeros(3), tau[3:]]))[:3, :3]
    Q = q_matrix_se3(tau[:3], tau[3:])
    assert np.allclose(Jinv[:3, 3:], -A @ Q @ A, atol=1e-12)


def test_jacobian_blocks(rng):
    for _ in range(50):
        M, N = Pose3.random(rng), Pose3.random(rng)
        p = rng.normal(size=3)
        assert np.allclose(M.inverse_jac(), -M.adj())
        assert np.allclose(M.inverse_jac(), jac_numeric(lambda Z: Z.inverse(), M), atol=1e-6)
        Jl, Jr = M.compose_jacs(N)
        assert np.allclose(Jr, np.eye(6))
        assert np.allclose(Jl, N.adj_inv())
        Ja, Jp = M.act_jacs(p)
        R = M.rotation()
        assert np.allclose(Ja, np.hstack([R, -R @ skew(p)]))
        assert np.allclose(Jp, R)
        assert np.allclose(Ja, jac_numeric(lambda Z: Z.act(p), M), atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_adjoint_identities(seed):
    rng = np.random.default_rng(seed)
    X, Y = Pose3.random(rng), Pose3.random(rng)
    assert np.allclose(X.inverse().adj(), np.linalg.inv(X.adj()), atol=1e-9)
    assert np.allclose(X.compose(Y).adj(), X.adj() @ Y.adj(), atol=1e-9)
    tau = random_tangent(Pose3, rng, 3.0)
    assert np.allclose(Pose3.exp(tau).adj(), jl_se3(tau) @ jr_inv_se3(tau), atol=1e-8)


def test_rotation_part_is_so3(rng):
    tau = random_tangent(Pose3, rng)
    assert np.allclose(Pose3.exp(tau).rotation(), Rot3.exp(tau[3:]).rotation(), atol=1e-12)
