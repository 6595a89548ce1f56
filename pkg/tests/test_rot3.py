import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_tangent
from liestate import Rot3, UnitQuaternion, jac_numeric, skew
from liestate.rot3 import (
    exp_q,
    exp_so3,
    jl_inv_so3,
    jl_so3,
    jr_inv_so3,
    jr_so3,
    log_q,
    log_so3,
    q_to_R,
)

seeds = st.integers(0, 2**32 - 1)


def _taylor_expm(A, terms=20):
    out, term = np.eye(A.shape[0]), np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_exp_q_examples():
    assert np.allclose(exp_q([0, 0, 0]).wxyz, [1, 0, 0, 0])
    assert np.allclose(exp_q([0, 0, np.pi]).wxyz, [0, 0, 0, 1], atol=1e-15)


def test_log_q_double_cover(rng):
    for _ in range(20):
        q = UnitQuaternion.random(rng)
        neg = UnitQuaternion(*(-q.wxyz))
        assert np.allclose(log_q(neg), log_q(q), atol=1e-12)


def test_exp_so3_examples():
    assert np.allclose(exp_so3([0, 0, 0]).matrix(), np.eye(3))
    expect = [[0, -1, 0], [1, 0, 0], [0, 0, 1]]
    assert np.allclose(exp_so3([0, 0, np.pi / 2]).matrix(), expect, atol=1e-15)
    assert np.allclose(_taylor_expm(skew([0, 0, np.pi / 2])), expect, atol=1e-12)


def test_log_so3_roundtrip(rng):
    for _ in range(200):
        v = random_tangent(Rot3, rng, 3.0)
        assert np.allclose(log_so3(exp_so3(v)), v, atol=1e-9)


def test_log_so3_near_antipode(rng):
    for _ in range(50):
        u = rng.normal(size=3)
        v = u / np.linalg.norm(u) * (np.pi - rng.uniform(1e-6, 1e-2))
        assert np.allclose(log_so3(exp_so3(v)), v, atol=1e-7)


def test_q_to_R(rng):
    assert np.allclose(q_to_R(UnitQuaternion()), np.eye(3))
    assert np.allclose(q_to_R(UnitQuaternion(0, 0, 0, 1)) @ [1, 0, 0], [-1, 0, 0])
    for _ in range(50):
        v = random_tangent(Rot3, rng)
        q = exp_q(v)
        assert np.allclose(q_to_R(q), exp_so3(v).matrix(), atol=1e-12)
        x = rng.normal(size=3)
        assert np.allclose(q.rotate_by_product(x), q_to_R(q) @ x, atol=1e-12)


def test_rot3_matches_matrix_exponential(rng):
    for _ in range(20):
        v = random_tangent(Rot3, rng)
        assert np.allclose(exp_so3(v).matrix(), expm(skew(v)), atol=1e-12)


def test_jacobian_closed_forms(rng):
    assert np.allclose(jr_so3(np.zeros(3)), np.eye(3))
    for _ in range(50):
        v = random_tangent(Rot3, rng, 3.0)
        assert np.allclose(jr_so3(v) @ jr_inv_so3(v), np.eye(3), atol=1e-10)
        assert np.allclose(jl_so3(v) @ jl_inv_so3(v), np.eye(3), atol=1e-10)
        assert np.allclose(jl_so3(v), jr_so3(v).T, atol=1e-12)
        assert np.allclose(jr_so3(-v), jl_so3(v), atol=1e-12)
        assert np.allclose(jr_so3(v), jac_numeric(exp_so3, v), atol=1e-6)
        assert np.allclose(jl_so3(v), jac_numeric(exp_so3, v, codomain="left"), atol=1e-6)


def test_small_angle_branches_continuous():
    u = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
    lo, hi = u * (1e-4 - 1e-12), u * (1e-4 + 1e-12)
    for f in (jr_so3, jl_so3, jr_inv_so3, jl_inv_so3):
        assert np.allclose(f(lo), f(hi), atol=1e-10)
    assert np.allclose(exp_so3(lo).matrix(), exp_so3(hi).matrix(), atol=1e-10)


@pytest.mark.parametrize("cls", [Rot3, UnitQuaternion])
def test_blocks_match_oracle(cls, rng):
    for _ in range(30):
        R, Q = cls.random(rng), cls.random(rng)
        th = random_tangent(cls, rng, 2.5)
        v = rng.normal(size=3)
        assert np.allclose(R.inverse_jac(), -R.rotation(), atol=1e-12)
        Jl, Jr = R.compose_jacs(Q)
        assert np.allclose(Jl, Q.rotation().T) and np.allclose(Jr, np.eye(3))
        assert np.allclose(Jl, jac_numeric(lambda Z: Z.compose(Q), R), atol=1e-6)
        JX, Jt = R.plus_jacs(th)
        assert np.allclose(JX, cls.exp(th).rotation().T, atol=1e-12)
        assert np.allclose(Jt, jac_numeric(lambda t: R.plus(t), th), atol=1e-6)
        Y = R.plus(th)
        Jy, Jx = Y.minus_jacs(R)
        assert np.allclose(Jy, jr_inv_so3(th), atol=1e-9)
        assert np.allclose(Jx, -jl_inv_so3(th), atol=1e-9)
        Ja, Jv = R.act_jacs(v)
        assert np.allclose(Ja, -R.rotation() @ skew(v), atol=1e-12)
        assert np.allclose(Jv, R.rotation())
        assert np.allclose(R.adj(), R.rotation())


def test_blocks_at_identity():
    R, th = Rot3(), np.zeros(3)
    assert np.allclose(R.inverse_jac(), -np.eye(3))
    for J in (*R.compose_jacs(R), *R.plus_jacs(th), R.minus_jacs(R)[0]):
        assert np.allclose(J, np.eye(3))
    assert np.allclose(R.minus_jacs(R)[1], -np.eye(3))


def test_quaternion_and_matrix_jacobians_agree(rng):
    for _ in range(20):
        v = random_tangent(Rot3, rng, 2.5)
        w = random_tangent(Rot3, rng, 1.0)
        fq = lambda Z: Z.plus(w).inverse()
        Jq = jac_numeric(fq, UnitQuaternion.exp(v))
        Jm = jac_numeric(fq, Rot3.exp(v))
        assert np.allclose(Jq, Jm, atol=1e-7)


def test_first_order_approximation_is_quadratic():
    tau = np.array([0.4, -0.7, 1.1])
    d = np.array([0.3, 0.5, -0.2])
    errs = []
    for s in (1e-2, 1e-3, 1e-4):
        a = Rot3.exp(tau + s * d)
        b = Rot3.exp(tau).compose(Rot3.exp(jr_so3(tau) @ (s * d)))
        errs.append(np.linalg.norm(a.minus(b)))
    assert 80 < errs[0] / errs[1] < 120
    assert 80 < errs[1] / errs[2] < 120


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_adjoint_of_exp(seed):
    rng = np.random.default_rng(seed)
    v = random_tangent(Rot3, rng, 3.0)
    assert np.allclose(Rot3.exp(v).adj(), jl_so3(v) @ jr_inv_so3(v), atol=1e-9)
