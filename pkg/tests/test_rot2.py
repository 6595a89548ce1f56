import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liestate import Rot2, UnitComplex, jac_numeric, wrap_angle
from liestate.rot2 import (
    act_rot2,
    exp_s1,
    exp_so2,
    jac_act_R,
    jac_act_v,
    jac_blocks_rot2,
    log_s1,
    log_so2,
)

angles = st.floats(-10.0, 10.0, allow_nan=False)


def test_exp_s1_examples():
    z = exp_s1(0.0)
    assert (z.re, z.im) == (1.0, 0.0)
    z = exp_s1(np.pi / 2)
    assert np.allclose([z.re, z.im], [0.0, 1.0], atol=1e-15)
    assert np.isclose(log_s1(exp_s1(2.5)), 2.5)


def test_exp_so2_examples():
    assert np.allclose(exp_so2(0.0).matrix(), np.eye(2))
    assert np.allclose(exp_so2(np.pi).matrix(), -np.eye(2), atol=1e-15)
    assert np.isclose(log_so2(exp_so2(-1.1)), -1.1)


def test_log_is_in_principal_range():
    assert np.isclose(log_s1(exp_s1(np.pi)), np.pi)
    assert np.isclose(log_so2(exp_so2(3 * np.pi / 2)), -np.pi / 2)


def test_strict_rejects_non_unit():
    with pytest.raises(ValueError):
        UnitComplex(2.0, 0.0, strict=True)
    with pytest.raises(ValueError):
        Rot2(np.diag([1.0, 2.0]), strict=True)
    assert np.isclose(UnitComplex(2.0, 0.0).re, 1.0)


def test_wrap_angle():
    assert np.isclose(wrap_angle(2 * np.pi + 0.1), 0.1)
    assert np.isclose(wrap_angle(-np.pi), np.pi)
    assert np.isclose(wrap_angle(np.pi), np.pi)


@pytest.mark.parametrize("cls", [UnitComplex, Rot2])
def test_scalar_blocks_match_oracle(cls, rng):
    blocks = jac_blocks_rot2()
    assert blocks["adj"] == 1.0 and blocks["inv"] == -1.0
    for _ in range(20):
        R, Q = cls.random(rng), cls.random(rng)
        tau = rng.uniform(-3, 3, 1)
        checks = {
            "adj": R.adj(),
            "inv": jac_numeric(lambda Z: Z.inverse(), R),
            "compose_lhs": jac_numeric(lambda Z: Z.compose(Q), R),
            "compose_rhs": jac_numeric(lambda Z: R.compose(Z), Q),
            "jr": jac_numeric(lambda t: cls.exp(t), tau),
            "jl": jac_numeric(lambda t: cls.exp(t), tau, codomain="left"),
            "plus_x": jac_numeric(lambda Z: Z.plus(tau), R),
            "plus_tau": jac_numeric(lambda t: R.plus(t), tau),
            "minus_y": jac_numeric(lambda Z: Z.minus(R), Q),
            "minus_x": jac_numeric(lambda Z: Q.minus(Z), R),
        }
        for name, J in checks.items():
            assert np.allclose(J, blocks[name], atol=1e-8), name
        Jy, Jx = Q.minus_jacs(R)
        assert np.allclose(Jy, 1.0) and np.allclose(Jx, -1.0)


def test_action_and_its_jacobians(rng):
    v = np.array([1.0, 0.0])
    assert np.allclose(act_rot2(Rot2(), v), v)
    assert np.allclose(jac_act_R(Rot2(), v), [[0.0], [1.0]])
    for _ in range(100):
        R = Rot2.random(rng)
        v = rng.normal(size=2)
        assert np.allclose(jac_act_R(R, v), jac_numeric(lambda Z: Z.act(v), R), atol=1e-8)
        assert np.allclose(jac_act_v(R, v), jac_numeric(lambda p: R.act(p), v), atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(a=angles, b=angles)
def test_commutative_and_log_additive(a, b):
    Q, R = Rot2.exp(a), Rot2.exp(b)
    assert Q.compose(R).isapprox(R.compose(Q), 1e-12)
    assert np.isclose(wrap_angle(Q.compose(R).angle - wrap_angle(a + b)), 0.0, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(a=angles)
def test_s1_and_so2_agree(a):
    assert np.isclose(log_s1(exp_s1(a)), log_so2(exp_so2(a)), atol=1e-12)
    assert np.allclose(exp_s1(a).matrix(), exp_so2(a).matrix(), atol=1e-12)
