import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GROUPS, random_element, random_tangent
from liestate import (
    DimensionError,
    Pose2,
    Rot2,
    Rot3,
    TransN,
    UnitComplex,
    adj,
    jac_chain,
    jac_crossed_lr,
    jac_crossed_rl,
    jac_numeric,
    jac_right_to_left,
    lminus,
    lplus,
    rminus,
    rplus,
    skew,
)
from liestate.core import as_tangent

seeds = st.integers(0, 2**32 - 1)


# -- plus and minus ----------------------------------------------------------------


def test_rplus_identity_and_zero(group, rng):
    X = random_element(group, rng)
    E = X.identity_like()
    zero = np.zeros(X.dof)
    assert rplus(E, zero).isapprox(E, 1e-14)
    assert rplus(X, zero).isapprox(X, 1e-14)
    assert lplus(zero, X).isapprox(X, 1e-14)


def test_rplus_so2_adds_angles():
    assert np.isclose(rplus(Rot2.exp(0.3), [0.2]).angle, 0.5)


def test_rminus_self_is_zero(group, rng):
    X = random_element(group, rng)
    assert np.allclose(rminus(X, X), 0.0, atol=1e-12)
    assert np.allclose(lminus(X, X), 0.0, atol=1e-12)


def test_rminus_so3_about_z():
    Rz = lambda a: Rot3.exp([0.0, 0.0, a])
    assert np.allclose(rminus(Rz(np.pi / 2), Rz(np.pi / 4)), [0, 0, np.pi / 4], atol=1e-12)


def test_left_right_recompose_to_same_element(group, rng):
    X = random_element(group, rng)
    Y = X.plus(random_tangent(group, rng, 1.0))
    assert lplus(lminus(Y, X), X).isapprox(Y, 1e-9)
    assert rplus(X, rminus(Y, X)).isapprox(Y, 1e-9)
    assert np.allclose(lminus(Y, X), adj(X) @ rminus(Y, X), atol=1e-9)


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        Pose2().plus([1.0, 2.0])
    with pytest.raises(DimensionError):
        Pose2().minus(Rot2())
    with pytest.raises(ValueError):
        as_tangent([np.nan, 0.0, 0.0], 3)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, k=st.integers(0, len(GROUPS) - 1))
def test_group_axioms(seed, k):
    cls = GROUPS[k]
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_element(cls, rng) for _ in range(3))
    E = X.identity_like()
    assert X.compose(E).isapprox(X, 1e-12)
    assert E.compose(X).isapprox(X, 1e-12)
    assert X.compose(X.inverse()).isapprox(E, 1e-12)
    assert X.compose(Y).compose(Z).isapprox(X.compose(Y.compose(Z)), 1e-10)
    assert np.allclose(E.log(), 0.0)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, k=st.integers(0, len(GROUPS) - 1))
def test_plus_minus_inverse_pair(seed, k):
    cls = GROUPS[k]
    rng = np.random.default_rng(seed)
    X = random_element(cls, rng)
    tau = random_tangent(cls, rng)
    assert np.allclose(X.plus(tau).minus(X), tau, atol=1e-9)


# -- numeric Jacobians -------------------------------------------------------------


def test_jac_numeric_of_identity_map(group, rng):
    X = random_element(group, rng)
    assert np.allclose(jac_numeric(lambda Z: Z, X), np.eye(X.dof), atol=1e-6)


def test_jac_numeric_rotation_action(rng):
    R = Rot3.random(rng)
    p = rng.normal(size=3)
    J = jac_numeric(lambda Q: Q.act(p), R)
    assert np.allclose(J, -R.rotation() @ skew(p), atol=1e-6)


def test_jac_numeric_inverse_is_minus_adjoint(group, rng):
    X = random_element(group, rng)
    assert np.allclose(jac_numeric(lambda Z: Z.inverse(), X), -X.adj(), atol=1e-6)


def test_jac_numeric_rejects_bad_arguments():
    with pytest.raises(ValueError):
        jac_numeric(lambda Z: Z, Pose2(), eps=0.0)
    with pytest.raises(ValueError):
        jac_numeric(lambda Z: Z, Pose2(), domain="up")


def test_jac_chain_identities(rng):
    J = rng.normal(size=(3, 2))
    assert np.allclose(jac_chain(np.eye(3), J), J)
    assert np.allclose(jac_chain(J, np.eye(2)), J)
    with pytest.raises(DimensionError):
        jac_chain(J, np.eye(3))


def test_jac_chain_inverse_then_compose_matches_oracle(rng):
    X, Y = Pose2.random(rng), Pose2.random(rng)
    # f(X) = X^-1 Y
    J_inv = X.inverse_jac()
    J_comp = X.inverse().compose_jacs(Y)[0]
    J = jac_chain(J_comp, J_inv)
    assert np.allclose(J, jac_numeric(lambda Z: Z.inverse().compose(Y), X), atol=1e-6)


def test_crossed_jacobians_at_identity_equal_right():
    J = np.arange(9.0).reshape(3, 3)
    assert np.allclose(jac_crossed_rl(J, np.eye(3)), J)
    assert np.allclose(jac_crossed_lr(J, np.eye(3)), J)


def test_so2_jacobian_flavours_coincide(rng):
    R = Rot2.random(rng)
    Q = Rot2.random(rng)
    f = lambda Z: Z.compose(Q)
    flavours = [jac_numeric(f, R, domain=d, codomain=c)
                for d in ("right", "left") for c in ("right", "left")]
    for J in flavours:
        assert np.allclose(J, flavours[0], atol=1e-8)


@pytest.mark.parametrize("cls", [Pose2, UnitComplex, Rot3, TransN])
def test_left_right_and_crossed_relations(cls, rng):
    X = random_element(cls, rng)
    Y0 = random_element(cls, rng)
    f = lambda Z: Z.compose(Y0).inverse()
    Y = f(X)
    J_r = jac_numeric(f, X)
    J_l = jac_numeric(f, X, domain="left")
    assert np.allclose(jac_right_to_left(J_r, X.adj(), Y.adj()), J_l, atol=1e-7)
    J_rl = jac_numeric(f, X, domain="right", codomain="left")
    J_lr = jac_numeric(f, X, domain="left", codomain="right")
    assert np.allclose(jac_crossed_rl(J_r, Y.adj()), J_rl, atol=1e-7)
    assert np.allclose(jac_crossed_lr(J_r, X.adj()), J_lr, atol=1e-7)
    # the loop J^E Ad(X) = Ad(f(X)) J^X
    assert np.allclose(J_l @ X.adj(), Y.adj() @ J_r, atol=1e-8)
