import numpy as np
import pytest

from liestate import Pose2, Pose3, Rot2, Rot3, TransN, UnitComplex, UnitQuaternion

MAX_ANGLE = np.pi - 1e-3


def _rot_vec(rng, n, max_angle=MAX_ANGLE):
    if n == 1:
        return rng.uniform(-max_angle, max_angle, 1)
    u = rng.normal(size=3)
    return u / np.linalg.norm(u) * rng.uniform(0.0, max_angle)


def random_tangent(cls, rng, max_angle=MAX_ANGLE, n=3):
    """A tangent vector inside the injectivity radius of ``cls``."""
    if cls in (UnitComplex, Rot2):
        return _rot_vec(rng, 1, max_angle)
    if cls in (UnitQuaternion, Rot3):
        return _rot_vec(rng, 3, max_angle)
    if cls is Pose2:
        return np.concatenate([rng.uniform(-2, 2, 2), _rot_vec(rng, 1, max_angle)])
    if cls is Pose3:
        return np.concatenate([rng.uniform(-2, 2, 3), _rot_vec(rng, 3, max_angle)])
    return rng.uniform(-5, 5, n)


def random_element(cls, rng, n=3):
    if cls is TransN:
        return TransN(rng.uniform(-5, 5, n))
    return cls.exp(random_tangent(cls, rng))


GROUPS = [UnitComplex, Rot2, UnitQuaternion, Rot3, Pose2, Pose3, TransN]
GROUP_IDS = [c.__name__ for c in GROUPS]


@pytest.fixture(params=GROUPS, ids=GROUP_IDS)
def group(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[i]
        terminalreporter.write_line(
            f"criterion {i:2d} [{mod.TITLES[i]}]: {'PASS' if ok else 'FAIL'} - {detail}")
