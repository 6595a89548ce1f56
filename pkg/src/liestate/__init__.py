"""Lie groups for state estimation: closed-form group operations, analytic
Jacobians, manifold uncertainty, and the estimators built on them."""

from .core import (
    DimensionError,
    LieGroup,
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
)
from .rot2 import Rot2, UnitComplex, wrap_angle
from .rot3 import Rot3, UnitQuaternion, skew
from .se2 import Pose2
from .se3 import Pose3
from .trans import TransN
from .composite import Composite, Layout, assemble_jacobian, dminus, dplus, jac_composite
from .uncertainty import GLOBAL, LOCAL, GaussianState, propagate, sample
from . import estimation
from . import diffdrive  # registers the pre-integrated motion factor

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "LieGroup",
    "adj",
    "jac_chain",
    "jac_crossed_lr",
    "jac_crossed_rl",
    "jac_numeric",
    "jac_right_to_left",
    "lminus",
    "lplus",
    "rminus",
    "rplus",
    "Rot2",
    "UnitComplex",
    "wrap_angle",
    "Rot3",
    "UnitQuaternion",
    "skew",
    "Pose2",
    "Pose3",
    "TransN",
    "Composite",
    "Layout",
    "assemble_jacobian",
    "dminus",
    "dplus",
    "jac_composite",
    "GLOBAL",
    "LOCAL",
    "GaussianState",
    "propagate",
    "sample",
    "estimation",
    "diffdrive",
]
