"""Pose estimation on top of the group library: filtering and batch smoothing."""

from .eskf import (
    BeaconMeasurement,
    ControlInput,
    ESKFLocalizer,
    SingularInnovationError,
    beacon_observation,
    eskf_correct,
    eskf_correct_many,
    eskf_predict,
)
from .factors import (
    RESIDUALS,
    Factor,
    FactorGraph,
    beacon_factor,
    bias_correct,
    bias_correct_jac,
    calibrated_motion_factor,
    factor_error,
    factor_residual,
    motion_factor,
    prior_factor,
    register_residual,
    sqrt_information,
)
from .sam import (
    ConvergenceError,
    RankDeficientError,
    SAMSolver,
    SolveReport,
    dead_reckon,
    null_space_dim,
    sam_cost,
    sam_jacobian,
    sam_residuals,
    sam_solve,
    sam_step,
)

__all__ = [
    "BeaconMeasurement",
    "ControlInput",
    "ESKFLocalizer",
    "SingularInnovationError",
    "beacon_observation",
    "eskf_correct",
    "eskf_correct_many",
    "eskf_predict",
    "RESIDUALS",
    "Factor",
    "FactorGraph",
    "beacon_factor",
    "bias_correct",
    "bias_correct_jac",
    "calibrated_motion_factor",
    "factor_error",
    "factor_residual",
    "motion_factor",
    "prior_factor",
    "register_residual",
    "sqrt_information",
    "ConvergenceError",
    "RankDeficientError",
    "SAMSolver",
    "SolveReport",
    "dead_reckon",
    "null_space_dim",
    "sam_cost",
    "sam_jacobian",
    "sam_residuals",
    "sam_solve",
    "sam_step",
]
