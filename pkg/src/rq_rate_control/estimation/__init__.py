"""Online (alpha, beta) estimation."""

from .estimator import (
    EstimatorVariant,
    LmsState,
    ObservationWindow,
    calibrate_initial_params,
    calibration_traces,
    estimate_batch,
    fuse_points,
    initial_params,
    lms_step,
    predict_quality_for_target,
)

__all__ = [
    "EstimatorVariant",
    "LmsState",
    "ObservationWindow",
    "calibrate_initial_params",
    "calibration_traces",
    "estimate_batch",
    "fuse_points",
    "initial_params",
    "lms_step",
    "predict_quality_for_target",
]
