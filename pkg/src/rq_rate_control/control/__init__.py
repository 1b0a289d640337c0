"""Bit allocation and the rate-control loop."""

from .budget import (
    BudgetState,
    RateControlConfig,
    allocate_frame,
    allocate_minigop,
    record_frame,
    start_minigop,
)
from .rate_control import (
    DEFAULT_INITIAL_PARAMS,
    estimate_params,
    run_closed_loop,
    run_constant_quality,
    run_one_step_eval,
)

__all__ = [
    "DEFAULT_INITIAL_PARAMS",
    "BudgetState",
    "RateControlConfig",
    "allocate_frame",
    "allocate_minigop",
    "estimate_params",
    "record_frame",
    "run_closed_loop",
    "run_constant_quality",
    "run_one_step_eval",
    "start_minigop",
]
