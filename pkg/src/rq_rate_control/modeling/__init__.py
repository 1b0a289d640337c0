"""R-Q model families and fitting."""

from .rq_model import (
    LambdaMap,
    ModelKind,
    QualityLevel,
    Rate,
    RQParams,
    RQPoint,
    clamp_quality,
    eval_quality,
    eval_quality_many,
    fit_all_kinds,
    fit_arrays,
    fit_least_squares,
    invert_rate,
    lambda_from_quality,
    r_squared,
    select_best_model,
)

__all__ = [
    "LambdaMap",
    "ModelKind",
    "QualityLevel",
    "Rate",
    "RQParams",
    "RQPoint",
    "clamp_quality",
    "eval_quality",
    "eval_quality_many",
    "fit_all_kinds",
    "fit_arrays",
    "fit_least_squares",
    "invert_rate",
    "lambda_from_quality",
    "r_squared",
    "select_best_model",
]
