"""R-Q prior predictors."""

from .base import (
    BasePredictor,
    PredictedPoints,
    PredictorContext,
    QualityGrid,
    enforce_monotone,
    mae_loss,
)
from .regressor import (
    FEATURE_NAMES,
    LinearRateRegressor,
    RegressorEvaluation,
    bits_mae,
    collect_training_records,
    evaluate_regressor,
    feature_matrix,
    train_regressor,
)
from .synthetic import OraclePredictor, SyntheticNoisyPredictor, expected_accuracy_pct

__all__ = [
    "FEATURE_NAMES",
    "BasePredictor",
    "LinearRateRegressor",
    "OraclePredictor",
    "PredictedPoints",
    "PredictorContext",
    "QualityGrid",
    "RegressorEvaluation",
    "SyntheticNoisyPredictor",
    "bits_mae",
    "collect_training_records",
    "enforce_monotone",
    "evaluate_regressor",
    "expected_accuracy_pct",
    "feature_matrix",
    "mae_loss",
    "train_regressor",
]
