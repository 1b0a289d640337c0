"""Evaluation metrics and summaries."""

from .metrics import (
    ANCHOR_METHOD,
    MethodSummary,
    RdCurvePoint,
    bd_rate,
    model_family_table,
    operating_points,
    per_frame_deviation,
    predictor_accuracy_pct,
    rate_deviation_pct,
    rd_curve,
    summarize,
    summary_frame,
)

__all__ = [
    "ANCHOR_METHOD",
    "MethodSummary",
    "RdCurvePoint",
    "bd_rate",
    "model_family_table",
    "operating_points",
    "per_frame_deviation",
    "predictor_accuracy_pct",
    "rate_deviation_pct",
    "rd_curve",
    "summarize",
    "summary_frame",
]
