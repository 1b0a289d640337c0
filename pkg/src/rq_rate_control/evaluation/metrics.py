"""Evaluation kernels for rate-control runs."""

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy.integrate import trapezoid
from scipy.interpolate import pchip_interpolate

from ..exceptions import ContractError, DegenerateFitError, DomainError, UndefinedScoreError
from ..modeling.rq_model import (
    LambdaMap,
    ModelKind,
    RQPoint,
    fit_all_kinds,
    lambda_from_quality,
)
from ..trace import SequenceTrace

ANCHOR_METHOD = "anchor"
# 分段插值的取樣點數
PCHIP_SAMPLES = 100


def rate_deviation_pct(r_target: float, r_enc: float) -> float:
    """Absolute deviation of the encoded rate from the target, in percent of the target.

    Raises:
        DomainError: If the target is not positive.
    """
    if not r_target > 0:
        raise DomainError(f"target rate must be positive, got {r_target}")
    return abs((r_target - r_enc) / r_target) * 100.0


def predictor_accuracy_pct(r_enc: Sequence[float], r_pred: Sequence[float]) -> float:
    """Mean absolute rate error at one grid level, normalized by the predicted rate.

    Raises:
        ContractError: On empty input or length mismatch.
        DomainError: If any predicted rate is not positive.
    """
    if len(r_enc) != len(r_pred) or not r_enc:
        raise ContractError("need equal non-empty lists of encoded and predicted rates")
    enc = np.asarray(r_enc, dtype=np.float64)
    pred = np.asarray(r_pred, dtype=np.float64)
    if np.any(pred <= 0):
        raise DomainError("predicted rates must be positive")
    return float(np.mean(np.abs(enc - pred) / pred)) * 100.0


@dataclass(frozen=True)
class RdCurvePoint:
    """One rate-distortion operating point."""

    rate: float
    psnr_db: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise DomainError(f"curve rate must be positive, got {self.rate}")


def _curve_arrays(curve: Sequence[RdCurvePoint]) -> Tuple[np.ndarray, np.ndarray]:
    if len(curve) < 4:
        raise ContractError(f"BD-rate needs at least 4 points per curve, got {len(curve)}")
    ordered = sorted(curve, key=lambda p: p.rate)
    rates = np.array([p.rate for p in ordered], dtype=np.float64)
    psnr = np.array([p.psnr_db for p in ordered], dtype=np.float64)
    if np.any(np.diff(rates) <= 0):
        raise DomainError("curve rates must be distinct")
    return np.log10(rates), psnr


def bd_rate(
    anchor: Sequence[RdCurvePoint],
    test: Sequence[RdCurvePoint],
    piecewise: bool = False
) -> float:
    """Bjontegaard delta-rate of ``test`` against ``anchor`` in percent.

    log10(rate) is modeled as a cubic in PSNR per curve and integrated over the
    overlapping PSNR interval. With ``piecewise`` a monotone piecewise-cubic Hermite
    interpolant sampled on a uniform grid and integrated by the trapezoid rule is used
    instead. Negative values mean the test curve needs fewer bits.

    Raises:
        ContractError: Fewer than 4 points in a curve.
        DomainError: The PSNR ranges do not overlap.
    """
    anchor_log, anchor_psnr = _curve_arrays(anchor)
    test_log, test_psnr = _curve_arrays(test)

    low = max(anchor_psnr.min(), test_psnr.min())
    high = min(anchor_psnr.max(), test_psnr.max())
    if not high > low:
        raise DomainError(f"PSNR ranges do not overlap ({low:.3f} >= {high:.3f})")

    if piecewise:
        samples, step = np.linspace(low, high, num=PCHIP_SAMPLES, retstep=True)
        order_a, order_t = np.argsort(anchor_psnr), np.argsort(test_psnr)
        v_anchor = pchip_interpolate(anchor_psnr[order_a], anchor_log[order_a], samples)
        v_test = pchip_interpolate(test_psnr[order_t], test_log[order_t], samples)
        int_anchor = trapezoid(v_anchor, dx=step)
        int_test = trapezoid(v_test, dx=step)
    else:
        p_anchor = np.polyint(np.polyfit(anchor_psnr, anchor_log, 3))
        p_test = np.polyint(np.polyfit(test_psnr, test_log, 3))
        int_anchor = np.polyval(p_anchor, high) - np.polyval(p_anchor, low)
        int_test = np.polyval(p_test, high) - np.polyval(p_test, low)

    avg_diff = (int_test - int_anchor) / (high - low)
    return float((10.0 ** avg_diff - 1.0) * 100.0)


def rd_curve(traces: Sequence[SequenceTrace]) -> List[RdCurvePoint]:
    """One RD point per trace: mean bits per frame against mean PSNR."""
    return [RdCurvePoint(rate=t.mean_rate, psnr_db=t.mean_psnr_db) for t in traces if t.records]


def _safe_bd_rate(anchor: Sequence[SequenceTrace], test: Sequence[SequenceTrace]) -> float:
    try:
        return bd_rate(rd_curve(anchor), rd_curve(test))
    except (ContractError, DomainError) as e:
        logger.debug(f"BD-rate unavailable: {str(e)}")
        return float("nan")


def _nanmean(values: Sequence[float]) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else float("nan")


@dataclass
class MethodSummary:
    """Per-method averages over sequences."""

    method: str
    mean_deviation_pct: float
    bd_rate_pct: float
    per_sequence: Dict[str, Tuple[float, float]] = field(default_factory=dict)


def _group(traces: Sequence[SequenceTrace]) -> Dict[Tuple[str, str, int], List[SequenceTrace]]:
    groups: Dict[Tuple[str, str, int], List[SequenceTrace]] = defaultdict(list)
    for trace in traces:
        groups[(trace.sequence, trace.method, trace.seed)].append(trace)
    return groups


def _bd_by_cell(traces: Sequence[SequenceTrace]) -> Dict[Tuple[str, str], float]:
    """Seed-averaged BD-rate per (sequence, method) against the same seed's anchor."""
    groups = _group(traces)
    values: Dict[Tuple[str, str], List[float]] = defaultdict(list)
    for (sequence, method, seed), runs in groups.items():
        if method == ANCHOR_METHOD:
            continue
        anchor = groups.get((sequence, ANCHOR_METHOD, seed), [])
        values[(sequence, method)].append(_safe_bd_rate(anchor, runs))
    return {key: _nanmean(v) for key, v in values.items()}


def summarize(traces: Sequence[SequenceTrace]) -> List[MethodSummary]:
    """Per-sequence and per-method deviation and BD-rate.

    Per-sequence deviation is the mean of the per-trace mean deviations across targets and
    seeds. BD-rate is measured against the constant-quality anchor traces (method
    ``anchor``) of the same sequence and seed; it is NaN when a curve has fewer than 4
    points.

    Raises:
        ContractError: If there are no traces.
    """
    if not traces:
        raise ContractError("summarize needs at least one trace")

    deviations: Dict[Tuple[str, str], List[float]] = defaultdict(list)
    for trace in traces:
        if trace.method != ANCHOR_METHOD and trace.records:
            deviations[(trace.sequence, trace.method)].append(trace.mean_deviation_pct)
    bd = _bd_by_cell(traces)

    by_method: Dict[str, Dict[str, Tuple[float, float]]] = defaultdict(dict)
    for (sequence, method), values in deviations.items():
        by_method[method][sequence] = (
            float(np.mean(values)), bd.get((sequence, method), float("nan"))
        )

    summaries = []
    for method in sorted(by_method):
        rows = by_method[method]
        summaries.append(MethodSummary(
            method=method,
            mean_deviation_pct=float(np.mean([dev for dev, _ in rows.values()])),
            bd_rate_pct=_nanmean([b for _, b in rows.values()]),
            per_sequence=dict(sorted(rows.items())),
        ))
    return summaries


SUMMARY_COLUMNS = ["sequence", "method", "target", "mean_deviation_pct", "bd_rate_pct"]


def summary_frame(traces: Sequence[SequenceTrace]) -> pd.DataFrame:
    """Summary table with one row per (sequence, method, target), averaged over seeds."""
    bd = _bd_by_cell(traces)
    rows = [
        {
            "sequence": t.sequence,
            "method": t.method,
            "target": t.target,
            "deviation": t.mean_deviation_pct,
        }
        for t in traces
        if t.method != ANCHOR_METHOD and t.records
    ]
    if not rows:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    df = (
        pd.DataFrame(rows)
        .groupby(["sequence", "method", "target"], sort=True)["deviation"]
        .mean()
        .rename("mean_deviation_pct")
        .reset_index()
    )
    df["bd_rate_pct"] = [
        bd.get((s, m), float("nan")) for s, m in zip(df["sequence"], df["method"])
    ]
    return df[SUMMARY_COLUMNS]


def model_family_table(points_by_sequence: Mapping[str, Sequence[RQPoint]]) -> pd.DataFrame:
    """R^2 of every model family per sequence, with a ``mean`` row.

    Families that cannot be fitted or scored on a sequence are left as NaN.
    """
    rows = {}
    for name, points in points_by_sequence.items():
        try:
            scores = fit_all_kinds(points)
        except (UndefinedScoreError, DegenerateFitError):
            scores = {}
        rows[name] = {kind.value: scores[kind][1] if kind in scores else float("nan")
                      for kind in ModelKind}
    table = pd.DataFrame.from_dict(rows, orient="index", columns=[k.value for k in ModelKind])
    table.loc["mean"] = table.mean(skipna=True)
    return table


def per_frame_deviation(traces: Sequence[SequenceTrace]) -> pd.DataFrame:
    """Mean deviation by frame index, one column per method."""
    rows = [
        {"t": r.t, "method": trace.method, "deviation_pct": r.deviation_pct}
        for trace in traces
        if trace.method != ANCHOR_METHOD
        for r in trace.records
    ]
    if not rows:
        return pd.DataFrame(columns=["t"])
    table = pd.pivot_table(
        pd.DataFrame(rows), index="t", columns="method", values="deviation_pct", aggfunc="mean"
    )
    table.columns.name = None
    return table.reset_index()


OPERATING_POINT_COLUMNS = [
    "sequence", "method", "target", "mean_bits", "mean_bpp", "mean_quality", "lambda",
    "mean_psnr_db", "clamped_frames", "repaired_predictions",
]


def operating_points(
    traces: Sequence[SequenceTrace],
    lambda_map: Optional[LambdaMap] = None
) -> pd.DataFrame:
    """Rate, quality and Lagrange multiplier of every (sequence, method, target) cell.

    Means are taken over seeds; bits per pixel use each trace's frame size. ``lambda`` is
    the multiplier of the mean quality level. Clamp and repair counts are summed.
    """
    lambda_map = lambda_map or LambdaMap()
    rows = [
        {
            "sequence": t.sequence,
            "method": t.method,
            "target": t.target,
            "mean_bits": t.mean_rate,
            "mean_bpp": t.mean_bpp,
            "mean_quality": t.mean_quality,
            "mean_psnr_db": t.mean_psnr_db,
            "clamped_frames": t.clamp_count,
            "repaired_predictions": t.repair_count,
        }
        for t in traces
        if t.records
    ]
    if not rows:
        return pd.DataFrame(columns=OPERATING_POINT_COLUMNS)
    df = (
        pd.DataFrame(rows)
        .groupby(["sequence", "method", "target"], sort=True)
        .agg(
            mean_bits=("mean_bits", "mean"),
            mean_bpp=("mean_bpp", "mean"),
            mean_quality=("mean_quality", "mean"),
            mean_psnr_db=("mean_psnr_db", "mean"),
            clamped_frames=("clamped_frames", "sum"),
            repaired_predictions=("repaired_predictions", "sum"),
        )
        .reset_index()
    )
    df["lambda"] = [lambda_from_quality(lambda_map, q) for q in df["mean_quality"]]
    return df[OPERATING_POINT_COLUMNS]
