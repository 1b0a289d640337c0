"""Online estimation of the logarithmic R-Q law.

Batch least squares fuses predictor prior points with the points observed so far in the
current GOP. The adaptive-LMS baseline updates (alpha, beta) one encode at a time.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..config import RATE_CONTROL
from ..exceptions import ContractError, DegenerateFitError, DomainError
from ..modeling.rq_model import (
    ModelKind,
    QualityLevel,
    Rate,
    RQParams,
    RQPoint,
    clamp_quality,
    fit_arrays,
)
from ..prediction.base import PredictedPoints, QualityGrid
from ..simulation.codec_sim import EncodeResult, SequenceProfile, encode_frame, multi_pass_probe
from ..trace import FrameRecord, SequenceTrace


class EstimatorVariant(str, Enum):
    """Competing parameter-estimation schemes."""

    FUSION = "fusion"
    PREDICTOR_ONLY = "predictor_only"
    HISTORY_ONLY = "history_only"
    ADAPTIVE_LMS = "adaptive_lms"
    FOUR_PASS_ORACLE = "four_pass_oracle"

    @property
    def uses_predictor(self) -> bool:
        return self in (EstimatorVariant.FUSION, EstimatorVariant.PREDICTOR_ONLY)

    @property
    def uses_history(self) -> bool:
        return self in (EstimatorVariant.FUSION, EstimatorVariant.HISTORY_ONLY)


@dataclass
class ObservationWindow:
    """Observed (R, Q) encodes of the current GOP in time order."""

    points: List[RQPoint] = field(default_factory=list)
    gop_scoped: bool = True

    def append(self, point: RQPoint) -> None:
        self.points.append(point)

    def clear(self) -> None:
        self.points.clear()

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class LmsState:
    """Adaptive-LMS parameters and step sizes."""

    alpha: float
    beta: float
    mu: float = RATE_CONTROL["lms_mu"]
    eta: float = RATE_CONTROL["lms_eta"]

    def __post_init__(self) -> None:
        for name in ("mu", "eta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ContractError(f"LMS step size {name} must be finite and positive: {value}")

    @property
    def params(self) -> RQParams:
        return RQParams(alpha=self.alpha, beta=self.beta)


def fuse_points(
    predicted: Optional[PredictedPoints],
    observed: ObservationWindow,
    fallback: RQParams,
    weight: float = RATE_CONTROL["observation_weight"]
) -> Tuple[RQParams, bool]:
    """Logarithmic least-squares fit over predicted and observed points.

    Args:
        predicted: Predictor prior points, or None.
        observed: Observed points of the current GOP.
        fallback: Parameters returned when the union cannot be fitted.
        weight: Weight of every predicted point relative to an observed point.

    Returns:
        (params, used_fallback).

    Raises:
        ContractError: If both point sets are empty.
    """
    prior = list(predicted.points) if predicted is not None else []
    if not prior and not observed.points:
        raise ContractError("estimate_batch needs predicted or observed points")

    union = prior + observed.points
    rates = np.array([p.rate for p in union], dtype=np.float64)
    qualities = np.array([p.quality for p in union], dtype=np.float64)
    weights = None
    if prior and weight != 1.0:
        weights = np.concatenate([np.full(len(prior), weight), np.ones(len(observed.points))])

    try:
        params = fit_arrays(rates, qualities, ModelKind.LOGARITHMIC, weights)
    except (DegenerateFitError, DomainError):
        return fallback, True
    # 品質須隨碼率遞增
    if params.alpha <= 0:
        return fallback, True
    return params, False


def estimate_batch(
    predicted: Optional[PredictedPoints],
    observed: ObservationWindow,
    fallback: RQParams,
    weight: float = RATE_CONTROL["observation_weight"]
) -> RQParams:
    """Fused (alpha, beta) estimate; ``fallback`` when fewer than 2 distinct rates."""
    return fuse_points(predicted, observed, fallback, weight)[0]


def predict_quality_for_target(params: RQParams, r_target: Rate) -> QualityLevel:
    """Quality level the logarithmic law assigns to a target rate, clamped to the valid range."""
    if params.kind is not ModelKind.LOGARITHMIC:
        raise ContractError("quality decisions use the logarithmic model")
    if not r_target > 0:
        raise DomainError(f"target rate must be positive, got {r_target}")
    return clamp_quality(params.alpha * math.log(r_target) + params.beta)


def lms_step(
    state: LmsState,
    r_target: Rate,
    encode: Callable[[QualityLevel], EncodeResult]
) -> Tuple[LmsState, EncodeResult]:
    """One adaptive-LMS iteration: decide quality, encode, update (alpha, beta).

    Args:
        state: Current parameters and step sizes.
        r_target: Target rate in bits.
        encode: Encodes the current frame at a quality level.

    Returns:
        Updated state and the encode result.
    """
    q_real = predict_quality_for_target(state.params, r_target)
    result = encode(q_real)
    log_real = math.log(result.rate)
    q_est = state.alpha * log_real + state.beta
    error = q_real - q_est
    if error == 0.0:
        return state, result
    updated = replace(
        state,
        alpha=state.alpha + state.mu * error * log_real,
        beta=state.beta + state.eta * error,
    )
    return updated, result


def initial_params(calibration: Sequence[SequenceTrace]) -> RQParams:
    """Mean of the first-frame (alpha, beta) over calibration traces.

    Raises:
        ContractError: If no calibration trace has a frame.
    """
    firsts = [trace.records[0] for trace in calibration if trace.records]
    if not firsts:
        raise ContractError("initial_params needs at least one non-empty calibration trace")
    alpha = math.fsum(r.alpha for r in firsts) / len(firsts)
    beta = math.fsum(r.beta for r in firsts) / len(firsts)
    return RQParams(alpha=alpha, beta=beta)


def calibration_traces(
    profiles: Sequence[SequenceProfile],
    grid: Optional[QualityGrid] = None,
    rng: Optional[np.random.Generator] = None
) -> List[SequenceTrace]:
    """Probe the first frame of every sequence at the grid levels and fit its law.

    Each returned trace holds one record: the fitted first-frame parameters and an encode
    at the grid midpoint.
    """
    grid = grid or QualityGrid()
    rng = rng if rng is not None else np.random.default_rng(0)
    traces: List[SequenceTrace] = []
    for profile in profiles:
        frame = profile.frames[0]
        probe = multi_pass_probe(frame, grid.levels, rng)
        params = fit_arrays(
            np.array([p.rate for p in probe]), np.array([p.quality for p in probe])
        )
        q = grid.midpoint
        result = encode_frame(frame, q, rng)
        r_target = math.exp((q - params.beta) / params.alpha)
        traces.append(SequenceTrace(
            sequence=profile.name,
            method="calibration",
            target=f"q{q:g}",
            r_s=r_target,
            pixels=frame.pixels,
            records=[FrameRecord(
                t=0,
                r_target=r_target,
                q_pred=q,
                r_enc=result.rate,
                psnr_db=result.psnr_db,
                alpha=params.alpha,
                beta=params.beta,
                deviation_pct=abs(r_target - result.rate) / r_target * 100.0,
                distortion=result.distortion,
            )],
        ))
    return traces


def calibrate_initial_params(
    profiles: Sequence[SequenceProfile],
    grid: Optional[QualityGrid] = None,
    rng: Optional[np.random.Generator] = None
) -> RQParams:
    """Initial (alpha, beta) from multi-pass probes of each sequence's first frame."""
    params = initial_params(calibration_traces(profiles, grid, rng))
    logger.debug(
        f"Calibrated initial params alpha={params.alpha:.4f} beta={params.beta:.4f} "
        f"from {len(profiles)} sequences"
    )
    return params
