"""Parametric rate-quality (R-Q) models.

Three model families map a frame's bitrate R (bits per frame) to the codec's quality
level Q:

    Linear        Q = alpha * R + beta
    Exponential   Q = alpha * exp(beta * R)
    Logarithmic   Q = alpha * ln(R) + beta

Fits use closed-form normal equations in each family's fitting domain. The module also
holds the log-linear mapping between quality levels and Lagrange multipliers.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import SIMULATION
from ..exceptions import ContractError, DegenerateFitError, DomainError, UndefinedScoreError

# bits per frame
Rate = float
QualityLevel = float

Q_NUM: int = SIMULATION["q_num"]
Q_MAX: float = float(Q_NUM - 1)


class ModelKind(str, Enum):
    """R-Q model families."""

    LINEAR = "linear"
    EXPONENTIAL = "exponential"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class RQPoint:
    """One observed or predicted (rate, quality) pair."""

    rate: Rate
    quality: QualityLevel

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise DomainError(f"rate must be positive and finite, got {self.rate}")
        if not (math.isfinite(self.quality) and 0.0 <= self.quality <= Q_MAX):
            raise DomainError(f"quality must lie in [0, {Q_MAX}], got {self.quality}")


@dataclass(frozen=True)
class RQParams:
    """Fitted (alpha, beta) of one model family."""

    alpha: float
    beta: float
    kind: ModelKind = ModelKind.LOGARITHMIC

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise DomainError(f"parameters must be finite, got ({self.alpha}, {self.beta})")
        if self.kind is ModelKind.LOGARITHMIC and self.alpha == 0.0:
            raise DomainError("logarithmic model requires alpha != 0")


@dataclass(frozen=True)
class LambdaMap:
    """Log-linear quality level to Lagrange multiplier mapping."""

    lambda_min: float = SIMULATION["lambda_min"]
    lambda_max: float = SIMULATION["lambda_max"]
    q_num: int = Q_NUM
    _log_ratio: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 < self.lambda_min < self.lambda_max:
            raise DomainError(
                f"need 0 < lambda_min < lambda_max, got ({self.lambda_min}, {self.lambda_max})"
            )
        if self.q_num < 2:
            raise DomainError(f"q_num must be >= 2, got {self.q_num}")
        object.__setattr__(self, "_log_ratio", math.log(self.lambda_max / self.lambda_min))


def clamp_quality(q: float, q_max: float = Q_MAX) -> QualityLevel:
    """Clamp a raw model output into the valid quality range."""
    return min(max(q, 0.0), q_max)


def eval_quality(params: RQParams, rate: Rate) -> float:
    """Evaluate the R-Q law at one rate.

    The result is not clamped; callers that need a codec-valid level clamp it.

    Raises:
        DomainError: If the rate is not positive or the exponential overflows.
    """
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate}")

    if params.kind is ModelKind.LINEAR:
        return params.alpha * rate + params.beta
    if params.kind is ModelKind.EXPONENTIAL:
        try:
            return params.alpha * math.exp(params.beta * rate)
        except OverflowError as e:
            raise DomainError(f"exponential model overflows at rate {rate}") from e
    return params.alpha * math.log(rate) + params.beta


def eval_quality_many(params: RQParams, rates: np.ndarray) -> np.ndarray:
    """Vectorized ``eval_quality`` over an array of positive rates."""
    rates = np.asarray(rates, dtype=np.float64)
    if rates.size and not np.all(rates > 0):
        raise DomainError("all rates must be positive")

    if params.kind is ModelKind.LINEAR:
        return params.alpha * rates + params.beta
    if params.kind is ModelKind.EXPONENTIAL:
        with np.errstate(over="raise"):
            try:
                return params.alpha * np.exp(params.beta * rates)
            except FloatingPointError as e:
                raise DomainError("exponential model overflows") from e
    return params.alpha * np.log(rates) + params.beta


def invert_rate(params: RQParams, quality: QualityLevel) -> Rate:
    """Return the rate at which the model reaches ``quality``.

    Raises:
        DomainError: If the parameters cannot be inverted at this quality or the
            inverse rate is not positive.
    """
    if params.kind is ModelKind.LOGARITHMIC:
        try:
            rate = math.exp((quality - params.beta) / params.alpha)
        except OverflowError as e:
            raise DomainError(f"inverse rate overflows at quality {quality}") from e
    elif params.kind is ModelKind.LINEAR:
        if params.alpha == 0.0:
            raise DomainError("linear model with alpha == 0 is not invertible")
        rate = (quality - params.beta) / params.alpha
    else:
        if params.beta == 0.0:
            raise DomainError("exponential model with beta == 0 is not invertible")
        ratio = quality / params.alpha if params.alpha != 0.0 else 0.0
        if not ratio > 0:
            raise DomainError("exponential inversion needs alpha and quality of the same sign")
        rate = math.log(ratio) / params.beta

    if not (rate > 0 and math.isfinite(rate)):
        raise DomainError(f"no positive rate reaches quality {quality} under {params}")
    return rate


def _normal_equations(
    x: np.ndarray,
    y: np.ndarray,
    weights: Optional[np.ndarray] = None
) -> Tuple[float, float]:
    """Solve the 2x2 least-squares system for y = slope * x + intercept."""
    if weights is None:
        x_mean = float(np.mean(x))
        y_mean = float(np.mean(y))
        dx = x - x_mean
        sxx = float(np.dot(dx, dx))
        sxy = float(np.dot(dx, y - y_mean))
    else:
        w_sum = float(np.sum(weights))
        x_mean = float(np.dot(weights, x)) / w_sum
        y_mean = float(np.dot(weights, y)) / w_sum
        dx = x - x_mean
        sxx = float(np.dot(weights * dx, dx))
        sxy = float(np.dot(weights * dx, y - y_mean))

    if sxx <= 0.0:
        raise DegenerateFitError("regressor has zero variance")
    slope = sxy / sxx
    return slope, y_mean - slope * x_mean


def fit_arrays(
    rates: np.ndarray,
    qualities: np.ndarray,
    kind: ModelKind = ModelKind.LOGARITHMIC,
    weights: Optional[np.ndarray] = None
) -> RQParams:
    """Array form of :func:`fit_least_squares` used on the control-loop hot path."""
    rates = np.asarray(rates, dtype=np.float64)
    qualities = np.asarray(qualities, dtype=np.float64)
    if rates.shape != qualities.shape:
        raise ContractError("rates and qualities must have the same length")
    if np.unique(rates).size < 2:
        raise DegenerateFitError(f"need at least 2 distinct rates, got {np.unique(rates).size}")

    if kind is ModelKind.LINEAR:
        slope, intercept = _normal_equations(rates, qualities, weights)
        return RQParams(alpha=slope, beta=intercept, kind=kind)

    if kind is ModelKind.LOGARITHMIC:
        slope, intercept = _normal_equations(np.log(rates), qualities, weights)
        if slope == 0.0 or not math.isfinite(slope):
            raise DegenerateFitError("logarithmic fit produced a zero slope")
        return RQParams(alpha=slope, beta=intercept, kind=kind)

    # 指數模型：ln Q = ln(alpha) + beta * R
    if np.any(qualities <= 0):
        raise DomainError("exponential fit requires all qualities > 0")
    slope, intercept = _normal_equations(rates, np.log(qualities), weights)
    return RQParams(alpha=math.exp(intercept), beta=slope, kind=kind)


def fit_least_squares(
    points: Sequence[RQPoint],
    kind: ModelKind = ModelKind.LOGARITHMIC,
    weights: Optional[Sequence[float]] = None
) -> RQParams:
    """Fit one model family to (R, Q) points by least squares.

    Linear and logarithmic fits regress Q on R and on ln R. The exponential fit is
    linearized as ln Q = ln alpha + beta * R.

    Args:
        points: Observed or predicted points.
        kind: Model family.
        weights: Optional per-point weights; uniform when None.

    Returns:
        Fitted parameters.

    Raises:
        DegenerateFitError: Fewer than two distinct rates.
        DomainError: Exponential fit with a non-positive quality.
    """
    rates = np.fromiter((p.rate for p in points), dtype=np.float64, count=len(points))
    qualities = np.fromiter((p.quality for p in points), dtype=np.float64, count=len(points))
    w = None if weights is None else np.asarray(weights, dtype=np.float64)
    return fit_arrays(rates, qualities, kind, w)


def sum_squared_residuals(points: Sequence[RQPoint], params: RQParams) -> float:
    """Sum of squared quality residuals of ``params`` over ``points``."""
    rates = np.array([p.rate for p in points], dtype=np.float64)
    qualities = np.array([p.quality for p in points], dtype=np.float64)
    residuals = qualities - eval_quality_many(params, rates)
    return float(np.dot(residuals, residuals))


def r_squared(points: Sequence[RQPoint], params: RQParams) -> float:
    """Coefficient of determination of ``params`` on ``points`` in the quality domain.

    Raises:
        ContractError: Fewer than two points.
        UndefinedScoreError: All qualities are equal.
    """
    if len(points) < 2:
        raise ContractError("r_squared needs at least 2 points")

    rates = np.array([p.rate for p in points], dtype=np.float64)
    qualities = np.array([p.quality for p in points], dtype=np.float64)
    centered = qualities - np.mean(qualities)
    ss_tot = float(np.dot(centered, centered))
    if ss_tot == 0.0:
        raise UndefinedScoreError("quality variance is zero")

    residuals = qualities - eval_quality_many(params, rates)
    ss_res = float(np.dot(residuals, residuals))
    return 1.0 - ss_res / ss_tot


def fit_all_kinds(points: Sequence[RQPoint]) -> Dict[ModelKind, Tuple[RQParams, float]]:
    """Fit every model family and score it.

    Families that cannot be fitted (e.g. exponential with a zero quality) are left out.

    Returns:
        Mapping of kind to (params, R^2).
    """
    results: Dict[ModelKind, Tuple[RQParams, float]] = {}
    for kind in ModelKind:
        try:
            params = fit_least_squares(points, kind)
            results[kind] = (params, r_squared(points, params))
        except (DomainError, DegenerateFitError):
            continue
    return results


def select_best_model(points: Sequence[RQPoint]) -> ModelKind:
    """Return the model family with the highest R^2 on ``points``."""
    scores = fit_all_kinds(points)
    if not scores:
        raise DegenerateFitError("no model family could be fitted")
    return max(scores, key=lambda kind: scores[kind][1])


def lambda_from_quality(lambda_map: LambdaMap, q: QualityLevel) -> float:
    """Map a quality level to its Lagrange multiplier.

    lambda = exp(ln lambda_min + q / (q_num - 1) * (ln lambda_max - ln lambda_min))

    Raises:
        DomainError: If q is outside [0, q_num - 1].
    """
    q_top = lambda_map.q_num - 1
    if not 0.0 <= q <= q_top:
        raise DomainError(f"quality {q} outside [0, {q_top}]")
    return lambda_map.lambda_min * math.exp(q / q_top * lambda_map._log_ratio)
