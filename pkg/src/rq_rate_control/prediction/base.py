"""Base types for R-Q prior predictors."""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from sklearn.isotonic import IsotonicRegression

from ..config import PREDICTOR
from ..exceptions import ContractError, DomainError
from ..modeling.rq_model import Q_MAX, QualityLevel, Rate, RQPoint
from ..simulation.codec_sim import FrameProfile

# 嚴格遞增修正的相對間距
STRICT_STEP = 1e-6


def check_grid_levels(levels: Tuple[float, ...]) -> Tuple[float, ...]:
    """Raise ValueError unless ``levels`` are strictly increasing within [0, Q_MAX]."""
    if any(not 0.0 <= q <= Q_MAX for q in levels):
        raise ValueError(f"grid levels must lie in [0, {Q_MAX}]")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("grid levels must be strictly increasing")
    return levels


class QualityGrid(BaseModel):
    """The predefined quality levels a predictor emits rates for."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    levels: Tuple[float, float, float, float] = Field(
        default=tuple(PREDICTOR["grid"]),
        description="four strictly increasing quality levels",
    )

    @field_validator("levels")
    @classmethod
    def _check_levels(cls, levels: Tuple[float, ...]) -> Tuple[float, ...]:
        return check_grid_levels(levels)

    @property
    def midpoint(self) -> QualityLevel:
        """Middle of the two inner levels; the prior quality for a sequence's first frame."""
        return (self.levels[1] + self.levels[2]) / 2.0


@dataclass(frozen=True)
class PredictorContext:
    """Coding context of the frame about to be encoded.

    ``frame`` carries the simulator's ground truth and is only read by oracle-family
    predictors; learned predictors never look at it.
    """

    prev_rate: Rate
    prev_distortion: float
    prev_quality: QualityLevel
    content_scalar: float
    frame: Optional[FrameProfile] = None

    def __post_init__(self) -> None:
        if not self.prev_rate > 0:
            raise DomainError(f"prev_rate must be positive, got {self.prev_rate}")
        if self.prev_distortion < 0:
            raise DomainError(f"prev_distortion must be non-negative, got {self.prev_distortion}")


@dataclass(frozen=True)
class PredictedPoints:
    """Prior (R, Q) points at the grid levels, rates strictly increasing.

    ``repaired`` marks predictions whose raw rates were invalid or not increasing.
    """

    points: Tuple[RQPoint, ...]
    repaired: bool = False

    def __post_init__(self) -> None:
        if not self.points:
            raise ContractError("predicted points must not be empty")
        rates = [p.rate for p in self.points]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ContractError("predicted rates must increase strictly with quality")

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points], dtype=np.float64)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.points)


def enforce_monotone(levels: Sequence[float], rates: np.ndarray) -> np.ndarray:
    """Repair raw predicted rates so they increase strictly with quality.

    Rates that already increase are returned unchanged. Otherwise an isotonic fit
    in the log-rate domain pools the violating runs; rates outside a pooled run keep
    their raw value and ties are separated by a tiny relative step.
    """
    rates = np.asarray(rates, dtype=np.float64)
    if np.all(np.diff(rates) > 0):
        return rates

    log_rates = np.log(rates)
    iso = IsotonicRegression(increasing=True)
    fitted = iso.fit_transform(np.asarray(levels, dtype=np.float64), log_rates)
    pooled = ~np.isclose(fitted, log_rates, rtol=0.0, atol=1e-12)
    repaired = np.where(pooled, np.exp(fitted), rates)
    for i in range(1, repaired.size):
        if repaired[i] <= repaired[i - 1]:
            repaired[i] = repaired[i - 1] * (1.0 + STRICT_STEP)
    return repaired


def mae_loss(predicted: Sequence[float], observed: Sequence[float]) -> float:
    """Mean absolute rate deviation in bits between predicted and encoded rates.

    Raises:
        ContractError: On length mismatch or empty input.
        DomainError: On a non-positive rate.
    """
    if len(predicted) != len(observed) or not predicted:
        raise ContractError(
            f"need equal non-empty rate lists, got {len(predicted)} and {len(observed)}"
        )
    pred = np.asarray(predicted, dtype=np.float64)
    obs = np.asarray(observed, dtype=np.float64)
    if np.any(pred <= 0) or np.any(obs <= 0):
        raise DomainError("rates must be positive")
    return float(np.mean(np.abs(obs - pred)))


class BasePredictor(ABC):
    """R-Q prior predictor contract.

    Implementations emit one rate per grid level for the frame described by the
    context. Predictors hold no mutable state; any randomness comes from the generator
    passed by the caller.
    """

    name: str = "base"

    @abstractmethod
    def raw_rates(
        self,
        ctx: PredictorContext,
        grid: QualityGrid,
        rng: Optional[np.random.Generator] = None
    ) -> np.ndarray:
        """Unrepaired predicted rates, one per grid level."""
        pass

    def predict(
        self,
        ctx: PredictorContext,
        grid: QualityGrid,
        rng: Optional[np.random.Generator] = None
    ) -> PredictedPoints:
        """Predict four (R, Q) prior points at the grid levels.

        Args:
            ctx: Coding context of the current frame.
            grid: Quality levels to predict at.
            rng: Random generator for stochastic predictors.

        Returns:
            Points with strictly increasing rates.
        """
        raw = np.asarray(self.raw_rates(ctx, grid, rng), dtype=np.float64)
        valid = np.isfinite(raw) & (raw > 0)
        rates = np.where(valid, raw, math.ulp(1.0))
        repaired = not (np.all(valid) and np.all(np.diff(rates) > 0))
        rates = enforce_monotone(grid.levels, rates)
        return PredictedPoints(
            points=tuple(
                RQPoint(rate=float(r), quality=q) for r, q in zip(rates, grid.levels, strict=True)
            ),
            repaired=repaired,
        )
