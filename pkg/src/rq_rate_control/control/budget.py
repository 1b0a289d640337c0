"""Sliding-window miniGOP and frame bit allocation."""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import RATE_CONTROL, SIMULATION
from ..estimation.estimator import EstimatorVariant
from ..exceptions import ContractError, DomainError
from ..prediction.base import QualityGrid


def check_minigop_weights(weights: Sequence[float], minigop_len: int) -> None:
    """Raise ValueError unless there is one positive weight per miniGOP frame."""
    if len(weights) != minigop_len:
        raise ValueError(f"weights must have minigop_len={minigop_len} entries, got {len(weights)}")
    if any(not w > 0 for w in weights):
        raise ValueError("weights must be positive")


class RateControlConfig(BaseModel):
    """Controller settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sliding_window: int = Field(RATE_CONTROL["sliding_window"], gt=0)
    minigop_len: int = Field(RATE_CONTROL["minigop_len"], gt=0)
    weights: List[float] = Field(default_factory=lambda: list(RATE_CONTROL["weights"]))
    gop_length: int = Field(SIMULATION["gop_length"], gt=0)
    variant: EstimatorVariant = EstimatorVariant.FUSION
    grid: QualityGrid = Field(default_factory=QualityGrid)
    observation_weight: float = Field(RATE_CONTROL["observation_weight"], gt=0)
    min_bits: float = Field(RATE_CONTROL["min_bits"], gt=0)

    @model_validator(mode="after")
    def _check_weights(self) -> "RateControlConfig":
        check_minigop_weights(self.weights, self.minigop_len)
        return self


@dataclass(frozen=True)
class BudgetState:
    """Sequence and miniGOP bit accounting."""

    n_coded: int = 0
    consumed_bits: float = 0.0
    minigop_budget: float = 0.0
    minigop_consumed: float = 0.0
    minigop_pos: int = 0

    def __post_init__(self) -> None:
        if self.n_coded < 0 or self.consumed_bits < 0 or self.minigop_consumed < 0:
            raise ContractError("budget counters must be non-negative")
        if self.minigop_pos < 0:
            raise ContractError("minigop_pos must be non-negative")


def allocate_minigop(
    r_s: float,
    state: BudgetState,
    cfg: RateControlConfig,
    n_frames: Optional[int] = None
) -> float:
    """Budget of the next miniGOP from the sliding-window sequence balance.

    R_mg = (R_s * (N_coded + SW) - S) / SW * N, floored at ``cfg.min_bits``.

    Args:
        r_s: Target bits per frame.
        state: Current accounting.
        cfg: Controller settings.
        n_frames: Frames in this miniGOP; ``cfg.minigop_len`` unless the sequence ends early.
    """
    if not r_s > 0:
        raise DomainError(f"target rate must be positive, got {r_s}")
    n = cfg.minigop_len if n_frames is None else n_frames
    sw = cfg.sliding_window
    r_mg = (r_s * (state.n_coded + sw) - state.consumed_bits) / sw * n
    return max(r_mg, cfg.min_bits)


def allocate_frame(
    r_mg: float,
    state: BudgetState,
    cfg: RateControlConfig,
    weights: Optional[Sequence[float]] = None
) -> float:
    """Share of the remaining miniGOP budget for the frame at ``state.minigop_pos``.

    R_t = (R_mg - consumed) * w_pos / sum(w[pos:]), floored at ``cfg.min_bits``. The last
    frame of a miniGOP receives exactly the remaining budget.

    Args:
        r_mg: miniGOP budget.
        state: Current accounting.
        cfg: Controller settings.
        weights: Weights of this miniGOP; ``cfg.weights`` unless truncated.
    """
    weights = list(cfg.weights if weights is None else weights)
    pos = state.minigop_pos
    if pos >= len(weights):
        raise ContractError(f"minigop_pos {pos} outside miniGOP of {len(weights)} frames")
    remaining = r_mg - state.minigop_consumed
    r_t = remaining * (weights[pos] / sum(weights[pos:]))
    return max(r_t, cfg.min_bits)


def start_minigop(state: BudgetState, r_mg: float) -> BudgetState:
    return replace(state, minigop_budget=r_mg, minigop_consumed=0.0, minigop_pos=0)


def record_frame(state: BudgetState, r_enc: float) -> BudgetState:
    """Account one encoded frame."""
    return replace(
        state,
        n_coded=state.n_coded + 1,
        consumed_bits=state.consumed_bits + r_enc,
        minigop_consumed=state.minigop_consumed + r_enc,
        minigop_pos=state.minigop_pos + 1,
    )
