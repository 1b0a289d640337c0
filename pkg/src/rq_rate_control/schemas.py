"""Experiment configuration schema."""

import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .config import EXPERIMENT, PREDICTOR, RATE_CONTROL, SIMULATION
from .control.budget import RateControlConfig, check_minigop_weights
from .estimation.estimator import EstimatorVariant
from .exceptions import ConfigError
from .prediction.base import QualityGrid, check_grid_levels
from .simulation.codec_sim import BENCHMARK_BASES, FrameProfile


class SyntheticSequenceSpec(BaseModel):
    """A sequence generated per seed from a mean frame profile."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_\-]+$")
    content: Optional[str] = Field(None, description="benchmark content class")
    true_alpha: Optional[float] = Field(None, gt=0)
    true_beta: Optional[float] = None
    n_frames: int = Field(SIMULATION["n_frames"], ge=1)
    drift: float = Field(0.0, ge=0)
    jitter: float = Field(0.0, ge=0)
    rho: float = Field(SIMULATION["ar_rho"], ge=0, lt=1)
    noise_sigma: float = Field(SIMULATION["noise_sigma"], ge=0)
    mismatch: float = 0.0
    gop_length: int = Field(SIMULATION["gop_length"], ge=1)

    @field_validator("content")
    @classmethod
    def _check_content(cls, content: Optional[str]) -> Optional[str]:
        if content is not None and content not in BENCHMARK_BASES:
            raise ValueError(f"unknown content class {content!r}; known: {sorted(BENCHMARK_BASES)}")
        return content

    def base_profile(self) -> FrameProfile:
        """Mean frame profile of the sequence."""
        base = BENCHMARK_BASES[self.content] if self.content else FrameProfile()
        update = {"noise_sigma": self.noise_sigma, "mismatch": self.mismatch}
        if self.true_alpha is not None:
            update["true_alpha"] = self.true_alpha
        if self.true_beta is not None:
            update["true_beta"] = self.true_beta
        # 經由驗證重建，確保 mismatch 合法
        return FrameProfile.model_validate({**base.model_dump(), **update})


class SequenceFileRef(BaseModel):
    """A sequence profile stored as JSON; identical for every seed."""

    model_config = ConfigDict(extra="forbid")

    path: str


class RateControlSettings(BaseModel):
    """Controller settings shared by every method."""

    model_config = ConfigDict(extra="forbid")

    sliding_window: int = Field(RATE_CONTROL["sliding_window"], gt=0)
    minigop_len: int = Field(RATE_CONTROL["minigop_len"], gt=0)
    weights: List[float] = Field(default_factory=lambda: list(RATE_CONTROL["weights"]))
    observation_weight: float = Field(RATE_CONTROL["observation_weight"], gt=0)
    min_bits: float = Field(RATE_CONTROL["min_bits"], gt=0)

    @model_validator(mode="after")
    def _check_weights(self) -> "RateControlSettings":
        check_minigop_weights(self.weights, self.minigop_len)
        return self

    def to_config(
        self,
        variant: EstimatorVariant,
        grid: QualityGrid,
        gop_length: int
    ) -> RateControlConfig:
        return RateControlConfig(
            variant=variant,
            grid=grid,
            gop_length=gop_length,
            **self.model_dump(),
        )


class PredictorSettings(BaseModel):
    """Prior predictor used by the fusion and predictor-only methods."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["synthetic", "oracle", "regressor"] = "synthetic"
    grid: Tuple[float, float, float, float] = tuple(PREDICTOR["grid"])
    sigmas: List[float] = Field(default_factory=lambda: list(PREDICTOR["sigmas"]))
    calibrate_to_pct: Optional[float] = Field(PREDICTOR["target_accuracy_pct"], gt=0)
    training_sequences: int = Field(8, ge=1)
    regressor_path: Optional[str] = None

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, grid: Tuple[float, ...]) -> Tuple[float, ...]:
        return check_grid_levels(grid)

    @property
    def quality_grid(self) -> QualityGrid:
        return QualityGrid(levels=self.grid)


class ExperimentConfig(BaseModel):
    """One experiment: sequences x methods x targets x seeds."""

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1]
    sequences: List[Union[SyntheticSequenceSpec, SequenceFileRef]] = Field(..., min_length=1)
    methods: List[EstimatorVariant] = Field(..., min_length=1)
    anchor_levels: List[float] = Field(
        default_factory=lambda: list(EXPERIMENT["anchor_levels"]), min_length=1
    )
    target_bits: Optional[List[float]] = Field(None, min_length=1)
    seeds: List[int] = Field(..., min_length=1)
    protocol: Literal["closed_loop", "one_step"] = "closed_loop"
    one_step_q_range: Tuple[float, float] = tuple(RATE_CONTROL["one_step_q_range"])
    rate_control: RateControlSettings = Field(default_factory=RateControlSettings)
    predictor: PredictorSettings = Field(default_factory=PredictorSettings)
    output_dir: Optional[str] = None

    @field_validator("target_bits")
    @classmethod
    def _check_targets(cls, target_bits: Optional[List[float]]) -> Optional[List[float]]:
        if target_bits is not None and any(not r > 0 for r in target_bits):
            raise ValueError("target bits must be positive")
        return target_bits

    @field_validator("anchor_levels")
    @classmethod
    def _check_levels(cls, levels: List[float]) -> List[float]:
        q_max = SIMULATION["q_num"] - 1
        if any(not 0 <= q <= q_max for q in levels):
            raise ValueError(f"anchor levels must lie in [0, {q_max}]")
        return levels


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate an experiment configuration file.

    Raises:
        ConfigError: Unreadable file, malformed JSON or schema violation. ``field`` names
            the first offending field.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}") from e

    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first["msg"], field=_field_path(first)) from e
