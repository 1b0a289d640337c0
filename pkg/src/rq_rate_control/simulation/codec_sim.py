"""Deterministic simulated variable-rate codec.

Every frame follows a ground-truth logarithmic R-Q law Q = alpha * ln(R) + beta (with an
optional quadratic log-rate perturbation for model-mismatch runs). Encoding a frame at a
quality level returns the law's rate times log-normal encoder noise, and a distortion
from D = d0 * exp(-k * Q).
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import SIMULATION
from ..exceptions import ContractError, DomainError
from ..modeling.rq_model import Q_MAX, QualityLevel, RQParams, RQPoint

PEAK_SQUARED = 255.0 ** 2
Q_MID = Q_MAX / 2.0


class FrameProfile(BaseModel):
    """Ground-truth coding behavior of one frame."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    true_alpha: float = Field(12.0, gt=0, description="slope of Q over ln R")
    true_beta: float = Field(-100.0, description="offset of the logarithmic law")
    noise_sigma: float = Field(SIMULATION["noise_sigma"], ge=0, description="encode noise")
    d0: float = Field(SIMULATION["d0"], gt=0, description="distortion at Q = 0")
    decay_k: float = Field(SIMULATION["decay_k"], gt=0, description="distortion decay per level")
    pixels: int = Field(SIMULATION["pixels"], gt=0, description="pixels per frame")
    mismatch: float = Field(0.0, description="quadratic log-rate perturbation (stress runs)")

    @model_validator(mode="after")
    def _check_monotone(self) -> "FrameProfile":
        # d lnR / dQ = 1/alpha + 2 m (Q - Q_mid) / Q_mid^2 must stay positive on [0, Q_max]
        if 1.0 / self.true_alpha - 2.0 * abs(self.mismatch) / Q_MID <= 0:
            raise ValueError("mismatch too large: rate would not increase with quality")
        return self

    def log_rate(self, q: QualityLevel) -> float:
        """Noise-free natural-log rate at quality ``q``."""
        base = (q - self.true_beta) / self.true_alpha
        if self.mismatch:
            base += self.mismatch * ((q - Q_MID) / Q_MID) ** 2
        return base

    def true_rate(self, q: QualityLevel) -> float:
        """Noise-free rate in bits at quality ``q``."""
        return math.exp(self.log_rate(q))

    def distortion(self, q: QualityLevel) -> float:
        """Mean squared error at quality ``q``."""
        return self.d0 * math.exp(-self.decay_k * q)

    def complexity(self) -> float:
        """Content descriptor: true log-rate at the middle quality level."""
        return self.log_rate(Q_MID)

    def true_params(self) -> RQParams:
        """The logarithmic law without the mismatch term."""
        return RQParams(alpha=self.true_alpha, beta=self.true_beta)


class SequenceProfile(BaseModel):
    """A named synthetic test sequence."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "synthetic"
    gop_length: int = Field(SIMULATION["gop_length"], ge=1)
    frames: List[FrameProfile] = Field(..., min_length=1)

    @property
    def n_frames(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class EncodeResult:
    """Outcome of encoding one frame at one quality level."""

    rate: float
    distortion: float
    quality_used: QualityLevel
    psnr_db: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise DomainError(f"encoded rate must be positive, got {self.rate}")


def psnr_from_distortion(distortion: float) -> float:
    """PSNR in dB for 8-bit content."""
    return 10.0 * math.log10(PEAK_SQUARED / distortion)


def encode_frame(
    profile: FrameProfile,
    q: QualityLevel,
    rng: np.random.Generator
) -> EncodeResult:
    """Encode one frame at quality ``q``.

    rate = exp(log_rate(q) + sigma * z) with z ~ N(0, 1). One normal draw is consumed per
    call even when sigma is zero, so noise streams stay aligned across configurations.

    Raises:
        DomainError: If q is outside [0, q_num - 1].
    """
    if not 0.0 <= q <= Q_MAX:
        raise DomainError(f"quality {q} outside [0, {Q_MAX}]")

    z = rng.standard_normal()
    rate = math.exp(profile.log_rate(q) + profile.noise_sigma * z)
    distortion = profile.distortion(q)
    return EncodeResult(
        rate=rate,
        distortion=distortion,
        quality_used=q,
        psnr_db=psnr_from_distortion(distortion),
    )


def multi_pass_probe(
    profile: FrameProfile,
    levels: Sequence[QualityLevel],
    rng: np.random.Generator
) -> List[RQPoint]:
    """Pre-encode a frame once per quality level and return the observed points."""
    if not levels:
        raise ContractError("multi_pass_probe needs at least one level")
    return [RQPoint(rate=encode_frame(profile, q, rng).rate, quality=q) for q in levels]


def generate_sequence(
    seed: int,
    n_frames: int = SIMULATION["n_frames"],
    drift: float = 0.0,
    base: Optional[FrameProfile] = None,
    jitter: float = 0.0,
    rho: float = SIMULATION["ar_rho"],
    gop_length: int = SIMULATION["gop_length"],
    name: Optional[str] = None
) -> SequenceProfile:
    """Generate a drifting synthetic sequence.

    alpha_t = a + rho * (alpha_{t-1} - a) + drift * xi_t, likewise beta_t, starting from the
    base values at t = 0. ``jitter`` adds an i.i.d. N(0, jitter^2) quality offset to each
    frame's beta that does not feed back into the AR(1) state.

    Args:
        seed: Seed of the sequence's random stream.
        n_frames: Number of frames.
        drift: AR(1) innovation scale.
        base: Mean frame profile; the default FrameProfile when None.
        jitter: Per-frame quality jitter in quality levels.
        rho: AR(1) coefficient.
        gop_length: GOP length stored on the sequence.
        name: Sequence name; derived from the seed when None.

    Returns:
        The generated sequence.
    """
    if n_frames < 1:
        raise ContractError(f"n_frames must be >= 1, got {n_frames}")
    if drift < 0 or jitter < 0:
        raise ContractError("drift and jitter must be non-negative")

    base = base or FrameProfile()
    rng = np.random.default_rng(seed)
    # 三組獨立亂數：alpha 創新、beta 創新、逐幀抖動
    shocks = rng.standard_normal((n_frames, 3))

    alpha_mean, beta_mean = base.true_alpha, base.true_beta
    alpha_floor = 0.1 * alpha_mean
    alpha, beta = alpha_mean, beta_mean
    frames: List[FrameProfile] = []
    for t in range(n_frames):
        if t > 0:
            alpha = alpha_mean + rho * (alpha - alpha_mean) + drift * shocks[t, 0]
            alpha = max(alpha, alpha_floor)
            beta = beta_mean + rho * (beta - beta_mean) + drift * shocks[t, 1]
        frame_beta = beta + jitter * shocks[t, 2]
        frames.append(
            base.model_copy(update={"true_alpha": float(alpha), "true_beta": float(frame_beta)})
        )

    return SequenceProfile(
        name=name or f"seq_{seed}",
        gop_length=gop_length,
        frames=frames,
    )


def constant_quality_anchor(
    profile: SequenceProfile,
    q: QualityLevel,
    rng: np.random.Generator
) -> List[EncodeResult]:
    """Encode every frame of a sequence at one fixed quality level."""
    return [encode_frame(frame, q, rng) for frame in profile.frames]


def target_rate_for_anchor(profile: SequenceProfile, q: QualityLevel) -> float:
    """Noise-free mean bits per frame of the constant-quality anchor at ``q``."""
    return float(np.mean([frame.true_rate(q) for frame in profile.frames]))


# 預設基準測試內容類別 (alpha, beta)
BENCHMARK_BASES: Dict[str, FrameProfile] = {
    "low_motion": FrameProfile(true_alpha=9.0, true_beta=-70.0),
    "slow_pan": FrameProfile(true_alpha=11.0, true_beta=-90.0),
    "balanced": FrameProfile(true_alpha=12.0, true_beta=-100.0),
    "textured": FrameProfile(true_alpha=14.0, true_beta=-125.0),
    "high_motion": FrameProfile(true_alpha=16.0, true_beta=-150.0),
}


def save_sequence(profile: SequenceProfile, path: Union[str, Path]) -> Path:
    """Write a sequence profile as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(profile.model_dump_json(indent=2), encoding="utf-8")
    logger.debug(f"Saved sequence {profile.name} ({profile.n_frames} frames) to {path}")
    return path


def load_sequence(path: Union[str, Path]) -> SequenceProfile:
    """Read a sequence profile written by :func:`save_sequence`."""
    path = Path(path)
    try:
        return SequenceProfile.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except Exception as e:
        logger.error(f"Error loading sequence from {path}: {str(e)}")
        raise
