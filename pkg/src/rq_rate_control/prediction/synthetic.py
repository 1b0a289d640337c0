"""Oracle and synthetic noisy predictors driven by the simulator's ground truth."""

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import brentq
from scipy.stats import norm

from ..config import PREDICTOR
from ..exceptions import ContractError
from .base import BasePredictor, PredictorContext, QualityGrid


def _require_frame(ctx: PredictorContext) -> None:
    if ctx.frame is None:
        raise ContractError("oracle-family predictors need ctx.frame (simulator ground truth)")


class OraclePredictor(BasePredictor):
    """Returns the frame's true noise-free rates at the grid levels."""

    name = "oracle"

    def raw_rates(
        self,
        ctx: PredictorContext,
        grid: QualityGrid,
        rng: Optional[np.random.Generator] = None
    ) -> np.ndarray:
        _require_frame(ctx)
        return np.array([ctx.frame.true_rate(q) for q in grid.levels], dtype=np.float64)


def expected_abs_log_normal_error(s: float) -> float:
    """E|e^X - 1| for X ~ N(0, s^2)."""
    if s <= 0:
        return 0.0
    return math.exp(s * s / 2.0) * (2.0 * norm.cdf(s) - 1.0)


def expected_accuracy_pct(sigmas: Sequence[float], encode_sigma: float = 0.0) -> float:
    """Expected mean predictor accuracy (percent, normalized by the prediction).

    Each level's ratio r_enc / r_pred is log-normal with variance sigma_i^2 + encode_sigma^2.
    """
    errors = [
        expected_abs_log_normal_error(math.sqrt(s * s + encode_sigma * encode_sigma))
        for s in sigmas
    ]
    return 100.0 * float(np.mean(errors))


class SyntheticNoisyPredictor(OraclePredictor):
    """Oracle rates perturbed by per-level multiplicative log-normal noise.

    With all sigmas zero the output equals the oracle's exactly.
    """

    name = "synthetic"

    def __init__(self, sigmas: Sequence[float] = tuple(PREDICTOR["sigmas"])):
        """Initialize the predictor.

        Args:
            sigmas: Log-rate noise standard deviation per grid level.
        """
        if any(s < 0 for s in sigmas):
            raise ContractError("noise sigmas must be non-negative")
        self.sigmas: Tuple[float, ...] = tuple(float(s) for s in sigmas)

    @classmethod
    def calibrated(
        cls,
        target_pct: float = PREDICTOR["target_accuracy_pct"],
        shape: Sequence[float] = tuple(PREDICTOR["sigmas"]),
        encode_sigma: float = 0.0
    ) -> "SyntheticNoisyPredictor":
        """Scale a per-level noise profile so the expected accuracy equals ``target_pct``.

        Args:
            target_pct: Target mean accuracy in percent.
            shape: Relative per-level noise profile.
            encode_sigma: Encoder noise that also enters the measured accuracy.

        Returns:
            A predictor whose sigmas are ``k * shape``.
        """
        floor = expected_accuracy_pct([0.0] * len(shape), encode_sigma)
        if target_pct <= floor:
            raise ContractError(
                f"target accuracy {target_pct}% is below the encoder-noise floor {floor:.3f}%"
            )

        def gap(k: float) -> float:
            return expected_accuracy_pct([k * s for s in shape], encode_sigma) - target_pct

        scale = brentq(gap, 0.0, 50.0, xtol=1e-12)
        logger.debug(f"Calibrated predictor noise scale {scale:.4f} for {target_pct}%")
        return cls(sigmas=[scale * s for s in shape])

    def raw_rates(
        self,
        ctx: PredictorContext,
        grid: QualityGrid,
        rng: Optional[np.random.Generator] = None
    ) -> np.ndarray:
        if rng is None:
            raise ContractError("SyntheticNoisyPredictor needs a random generator")
        if len(self.sigmas) != len(grid.levels):
            raise ContractError("one sigma per grid level is required")
        rates = super().raw_rates(ctx, grid)
        z = rng.standard_normal(len(grid.levels))
        return rates * np.exp(np.asarray(self.sigmas) * z)
