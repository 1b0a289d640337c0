"""Linear-feature rate regressor trained on the mean absolute rate error in bits."""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from ..config import PREDICTOR
from ..exceptions import ContractError, TrainingError
from ..simulation.codec_sim import SequenceProfile, encode_frame, multi_pass_probe
from .base import BasePredictor, PredictorContext, QualityGrid, mae_loss

FEATURE_NAMES: Tuple[str, ...] = ("ln_prev_rate", "prev_quality", "content_scalar", "bias")
MIN_TRAINING_RECORDS = 8
POLISH_STEPS: Tuple[float, ...] = (0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)
MAX_POLISH_SWEEPS = 2000

# (context, observed rates at the grid levels)
TrainingRecord = Tuple[PredictorContext, Sequence[float]]


def features(ctx: PredictorContext) -> np.ndarray:
    """Feature vector of one context, ordered as FEATURE_NAMES."""
    return np.array(
        [math.log(ctx.prev_rate), ctx.prev_quality, ctx.content_scalar, 1.0],
        dtype=np.float64,
    )


class RegressorDocument(BaseModel):
    """JSON document of a trained regressor."""

    model_config = ConfigDict(extra="forbid")

    schema_version: int = 1
    feature_names: List[str] = Field(default_factory=lambda: list(FEATURE_NAMES))
    grid: List[float]
    coefficients: List[List[float]] = Field(..., description="one row per grid level")


class LinearRateRegressor(BasePredictor):
    """Predicts ln-rate per grid level as a linear function of the context features."""

    name = "regressor"

    def __init__(self, coefficients: np.ndarray, grid: QualityGrid):
        coefficients = np.asarray(coefficients, dtype=np.float64)
        if coefficients.shape != (len(grid.levels), len(FEATURE_NAMES)):
            raise ContractError(
                f"coefficients must have shape ({len(grid.levels)}, {len(FEATURE_NAMES)}), "
                f"got {coefficients.shape}"
            )
        self.coefficients = coefficients
        self.grid = grid

    def raw_rates(
        self,
        ctx: PredictorContext,
        grid: QualityGrid,
        rng: Optional[np.random.Generator] = None
    ) -> np.ndarray:
        if grid.levels != self.grid.levels:
            raise ContractError(f"regressor trained on grid {self.grid.levels}, got {grid.levels}")
        with np.errstate(over="ignore"):
            return np.exp(self.coefficients @ features(ctx))

    def to_document(self) -> RegressorDocument:
        return RegressorDocument(
            grid=list(self.grid.levels),
            coefficients=self.coefficients.tolist(),
        )

    def save(self, path: Union[str, Path]) -> Path:
        """Write the regressor as a JSON document."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_document().model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Saved regressor to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "LinearRateRegressor":
        """Read a regressor written by :meth:`save`."""
        path = Path(path)
        try:
            doc = RegressorDocument.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except Exception as e:
            logger.error(f"Error loading regressor from {path}: {str(e)}")
            raise
        if tuple(doc.feature_names) != FEATURE_NAMES:
            raise ContractError(f"unsupported feature set {doc.feature_names}")
        return cls(np.array(doc.coefficients), QualityGrid(levels=tuple(doc.grid)))


def feature_matrix(records: Sequence[TrainingRecord]) -> np.ndarray:
    """Stack the feature vectors of ``records`` row by row."""
    return np.vstack([features(ctx) for ctx, _ in records])


def bits_mae(x: np.ndarray, rates: np.ndarray, w: np.ndarray) -> float:
    """Mean absolute error in bits of the log-linear rate model ``exp(x . w)``.

    Args:
        x: Feature matrix, one row per record.
        rates: Observed rates at one grid level.
        w: Coefficients of that level.

    Returns:
        The loss; ``inf`` when the model overflows.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        predicted = np.exp((x * w).sum(axis=1))
        loss = float(np.mean(np.abs(rates - predicted)))
    return loss if math.isfinite(loss) else math.inf


def _lad_irls(
    x: np.ndarray,
    y: np.ndarray,
    max_iter: int,
    tol: float,
    smoothing: float
) -> np.ndarray:
    """Least absolute deviation fit of y on x by iteratively reweighted least squares.

    Weights are 1 / sqrt(r^2 + smoothing). Iteration stops when the loss improves by less
    than ``tol`` or after ``max_iter`` rounds. The best iterate by true L1 loss is
    returned, compared against the all-zero coefficient vector as well.
    """
    def loss(w: np.ndarray) -> float:
        return float(np.mean(np.abs(y - x @ w)))

    best = np.zeros(x.shape[1])
    best_loss = loss(best)

    w = np.linalg.lstsq(x, y, rcond=None)[0]
    current = loss(w)
    for _ in range(max_iter):
        if current < best_loss:
            best, best_loss = w, current
        residuals = y - x @ w
        sqrt_weights = (residuals * residuals + smoothing) ** -0.25
        w = np.linalg.lstsq(x * sqrt_weights[:, None], y * sqrt_weights, rcond=None)[0]
        updated = loss(w)
        improvement = current - updated
        current = updated
        if improvement < tol:
            break
    if current < best_loss:
        best, best_loss = w, current
    return best


def _smoothed_bits_fit(x: np.ndarray, rates: np.ndarray, seed: np.ndarray) -> np.ndarray:
    """L-BFGS-B on a smoothed bits L1 loss, started from ``seed``."""
    scale = float(np.mean(rates))
    eps2 = (1e-3 * float(np.median(rates))) ** 2

    def objective(w: np.ndarray) -> Tuple[float, np.ndarray]:
        with np.errstate(over="ignore", invalid="ignore"):
            predicted = np.exp(np.clip(x @ w, -700.0, 700.0))
            residuals = rates - predicted
            root = np.sqrt(residuals * residuals + eps2)
            grad = -((residuals / root) * predicted) @ x / (len(rates) * scale)
        return float(np.mean(root)) / scale, grad

    result = minimize(objective, seed, jac=True, method="L-BFGS-B",
                      options={"maxiter": PREDICTOR["lbfgs_max_iter"]})
    return np.asarray(result.x, dtype=np.float64)


def _compass_polish(x: np.ndarray, rates: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Coordinate pattern search on the exact bits MAE.

    Stops once no single-coordinate move of any size in POLISH_STEPS lowers the loss.
    """
    w = w.copy()
    current = bits_mae(x, rates, w)
    for _ in range(MAX_POLISH_SWEEPS):
        moved = False
        for h in POLISH_STEPS:
            improved = True
            while improved:
                improved = False
                for j in range(len(w)):
                    for sign in (1.0, -1.0):
                        trial = w.copy()
                        trial[j] += sign * h
                        loss = bits_mae(x, rates, trial)
                        if loss < current:
                            w, current = trial, loss
                            improved = moved = True
        if not moved:
            return w
    logger.warning(f"Coordinate polish stopped after {MAX_POLISH_SWEEPS} sweeps")
    return w


def fit_level(
    x: np.ndarray,
    rates: np.ndarray,
    max_iter: int = PREDICTOR["irls_max_iter"],
    tol: float = PREDICTOR["irls_tol"],
    smoothing: float = PREDICTOR["irls_smoothing"]
) -> np.ndarray:
    """Coefficients of one grid level minimizing the bits MAE of ``exp(x . w)``.

    The log-domain LAD solution seeds a smoothed L-BFGS-B descent, which a coordinate
    polish on the exact loss finishes. The all-zero vector competes as well.
    """
    candidates = [np.zeros(x.shape[1]), _lad_irls(x, np.log(rates), max_iter, tol, smoothing)]
    candidates.append(_smoothed_bits_fit(x, rates, candidates[1]))
    best = min(candidates, key=lambda w: bits_mae(x, rates, w))
    return _compass_polish(x, rates, best)


def train_regressor(
    records: Sequence[TrainingRecord],
    grid: Optional[QualityGrid] = None,
    max_iter: int = PREDICTOR["irls_max_iter"],
    tol: float = PREDICTOR["irls_tol"],
    smoothing: float = PREDICTOR["irls_smoothing"]
) -> LinearRateRegressor:
    """Fit one log-linear rate model per grid level on the mean absolute error in bits.

    Args:
        records: Training contexts with their observed grid-level rates.
        grid: Quality grid the observed rates belong to.
        max_iter: IRLS iteration cap of the log-domain seed fit.
        tol: Minimum loss improvement to keep iterating.
        smoothing: Smoothing of the absolute value in the IRLS weights.

    Returns:
        The trained regressor.

    Raises:
        TrainingError: With fewer than 8 records or malformed observations.
    """
    grid = grid or QualityGrid()
    if len(records) < MIN_TRAINING_RECORDS:
        raise TrainingError(
            f"need at least {MIN_TRAINING_RECORDS} training records, got {len(records)}"
        )

    if any(len(rates) != len(grid.levels) for _, rates in records):
        raise TrainingError(f"each record needs {len(grid.levels)} observed rates")
    x = feature_matrix(records)
    observed = np.array([list(rates) for _, rates in records], dtype=np.float64)
    if np.any(~np.isfinite(observed)) or np.any(observed <= 0):
        raise TrainingError("observed rates must be positive and finite")

    coefficients = np.vstack([
        fit_level(x, observed[:, level], max_iter, tol, smoothing)
        for level in range(len(grid.levels))
    ])
    regressor = LinearRateRegressor(coefficients, grid)
    mae = np.mean([bits_mae(x, observed[:, level], w) for level, w in enumerate(coefficients)])
    logger.info(f"Trained regressor on {len(records)} records, training MAE {mae:.1f} bits")
    return regressor


@dataclass(frozen=True)
class RegressorEvaluation:
    """Held-out MAE of a regressor and of the predict-previous-rate baseline, in bits."""

    mae_bits: float
    baseline_mae_bits: float
    n_records: int


def evaluate_regressor(
    predictor: BasePredictor,
    records: Sequence[TrainingRecord],
    grid: Optional[QualityGrid] = None,
    rng: Optional[np.random.Generator] = None
) -> RegressorEvaluation:
    """Compare a predictor against predicting the previous frame's rate at every level."""
    grid = grid or QualityGrid()
    if not records:
        raise ContractError("evaluate_regressor needs at least one record")

    losses, baseline = [], []
    for ctx, rates in records:
        observed = list(rates)
        predicted = predictor.predict(ctx, grid, rng).rates.tolist()
        losses.append(mae_loss(predicted, observed))
        baseline.append(mae_loss([ctx.prev_rate] * len(observed), observed))
    return RegressorEvaluation(
        mae_bits=float(np.mean(losses)),
        baseline_mae_bits=float(np.mean(baseline)),
        n_records=len(records),
    )


def collect_training_records(
    profiles: Sequence[SequenceProfile],
    grid: Optional[QualityGrid] = None,
    rng: Optional[np.random.Generator] = None
) -> List[TrainingRecord]:
    """Build training records by probing every frame of every sequence.

    Each frame after the first yields one record: the previous frame is encoded at a
    quality drawn uniformly over the grid span, and the current frame is probed at every
    grid level.
    """
    grid = grid or QualityGrid()
    rng = rng if rng is not None else np.random.default_rng(0)
    low, high = grid.levels[0], grid.levels[-1]

    records: List[TrainingRecord] = []
    for profile in profiles:
        for prev, frame in zip(profile.frames, profile.frames[1:]):
            prev_q = float(rng.uniform(low, high))
            prev_result = encode_frame(prev, prev_q, rng)
            ctx = PredictorContext(
                prev_rate=prev_result.rate,
                prev_distortion=prev_result.distortion,
                prev_quality=prev_q,
                content_scalar=frame.complexity(),
            )
            probe = multi_pass_probe(frame, grid.levels, rng)
            records.append((ctx, [p.rate for p in probe]))
    logger.debug(f"Collected {len(records)} training records from {len(profiles)} sequences")
    return records
