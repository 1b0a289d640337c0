"""Closed-loop rate controller and the one-step evaluation protocol."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..config import RATE_CONTROL
from ..estimation.estimator import (
    EstimatorVariant,
    LmsState,
    ObservationWindow,
    fuse_points,
    lms_step,
    predict_quality_for_target,
)
from ..evaluation.metrics import ANCHOR_METHOD, rate_deviation_pct
from ..exceptions import ContractError, DegenerateFitError
from ..modeling.rq_model import ModelKind, RQParams, RQPoint, fit_arrays
from ..prediction.base import BasePredictor, PredictorContext
from ..simulation.codec_sim import (
    EncodeResult,
    FrameProfile,
    SequenceProfile,
    constant_quality_anchor,
    encode_frame,
    multi_pass_probe,
    target_rate_for_anchor,
)
from ..trace import FrameRecord, SequenceTrace
from .budget import (
    BudgetState,
    RateControlConfig,
    allocate_frame,
    allocate_minigop,
    record_frame,
    start_minigop,
)

DEFAULT_INITIAL_PARAMS = RQParams(
    alpha=RATE_CONTROL["initial_alpha"], beta=RATE_CONTROL["initial_beta"]
)


def _first_context(r_s: float, frame: FrameProfile, cfg: RateControlConfig) -> PredictorContext:
    """Context of a sequence's first frame, built from configured priors."""
    return PredictorContext(
        prev_rate=r_s,
        prev_distortion=frame.d0,
        prev_quality=cfg.grid.midpoint,
        content_scalar=frame.complexity(),
        frame=frame,
    )


def _next_context(prev: EncodeResult, frame: FrameProfile) -> PredictorContext:
    return PredictorContext(
        prev_rate=prev.rate,
        prev_distortion=prev.distortion,
        prev_quality=prev.quality_used,
        content_scalar=frame.complexity(),
        frame=frame,
    )


def _probe_params(
    frame: FrameProfile,
    cfg: RateControlConfig,
    fallback: RQParams,
    rng: np.random.Generator
) -> Tuple[RQParams, bool]:
    """Fit the frame's law from a pre-encode at every grid level."""
    probe = multi_pass_probe(frame, cfg.grid.levels, rng)
    try:
        params = fit_arrays(
            np.array([p.rate for p in probe]),
            np.array([p.quality for p in probe]),
            ModelKind.LOGARITHMIC,
        )
    except DegenerateFitError:
        return fallback, True
    return params, False


def estimate_params(
    cfg: RateControlConfig,
    frame: FrameProfile,
    ctx: PredictorContext,
    window: ObservationWindow,
    fallback: RQParams,
    predictor: Optional[BasePredictor],
    rng: np.random.Generator
) -> Tuple[RQParams, bool, bool]:
    """(alpha, beta) for the current frame under the configured estimator.

    The adaptive-LMS variant keeps its own state and is handled by the caller.

    Returns:
        (params, used_fallback, prior_repaired).
    """
    variant = cfg.variant
    if variant is EstimatorVariant.FOUR_PASS_ORACLE:
        return (*_probe_params(frame, cfg, fallback, rng), False)

    predicted = None
    if variant.uses_predictor:
        if predictor is None:
            raise ContractError(f"variant {variant.value} needs a predictor")
        predicted = predictor.predict(ctx, cfg.grid, rng)

    if variant is EstimatorVariant.HISTORY_ONLY and not window.points:
        return fallback, True, False
    observed = window if variant.uses_history else ObservationWindow()
    params, used_fallback = fuse_points(predicted, observed, fallback, cfg.observation_weight)
    return params, used_fallback, predicted is not None and predicted.repaired


def _record(
    t: int,
    r_target: float,
    q: float,
    result: EncodeResult,
    params: RQParams,
    fallback: bool,
    q_target: Optional[float] = None,
    clamped: bool = False,
    repaired: bool = False
) -> FrameRecord:
    return FrameRecord(
        t=t,
        r_target=r_target,
        q_pred=q,
        r_enc=result.rate,
        psnr_db=result.psnr_db,
        alpha=params.alpha,
        beta=params.beta,
        deviation_pct=rate_deviation_pct(r_target, result.rate),
        distortion=result.distortion,
        fallback=fallback,
        q_target=q_target,
        clamped=clamped,
        repaired=repaired,
    )


def _minigop_weights(cfg: RateControlConfig, t: int, n_frames: int) -> Sequence[float]:
    """Weights of the miniGOP starting at frame ``t``, truncated at the sequence end."""
    return cfg.weights[: min(cfg.minigop_len, n_frames - t)]


def run_closed_loop(
    profile: SequenceProfile,
    r_s: float,
    cfg: RateControlConfig,
    predictor: Optional[BasePredictor],
    rng: np.random.Generator,
    init_params: Optional[RQParams] = None,
    target_label: Optional[str] = None,
    seed: int = 0
) -> SequenceTrace:
    """Encode a sequence at ``r_s`` bits per frame on average.

    Per frame: allocate the miniGOP and frame budgets, estimate (alpha, beta), pick the
    quality level for the frame budget, encode, then update the observation window and
    the accounting. The observation window is cleared at every GOP boundary.

    Args:
        profile: Sequence to encode.
        r_s: Target bits per frame.
        cfg: Controller settings.
        predictor: Prior predictor for the fusion and predictor-only variants.
        rng: Random stream for encoder noise, predictor noise and probes.
        init_params: Parameters used until the first successful estimate.
        target_label: Target name stored on the trace.
        seed: Seed stored on the trace.

    Returns:
        The per-frame trace.
    """
    if not r_s > 0:
        raise ContractError(f"target rate must be positive, got {r_s}")

    params = init_params or DEFAULT_INITIAL_PARAMS
    lms = LmsState(alpha=params.alpha, beta=params.beta)
    window = ObservationWindow()
    state = BudgetState()
    weights: Sequence[float] = cfg.weights
    prev: Optional[EncodeResult] = None
    trace = SequenceTrace(
        sequence=profile.name,
        method=cfg.variant.value,
        target=target_label or f"{r_s:g}",
        seed=seed,
        r_s=r_s,
        pixels=profile.frames[0].pixels,
    )

    for t, frame in enumerate(profile.frames):
        if t % cfg.gop_length == 0 and window.gop_scoped:
            window.clear()
        if t % cfg.minigop_len == 0:
            weights = _minigop_weights(cfg, t, profile.n_frames)
            state = start_minigop(state, allocate_minigop(r_s, state, cfg, len(weights)))
        r_target = allocate_frame(state.minigop_budget, state, cfg, weights)
        clamped = min(r_target, state.minigop_budget) <= cfg.min_bits

        if cfg.variant is EstimatorVariant.ADAPTIVE_LMS:
            used = lms.params
            lms, result = lms_step(lms, r_target, lambda q: encode_frame(frame, q, rng))
            q, fallback, repaired = result.quality_used, False, False
        else:
            ctx = _first_context(r_s, frame, cfg) if prev is None else _next_context(prev, frame)
            used, fallback, repaired = estimate_params(
                cfg, frame, ctx, window, params, predictor, rng
            )
            q = predict_quality_for_target(used, r_target)
            result = encode_frame(frame, q, rng)
            params = used

        window.append(RQPoint(rate=result.rate, quality=q))
        state = record_frame(state, result.rate)
        trace.records.append(
            _record(t, r_target, q, result, used, fallback, clamped=clamped, repaired=repaired)
        )
        prev = result

    logger.debug(
        f"{profile.name} {cfg.variant.value} R_s={r_s:.1f}: "
        f"mean deviation {trace.mean_deviation_pct:.3f}%, {trace.fallback_count} fallbacks, "
        f"{trace.clamp_count} floored budgets"
    )
    return trace


def run_one_step_eval(
    profile: SequenceProfile,
    cfg: RateControlConfig,
    predictor: Optional[BasePredictor],
    rng: np.random.Generator,
    q_range: Tuple[float, float] = tuple(RATE_CONTROL["one_step_q_range"]),
    init_params: Optional[RQParams] = None,
    seed: int = 0
) -> SequenceTrace:
    """One-step protocol: every frame gets an independent random target.

    Per frame a quality level is drawn uniformly from ``q_range`` and the frame is
    pre-encoded there; the pre-encode's rate is the target. The controller then predicts a
    quality level for that target and re-encodes. The next frame's predictor context is
    the current frame's pre-encode.
    """
    low, high = q_range
    if not 0 <= low <= high:
        raise ContractError(f"invalid quality range {q_range}")

    params = init_params or DEFAULT_INITIAL_PARAMS
    lms = LmsState(alpha=params.alpha, beta=params.beta)
    window = ObservationWindow()
    pre: Optional[EncodeResult] = None
    records: List[FrameRecord] = []

    for t, frame in enumerate(profile.frames):
        if t % cfg.gop_length == 0 and window.gop_scoped:
            window.clear()
        q_target = float(rng.uniform(low, high))
        ctx = (
            _first_context(frame.true_rate(cfg.grid.midpoint), frame, cfg)
            if pre is None else _next_context(pre, frame)
        )
        pre = encode_frame(frame, q_target, rng)
        r_target = pre.rate

        if cfg.variant is EstimatorVariant.ADAPTIVE_LMS:
            used = lms.params
            lms, result = lms_step(lms, r_target, lambda q: encode_frame(frame, q, rng))
            q, fallback, repaired = result.quality_used, False, False
        else:
            used, fallback, repaired = estimate_params(
                cfg, frame, ctx, window, params, predictor, rng
            )
            q = predict_quality_for_target(used, r_target)
            result = encode_frame(frame, q, rng)
            params = used

        window.append(RQPoint(rate=result.rate, quality=q))
        records.append(_record(t, r_target, q, result, used, fallback, q_target, repaired=repaired))

    return SequenceTrace(
        sequence=profile.name,
        method=cfg.variant.value,
        target=f"onestep{low:g}-{high:g}",
        seed=seed,
        r_s=float(np.mean([r.r_target for r in records])),
        pixels=profile.frames[0].pixels,
        records=records,
    )


def run_constant_quality(
    profile: SequenceProfile,
    q: float,
    rng: np.random.Generator,
    target_label: Optional[str] = None,
    seed: int = 0
) -> SequenceTrace:
    """Anchor run: every frame encoded at one fixed quality level, without rate control.

    Frame targets are the anchor's noise-free mean rate, so deviations show the natural
    rate fluctuation of the content.
    """
    r_s = target_rate_for_anchor(profile, q)
    trace = SequenceTrace(
        sequence=profile.name,
        method=ANCHOR_METHOD,
        target=target_label or f"q{q:g}",
        seed=seed,
        r_s=r_s,
        pixels=profile.frames[0].pixels,
    )
    results = constant_quality_anchor(profile, q, rng)
    for t, (frame, result) in enumerate(zip(profile.frames, results, strict=True)):
        trace.records.append(_record(t, r_s, q, result, frame.true_params(), False))
    return trace
