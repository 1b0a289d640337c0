"""Tests for batch fusion, adaptive LMS and initial-parameter calibration."""

import math

import numpy as np
import pytest

from rq_rate_control.control.rate_control import estimate_params
from rq_rate_control.estimation import (
    EstimatorVariant,
    LmsState,
    ObservationWindow,
    calibrate_initial_params,
    estimate_batch,
    fuse_points,
    initial_params,
    lms_step,
    predict_quality_for_target,
)
from rq_rate_control.exceptions import ContractError, DomainError
from rq_rate_control.modeling.rq_model import ModelKind, RQParams, RQPoint
from rq_rate_control.prediction import (
    BasePredictor,
    OraclePredictor,
    PredictedPoints,
    PredictorContext,
)
from rq_rate_control.simulation.codec_sim import FrameProfile, encode_frame, generate_sequence
from rq_rate_control.trace import FrameRecord, SequenceTrace
from tests.utils import log_law_points

FALLBACK = RQParams(alpha=12.0, beta=-100.0)


class SwappedPredictor(BasePredictor):
    """Two middle grid rates out of order."""

    name = "swapped"

    def raw_rates(self, ctx, grid, rng=None):
        return np.array([100.0, 300.0, 200.0, 400.0])


PRIOR_RATES = [math.e, math.e ** 2, math.e ** 3, math.e ** 4]


def _calibration_trace(alpha, beta, name="seq"):
    record = FrameRecord(
        t=0, r_target=100.0, q_pred=30.0, r_enc=100.0, psnr_db=35.0,
        alpha=alpha, beta=beta, deviation_pct=0.0, distortion=10.0,
    )
    return SequenceTrace(sequence=name, method="calibration", target="q30", r_s=100.0,
                         records=[record])


class TestEstimateBatch:
    """Least-squares fusion of prior and observed points."""

    def test_prior_only(self):
        predicted = PredictedPoints(points=tuple(log_law_points(2.0, 5.0, PRIOR_RATES)))
        params = estimate_batch(predicted, ObservationWindow(), FALLBACK)
        assert params.alpha == pytest.approx(2.0)
        assert params.beta == pytest.approx(5.0)

    def test_observed_only(self):
        window = ObservationWindow(points=[RQPoint(1.0, 3.0), RQPoint(math.e, 4.0)])
        params = estimate_batch(None, window, FALLBACK)
        assert params.alpha == pytest.approx(1.0)
        assert params.beta == pytest.approx(3.0)

    def test_biased_prior_residuals_cancel(self):
        """Test that residuals over the union sum to zero with a biased prior."""
        biased = [RQPoint(p.rate, p.quality + 1.0) for p in log_law_points(2.0, 5.0, PRIOR_RATES)]
        exact = log_law_points(2.0, 5.0, PRIOR_RATES)
        params = estimate_batch(PredictedPoints(points=tuple(biased)),
                                ObservationWindow(points=list(exact)), FALLBACK)
        residuals = [p.quality - (params.alpha * math.log(p.rate) + params.beta)
                     for p in biased + exact]
        assert sum(residuals) == pytest.approx(0.0, abs=1e-9)
        assert params.beta == pytest.approx(5.5)

    def test_single_point_falls_back(self):
        window = ObservationWindow(points=[RQPoint(50.0, 20.0)])
        params, used_fallback = fuse_points(None, window, FALLBACK)
        assert params is FALLBACK
        assert used_fallback

    def test_falling_quality_falls_back(self):
        window = ObservationWindow(points=[RQPoint(1.0, 10.0), RQPoint(math.e, 5.0)])
        assert fuse_points(None, window, FALLBACK) == (FALLBACK, True)

    def test_both_empty(self):
        with pytest.raises(ContractError):
            estimate_batch(None, ObservationWindow(), FALLBACK)

    def test_prior_weight_shifts_fit(self):
        biased = [RQPoint(p.rate, p.quality + 1.0) for p in log_law_points(2.0, 5.0, PRIOR_RATES)]
        window = ObservationWindow(points=log_law_points(2.0, 5.0, PRIOR_RATES))
        predicted = PredictedPoints(points=tuple(biased))
        heavy = estimate_batch(predicted, window, FALLBACK, weight=3.0)
        assert heavy.beta == pytest.approx(5.75)

    def test_window_clear(self):
        window = ObservationWindow()
        window.append(RQPoint(10.0, 5.0))
        assert len(window) == 1
        window.clear()
        assert len(window) == 0


class TestPredictQuality:
    """Quality decision from a target rate."""

    def test_examples(self):
        assert predict_quality_for_target(RQParams(2.0, 5.0), 1.0) == pytest.approx(5.0)
        assert predict_quality_for_target(RQParams(2.0, 5.0), 1e100) == 63.0
        q = predict_quality_for_target(RQParams(6.0, -20.0), math.exp(5.0))
        assert q == pytest.approx(10.0, abs=1e-6)

    def test_clamps_at_zero(self):
        assert predict_quality_for_target(RQParams(2.0, -50.0), 1.0) == 0.0

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            predict_quality_for_target(RQParams(2.0, 5.0), 0.0)
        with pytest.raises(ContractError):
            predict_quality_for_target(RQParams(2.0, 5.0, ModelKind.LINEAR), 10.0)


class TestLms:
    """Adaptive LMS baseline."""

    def test_correct_model_is_stationary(self):
        frame = FrameProfile(true_alpha=2.0, true_beta=0.0, noise_sigma=0.0)
        state = LmsState(alpha=2.0, beta=0.0, mu=0.01, eta=0.01)
        rng = np.random.default_rng(0)
        updated, result = lms_step(state, math.exp(2.0), lambda q: encode_frame(frame, q, rng))
        assert result.quality_used == pytest.approx(4.0)
        assert updated.alpha == pytest.approx(2.0, abs=1e-12)
        assert updated.beta == pytest.approx(0.0, abs=1e-12)

    def test_zero_error_returns_same_state(self):
        frame = FrameProfile(true_alpha=1.0, true_beta=0.0, noise_sigma=0.0)
        state = LmsState(alpha=1.0, beta=0.0)
        rng = np.random.default_rng(0)
        updated, _ = lms_step(state, 1.0, lambda q: encode_frame(frame, q, rng))
        assert updated is state

    def test_converges_to_true_law(self):
        frame = FrameProfile(true_alpha=2.0, true_beta=0.0, noise_sigma=0.0)
        state = LmsState(alpha=1.0, beta=0.0, mu=0.01, eta=0.01)
        rng = np.random.default_rng(0)
        targets = np.exp(np.linspace(2.0, 4.0, 10))
        for step in range(200):
            state, _ = lms_step(state, float(targets[step % 10]),
                                lambda q: encode_frame(frame, q, rng))
        q_real = predict_quality_for_target(state.params, math.exp(3.0))
        result = encode_frame(frame, q_real, rng)
        q_est = state.alpha * math.log(result.rate) + state.beta
        assert abs(q_real - q_est) < 0.1

    @pytest.mark.parametrize("mu", [0.0, -0.1, float("nan")])
    def test_rejects_bad_step_size(self, mu):
        with pytest.raises(ContractError):
            LmsState(alpha=1.0, beta=0.0, mu=mu)


class TestInitialParams:
    """Mean first-frame parameters."""

    def test_mean_of_two(self):
        params = initial_params([_calibration_trace(2.0, 4.0), _calibration_trace(4.0, 6.0)])
        assert (params.alpha, params.beta) == (3.0, 5.0)

    def test_single_sequence(self):
        params = initial_params([_calibration_trace(7.5, -30.0)])
        assert (params.alpha, params.beta) == (7.5, -30.0)

    def test_empty(self):
        with pytest.raises(ContractError):
            initial_params([])

    def test_calibration_matches_brute_force(self, grid):
        base = FrameProfile(noise_sigma=0.0)
        profiles = [generate_sequence(seed=s, n_frames=4, jitter=1.0, base=base) for s in range(5)]
        params = calibrate_initial_params(profiles, grid, np.random.default_rng(3))
        alphas = [p.frames[0].true_alpha for p in profiles]
        betas = [p.frames[0].true_beta for p in profiles]
        assert params.alpha == pytest.approx(np.mean(alphas), abs=1e-9)
        assert params.beta == pytest.approx(np.mean(betas), abs=1e-9)


class TestEstimateParams:
    """Variant dispatch of the controller's estimator."""

    def _context(self, frame):
        return PredictorContext(prev_rate=1000.0, prev_distortion=10.0, prev_quality=30.0,
                                content_scalar=frame.complexity(), frame=frame)

    def test_history_only_skips_predictor(self, rc_config, noiseless_frame, rng, mocker):
        predictor = OraclePredictor()
        spy = mocker.spy(predictor, "predict")
        cfg = rc_config(EstimatorVariant.HISTORY_ONLY)
        params, fallback, _ = estimate_params(cfg, noiseless_frame, self._context(noiseless_frame),
                                              ObservationWindow(), FALLBACK, predictor, rng)
        assert (params, fallback) == (FALLBACK, True)
        assert spy.call_count == 0

    def test_predictor_only_ignores_window(self, rc_config, noiseless_frame, rng):
        cfg = rc_config(EstimatorVariant.PREDICTOR_ONLY)
        window = ObservationWindow(points=[RQPoint(10.0, 60.0), RQPoint(20.0, 62.0)])
        params, fallback, _ = estimate_params(cfg, noiseless_frame, self._context(noiseless_frame),
                                              window, FALLBACK, OraclePredictor(), rng)
        assert not fallback
        assert params.alpha == pytest.approx(6.0)
        assert params.beta == pytest.approx(-20.0)

    def test_fusion_needs_predictor(self, rc_config, noiseless_frame, rng):
        with pytest.raises(ContractError):
            estimate_params(rc_config(), noiseless_frame, self._context(noiseless_frame),
                            ObservationWindow(), FALLBACK, None, rng)

    def test_fusion_without_prior_equals_history(self, rc_config, noiseless_frame, rng):
        window = ObservationWindow(points=[RQPoint(100.0, 10.0), RQPoint(900.0, 20.0)])
        history, _, _ = estimate_params(rc_config(EstimatorVariant.HISTORY_ONLY), noiseless_frame,
                                        self._context(noiseless_frame), window, FALLBACK, None, rng)
        assert history == fuse_points(None, window, FALLBACK)[0]

    def test_four_pass_recovers_law(self, rc_config, noiseless_frame, rng):
        params, fallback, repaired = estimate_params(
            rc_config(EstimatorVariant.FOUR_PASS_ORACLE), noiseless_frame,
            self._context(noiseless_frame), ObservationWindow(), FALLBACK, None, rng,
        )
        assert not fallback
        assert params.alpha == pytest.approx(6.0, abs=1e-9)
        assert params.beta == pytest.approx(-20.0, abs=1e-9)
        assert not repaired

    def test_flags_repaired_prior(self, rc_config, noiseless_frame, rng):
        cfg = rc_config(EstimatorVariant.PREDICTOR_ONLY)
        _, _, repaired = estimate_params(cfg, noiseless_frame, self._context(noiseless_frame),
                                         ObservationWindow(), FALLBACK, SwappedPredictor(), rng)
        assert repaired
