"""Unit tests for the R-Q model families and fitting."""

import math

import numpy as np
import pytest

from rq_rate_control.exceptions import DegenerateFitError, DomainError, UndefinedScoreError
from rq_rate_control.modeling.rq_model import (
    Q_MAX,
    LambdaMap,
    ModelKind,
    RQParams,
    RQPoint,
    eval_quality,
    eval_quality_many,
    fit_all_kinds,
    fit_arrays,
    fit_least_squares,
    invert_rate,
    lambda_from_quality,
    r_squared,
    select_best_model,
    sum_squared_residuals,
)
from tests.utils import log_law_points


def test_eval_quality_examples():
    """Test the three families at hand-computed points."""
    assert eval_quality(RQParams(2.0, 5.0), math.e) == pytest.approx(7.0)
    assert eval_quality(RQParams(1.0, 0.0, ModelKind.LINEAR), 42.0) == 42.0
    assert eval_quality(RQParams(3.0, -1.0), 10.0) == pytest.approx(5.9078, abs=1e-4)
    assert eval_quality(RQParams(2.0, 0.5, ModelKind.EXPONENTIAL), 2.0) == pytest.approx(
        2.0 * math.e
    )


def test_eval_quality_is_unclamped():
    """Test that out-of-range qualities are returned as-is."""
    assert eval_quality(RQParams(2.0, 5.0), 1e100) > Q_MAX


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_eval_quality_rejects_non_positive_rate(rate):
    with pytest.raises(DomainError):
        eval_quality(RQParams(2.0, 5.0), rate)


def test_eval_quality_many_matches_scalar():
    params = RQParams(3.0, -1.0)
    rates = np.array([1.0, 10.0, 250.0])
    expected = [eval_quality(params, r) for r in rates]
    assert eval_quality_many(params, rates) == pytest.approx(expected)


def test_invert_rate_examples():
    assert invert_rate(RQParams(2.0, 5.0), 5.0) == pytest.approx(1.0)
    assert invert_rate(RQParams(1.0, 0.0, ModelKind.LINEAR), 7.0) == pytest.approx(7.0)
    assert invert_rate(RQParams(2.0, 5.0), 7.0) == pytest.approx(math.e)


def test_invert_rate_round_trip():
    """Test eval_quality(invert_rate(q)) == q for random parameters."""
    gen = np.random.default_rng(0)
    for _ in range(200):
        params = RQParams(float(gen.uniform(0.5, 20.0)), float(gen.uniform(-150.0, 10.0)))
        q = float(gen.uniform(0.0, Q_MAX))
        try:
            rate = invert_rate(params, q)
        except DomainError:
            continue
        assert abs(eval_quality(params, rate) - q) < 1e-9 * max(1.0, abs(q))


def test_invert_rate_rejects_non_invertible_params():
    with pytest.raises(DomainError):
        invert_rate(RQParams(0.0, 3.0, ModelKind.LINEAR), 5.0)
    with pytest.raises(DomainError):
        invert_rate(RQParams(-2.0, 0.1, ModelKind.EXPONENTIAL), 5.0)


def test_log_params_reject_zero_alpha():
    with pytest.raises(DomainError):
        RQParams(0.0, 1.0)


def test_fit_recovers_noiseless_log_law():
    points = log_law_points(2.0, 5.0, [1.0, math.e, math.e ** 2, math.e ** 3])
    params = fit_least_squares(points)
    assert params.alpha == pytest.approx(2.0, abs=1e-9)
    assert params.beta == pytest.approx(5.0, abs=1e-9)


def test_fit_two_points_by_hand():
    params = fit_least_squares([RQPoint(1.0, 3.0), RQPoint(math.e, 4.0)])
    assert params.alpha == pytest.approx(1.0)
    assert params.beta == pytest.approx(3.0)


def test_fit_recovery_random_instances():
    """Test noiseless recovery to 1e-9 over many random log laws."""
    gen = np.random.default_rng(2024)
    for _ in range(1000):
        alpha = float(gen.uniform(1.0, 20.0))
        beta = float(gen.uniform(-40.0, 10.0))
        rates = np.exp(gen.uniform(0.5, 8.0, size=6))
        params = fit_arrays(rates, alpha * np.log(rates) + beta)
        assert abs(params.alpha - alpha) < 1e-9
        assert abs(params.beta - beta) < 1e-9


@pytest.mark.parametrize("kind", list(ModelKind))
def test_fit_recovers_its_own_family(kind):
    if kind is ModelKind.LINEAR:
        truth = RQParams(0.05, 4.0, kind)
    elif kind is ModelKind.EXPONENTIAL:
        truth = RQParams(5.0, 0.002, kind)
    else:
        truth = RQParams(4.0, 2.0, kind)
    rates = [10.0, 80.0, 200.0, 450.0, 700.0]
    points = [RQPoint(r, eval_quality(truth, r)) for r in rates]
    params = fit_least_squares(points, kind)
    assert params.alpha == pytest.approx(truth.alpha, rel=1e-9)
    assert params.beta == pytest.approx(truth.beta, rel=1e-9)


def test_fit_noisy_alpha_within_standard_error():
    gen = np.random.default_rng(5)
    rates = np.exp(gen.uniform(1.0, 6.0, size=50))
    qualities = 1.5 * np.log(rates) + 10.0 + gen.normal(0.0, 0.1, size=50)
    params = fit_least_squares([RQPoint(float(r), float(q)) for r, q in zip(rates, qualities)])
    x = np.log(rates)
    stderr = 0.1 / math.sqrt(float(np.sum((x - x.mean()) ** 2)))
    assert abs(params.alpha - 1.5) < 3 * stderr


def test_fit_is_local_minimum():
    """Test that perturbing a fit never lowers the residual sum of squares."""
    gen = np.random.default_rng(9)
    for _ in range(50):
        rates = np.exp(gen.uniform(1.0, 7.0, size=8))
        qualities = np.clip(6.0 * np.log(rates) - 5.0 + gen.normal(0, 1.0, size=8), 0, Q_MAX)
        points = [RQPoint(float(r), float(q)) for r, q in zip(rates, qualities)]
        params = fit_least_squares(points)
        base = sum_squared_residuals(points, params)
        for d_alpha, d_beta in [(1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)]:
            moved = RQParams(params.alpha + d_alpha, params.beta + d_beta)
            assert sum_squared_residuals(points, moved) >= base


def test_fit_degenerate_rates():
    with pytest.raises(DegenerateFitError):
        fit_least_squares([RQPoint(5.0, 3.0), RQPoint(5.0, 4.0)])
    with pytest.raises(DegenerateFitError):
        fit_least_squares([RQPoint(5.0, 3.0)])


def test_exponential_fit_rejects_zero_quality():
    with pytest.raises(DomainError):
        fit_least_squares([RQPoint(1.0, 0.0), RQPoint(2.0, 3.0)], ModelKind.EXPONENTIAL)


def test_r_squared_perfect_and_constant():
    points = log_law_points(2.0, 5.0, [1.0, 3.0, 9.0, 27.0])
    assert r_squared(points, fit_least_squares(points)) == pytest.approx(1.0)
    mean_q = float(np.mean([p.quality for p in points]))
    constant = RQParams(0.0, mean_q, ModelKind.LINEAR)
    assert r_squared(points, constant) == pytest.approx(0.0, abs=1e-12)


def test_r_squared_order_invariant():
    points = [RQPoint(2.0, 3.0), RQPoint(7.0, 9.5), RQPoint(20.0, 14.0), RQPoint(50.0, 16.0)]
    params = fit_least_squares(points)
    assert r_squared(points, params) == pytest.approx(r_squared(points[::-1], params))


def test_r_squared_zero_variance():
    points = [RQPoint(2.0, 3.0), RQPoint(7.0, 3.0)]
    with pytest.raises(UndefinedScoreError):
        r_squared(points, RQParams(1.0, 3.0, ModelKind.LINEAR))


def test_family_ordering_on_log_data():
    """Test that the log family wins on noisy log-law data across the grid levels."""
    gen = np.random.default_rng(77)
    rates = np.exp(np.linspace(9.0, 13.0, 12))
    qualities = 12.0 * np.log(rates) - 100.0 + gen.normal(0, 0.3, size=rates.size)
    points = [RQPoint(float(r), float(q)) for r, q in zip(rates, qualities)]
    scores = fit_all_kinds(points)
    log_r2 = scores[ModelKind.LOGARITHMIC][1]
    lin_r2 = scores[ModelKind.LINEAR][1]
    exp_r2 = scores[ModelKind.EXPONENTIAL][1]
    assert log_r2 > lin_r2 > exp_r2
    assert select_best_model(points) is ModelKind.LOGARITHMIC


def test_lambda_map_endpoints_and_midpoint():
    lam = LambdaMap()
    assert lambda_from_quality(lam, 0.0) == 85.0
    assert lambda_from_quality(lam, 63.0) == pytest.approx(840.0, rel=1e-12)
    assert lambda_from_quality(lam, 31.5) == pytest.approx(math.sqrt(85.0 * 840.0))
    assert math.sqrt(85.0 * 840.0) == pytest.approx(267.21, abs=0.01)


def test_lambda_map_monotone():
    lam = LambdaMap()
    values = [lambda_from_quality(lam, q) for q in np.linspace(0.0, 63.0, 200)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_lambda_map_rejects_out_of_range():
    lam = LambdaMap()
    with pytest.raises(DomainError):
        lambda_from_quality(lam, 64.0)
    with pytest.raises(DomainError):
        LambdaMap(lambda_min=840.0, lambda_max=85.0)


def test_point_validation():
    with pytest.raises(DomainError):
        RQPoint(0.0, 10.0)
    with pytest.raises(DomainError):
        RQPoint(10.0, Q_MAX + 1.0)
