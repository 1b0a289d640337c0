"""Test configuration and shared fixtures."""

import sys
from typing import Callable

import numpy as np
import pytest
from loguru import logger

from rq_rate_control.control.budget import RateControlConfig
from rq_rate_control.estimation.estimator import EstimatorVariant
from rq_rate_control.prediction.base import QualityGrid
from rq_rate_control.simulation.codec_sim import FrameProfile, SequenceProfile, generate_sequence


@pytest.fixture
def rng() -> np.random.Generator:
    """固定種子的亂數產生器。"""
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid() -> QualityGrid:
    """預設四點品質網格 {10, 17, 43, 60}。"""
    return QualityGrid()


@pytest.fixture(scope="session")
def noiseless_frame() -> FrameProfile:
    """True law Q = 6 ln R - 20 without encoder noise."""
    return FrameProfile(true_alpha=6.0, true_beta=-20.0, noise_sigma=0.0)


@pytest.fixture(scope="session")
def static_sequence() -> SequenceProfile:
    """96 identical noiseless frames of the default law Q = 12 ln R - 100."""
    return generate_sequence(seed=7, drift=0.0, base=FrameProfile(noise_sigma=0.0), name="static")


@pytest.fixture(scope="session")
def drifting_sequence() -> SequenceProfile:
    """96 drifting frames with encoder noise and per-frame jitter."""
    return generate_sequence(seed=11, drift=0.02, jitter=1.2, name="drifting")


@pytest.fixture
def rc_config() -> Callable[..., RateControlConfig]:
    """Factory for controller settings with one estimator variant."""
    def make(variant: EstimatorVariant = EstimatorVariant.FUSION, **overrides) -> RateControlConfig:
        return RateControlConfig(variant=variant, **overrides)
    return make


@pytest.fixture(autouse=True)
def reset_logging():
    """CLI 測試會重設 loguru sink，結束後改回寫入當前的 stderr。"""
    yield
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="WARNING")
