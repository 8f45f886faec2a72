import logging
import os

# Keep test runs from writing rotating log files
os.environ.setdefault("ACOUSTIC_LOG_TO_FILE", "false")

import pytest

from src.config.settings import get_settings
from src.models.domain import SoundKind, SoundSpec
from src.services.virtual_actuator import default_model, noise_free
from src.tests.helpers import make_features

get_settings.cache_clear()

logger = logging.getLogger("tests")


@pytest.fixture
def short_sweep() -> SoundSpec:
    """100 ms sweep: 4800 samples, 10 Hz bins"""
    return SoundSpec(kind=SoundKind.LOG_SWEEP, duration_s=0.1)


@pytest.fixture
def short_noise() -> SoundSpec:
    return SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=0.02, seed=5)


@pytest.fixture
def actuator():
    return default_model("A")


@pytest.fixture
def quiet_actuator():
    """Nominal calibration without noise, jitter or pose effects"""
    return noise_free(default_model("A", jitter=False))


@pytest.fixture
def features_factory():
    return make_features
