import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wgmcqed.model import SystemParams

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def nominal():
    return SystemParams.nominal()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
