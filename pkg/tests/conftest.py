import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from freqspec.raster import Raster

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_raster(rng, h, w, c=3):
    return Raster(rng.uniform(0, 255, (h, w, c)))
