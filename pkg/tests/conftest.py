import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from exterior_ot.domain import CostSpec, DensityField, GridSpec

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture
def linear_cost():
    return CostSpec.power(1.0)


@pytest.fixture
def quadratic_cost():
    return CostSpec.power(2.0)


def field_1d(values, spacing=1.0):
    values = np.asarray(values, dtype=float)
    return DensityField(GridSpec.centered((values.size,), spacing), values)
