import os

from hypothesis import HealthCheck, settings
import numpy as np
import pytest

from pseudolap.fields import GridSpec, ScalarField, sample_field


settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile(
    "ci",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("dev", max_examples=25, deadline=None)
settings.load_profile(os.environ.get("PSEUDOLAP_HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale suites")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit_grid(dim: int, points_per_axis: int, half_width: float = 1.0) -> GridSpec:
    return GridSpec(dim=dim, points_per_axis=points_per_axis, half_width=half_width)


def separable_field(spec: GridSpec, func) -> ScalarField:
    """sum_i func(x_i) on the grid."""
    return sample_field(spec, lambda x: np.sum(func(x), axis=-1))


def zero_field(u: ScalarField) -> ScalarField:
    return u.with_values(np.zeros(u.spec.shape))
