import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anxietyband.synth import CohortSpec, generate_cohort

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_cohort():
    """Six subjects: fast enough for integration tests, big enough for both classes."""
    return generate_cohort(CohortSpec(n_subjects=6, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
