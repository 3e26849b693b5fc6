import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def score_lists(min_size=2, max_size=16, bound=3.0):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.lists(
            st.floats(-bound, bound, allow_nan=False, allow_infinity=False),
            min_size=n,
            max_size=n,
        )
    )


def weight_lists(min_size=2, max_size=16):
    """Positive weights; normalize to get an interior simplex point."""
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.lists(
            st.floats(1e-6, 1.0, allow_nan=False, allow_infinity=False),
            min_size=n,
            max_size=n,
        )
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20250808)
