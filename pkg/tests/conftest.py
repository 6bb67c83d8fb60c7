import math

import pytest

from eprbsim import SimParams


@pytest.fixture
def small_params():
    return SimParams(w_bins=1, t0_ratio=1000.0, d=3.0, n_trials=2000, seed=11)


def grid(n: int, stop: float = math.pi):
    """Inclusive grid of n+1 points on [0, stop]."""
    return [stop * i / n for i in range(n + 1)]
