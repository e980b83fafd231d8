import numpy as np
import pytest

from etscombine.corpus import Frequency, TimeSeries


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_series(values, sid="s1", frequency=Frequency.YEARLY):
    return TimeSeries(id=sid, frequency=frequency, values=np.asarray(values, dtype=float))


@pytest.fixture
def yearly_series(rng):
    """A well-behaved positive yearly series, 30 observations."""
    y = 50.0 + 2.0 * np.arange(30) + rng.normal(0, 3, 30)
    return make_series(np.abs(y) + 1.0)


def random_walk_series(seed, n=30, sid=None, frequency=Frequency.YEARLY, base=50.0):
    """Positive random-walk series for optimizer exercises."""
    rng = np.random.default_rng(seed)
    y = base + np.cumsum(rng.normal(0, 2.0, n))
    y = np.abs(y) + 5.0
    return TimeSeries(id=sid or f"rw{seed}", frequency=frequency, values=y)
