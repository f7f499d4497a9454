import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from halfsens.boolfn import LinearThresholdFunction

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def ltfs(draw, min_n=1, max_n=8, max_w=5):
    n = draw(st.integers(min_n, max_n))
    w = draw(st.lists(st.integers(-max_w, max_w), min_size=n, max_size=n))
    bound = sum(abs(v) for v in w) + 1
    theta = draw(st.integers(-bound, bound))
    return LinearThresholdFunction(w, theta)


@st.composite
def tables(draw, min_n=1, max_n=8):
    from halfsens.boolfn import TruthTable

    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.1, 0.5, 0.9]))
    rng = np.random.default_rng(seed)
    return TruthTable(n, rng.random(1 << n) < density)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
