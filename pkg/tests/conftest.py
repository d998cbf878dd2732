import numpy as np
import pytest

from proxysvar.shockdist import PearsonMoments, pearson_sample
from proxysvar.varcore import TimeSeriesPanel

MC_B0 = np.array([
    [1.0, 0.0, 0.0],
    [0.15, 1.0, -0.5],
    [0.0, 1.5, 1.0],
])
MC_MOMENTS = PearsonMoments(0.68, 2.33)
MC_TRUTH = np.array([0.0, -0.5, 1.0])  # impact of the instrumented shock


def simulate_mc_system(T, seed, contamination=0.0):
    """Static three-shock system with a proxy for the third shock."""
    rng = np.random.default_rng(seed)
    shocks = pearson_sample(MC_MOMENTS, rng, T * 3).reshape(T, 3)
    noise = pearson_sample(MC_MOMENTS, rng, T)
    u = shocks @ MC_B0.T
    proxy = shocks[:, 2] + contamination * shocks[:, 1] + noise
    return TimeSeriesPanel(values=u), proxy, shocks


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
