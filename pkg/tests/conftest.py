import numpy as np
import pytest

from sburgers.noise import SigmaCoefficient
from sburgers.solver import SimulationConfig
from sburgers.weights import SpaceTimeGrid, WeightFunction


def make_config(L=8.0, nx=64, T=0.5, k=6.0, m=0.1, mhat=0.2, sigma="bounded_sin", beta=1.0,
                u0=None, N=None, seed=0, flux=True, dt=None):
    g = SpaceTimeGrid(L, nx, T, dt)
    if u0 is None:
        u0 = np.exp(-g.x**2 / 2)
    elif callable(u0):
        u0 = u0(g.x)
    return SimulationConfig(g, k, WeightFunction.exponential(m), WeightFunction.exponential(mhat),
                            SigmaCoefficient(sigma, beta), u0, truncation_N=N, seed=seed, flux=flux)


@pytest.fixture
def cfg():
    return make_config()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
