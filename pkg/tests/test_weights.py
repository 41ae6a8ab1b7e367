import math

import numpy as np
import pytest
from scipy import stats
from hypothesis import given, settings, strategies as st

from sburgers.errors import InvalidInputError, ResolutionError
from sburgers.kernel import gauss_weight_constant
from sburgers.weights import (
    C_rho_profile, SpaceTimeGrid, WeightFunction, check_weight_admissible, estimate_C_rho,
    eval_weight, weighted_norm,
)


def test_eval_weight_values():
    assert eval_weight(WeightFunction.exponential(1), 0.0) == 1.0
    assert eval_weight(WeightFunction.exponential(1), 2.0) == pytest.approx(7.389056, rel=1e-7)
    assert eval_weight(WeightFunction.polynomial(1), 3.0) == 10.0


def test_exponential_argument_clamped():
    w = WeightFunction.exponential(1.0)
    assert eval_weight(w, 1e4) == pytest.approx(math.exp(40.0))
    assert np.isfinite(eval_weight(w, 1e4) ** 2)


@pytest.mark.parametrize("kind,kw", [("exponential", {"m": 0.0}), ("exponential", {"m": -1}),
                                     ("polynomial", {"r": 0.0}), ("polynomial", {"r": 0.5}),
                                     ("cosh", {})])
def test_weight_invariants(kind, kw):
    with pytest.raises(InvalidInputError):
        WeightFunction(kind, **kw)


def test_grid_dt_defaults_and_limit():
    g = SpaceTimeGrid(10.0, 256, 0.5)
    assert g.dt <= g.dx**2 / 2 * (1 + 1e-12)
    assert g.nt * g.dt == pytest.approx(0.5)
    assert g.times[-1] == pytest.approx(0.5)
    with pytest.raises(InvalidInputError):
        SpaceTimeGrid(10.0, 256, 0.5, dt=g.dx**2)
    with pytest.raises(InvalidInputError):
        SpaceTimeGrid(10.0, 2, 0.5)


def test_norm_of_zero():
    g = SpaceTimeGrid(5.0, 101, 1.0)
    assert weighted_norm(np.zeros(g.nx), 2, WeightFunction.exponential(1), g) == 0.0


def test_norm_exponential_pair():
    # int e^{-2|x|} e^{|x|} dx = 2
    g = SpaceTimeGrid(40.0, 40001, 1.0)
    u = np.exp(-np.abs(g.x))
    assert weighted_norm(u, 2, WeightFunction.exponential(1), g) == pytest.approx(math.sqrt(2), rel=1e-6)


def test_norm_hat_function_against_refined_quadrature(rng):
    w = WeightFunction.exponential(0.3)
    a, b = sorted(rng.uniform(-4, 4, 2))
    c = 0.5 * (a + b)

    def hat(x):
        return np.clip(1 - np.abs(x - c) / (0.5 * (b - a)), 0, None)

    g = SpaceTimeGrid(5.0, 20001, 1.0)
    fine = SpaceTimeGrid(5.0, 16 * 20000 + 1, 1.0)
    coarse = weighted_norm(hat(g.x), 2, w, g)
    ref = weighted_norm(hat(fine.x), 2, w, fine)
    assert coarse == pytest.approx(ref, rel=1e-6)


def test_norm_rejects_nonfinite():
    g = SpaceTimeGrid(1.0, 11, 1.0)
    u = np.zeros(g.nx)
    u[3] = np.nan
    with pytest.raises(InvalidInputError):
        weighted_norm(u, 2, WeightFunction.exponential(1), g)


@settings(max_examples=50, deadline=None)
@given(st.one_of(st.just(0.0), st.floats(1e-30, 1e3), st.floats(-1e3, -1e-30)),
       st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.0, 6.0]))
def test_norm_homogeneous(cval, seed, p):
    g = SpaceTimeGrid(4.0, 41, 1.0)
    u = np.random.default_rng(seed).standard_normal(g.nx)
    w = WeightFunction.exponential(0.5)
    assert weighted_norm(cval * u, p, w, g) == pytest.approx(abs(cval) * weighted_norm(u, p, w, g),
                                                             rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_norm_monotone_in_p_for_unit_mass(seed):
    # once the weight is normalised to unit mass, ||u||_p is nondecreasing in p
    g = SpaceTimeGrid(4.0, 41, 1.0)
    w = WeightFunction.exponential(0.5)
    total = float(np.sum(eval_weight(w, g.x)) * g.dx)
    u = np.random.default_rng(seed).uniform(-1, 1, g.nx)
    norms = [weighted_norm(u, p, w, g) / total ** (1 / p) for p in (1, 2, 3, 4, 6)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_admissible_reports():
    r = check_weight_admissible(WeightFunction.exponential(0.2))
    assert r["Cstar"] == 0.2 and r["ok"]
    r = check_weight_admissible(WeightFunction.polynomial(2))
    assert r["Cstar"] == 2 and r["ok"]
    # ratio 2r|x|/(1+x^2) peaks at |x| = 1 with value r
    assert r["max_ratio"] == pytest.approx(2.0, rel=1e-4)


def test_C_rho_exponential_bounds():
    w = WeightFunction.exponential(1.0)
    g = SpaceTimeGrid(10.0, 801, 1.0)
    c = estimate_C_rho(w, 0.25, g)
    assert c >= 1.0
    assert c <= 2.0 * math.exp(0.25)
    # worst point is the kink x = 0, where (G * rho)(0) = 2 e^{m^2 t} Phi(m sqrt(2t))
    exact = 2.0 * math.exp(0.25) * stats.norm.cdf(math.sqrt(0.5))
    assert c == pytest.approx(exact, rel=1e-4)
    fine = SpaceTimeGrid(10.0, 16 * 800 + 1, 1.0)
    ts = np.geomspace(g.dx**2, 0.25, 24)
    assert c == pytest.approx(estimate_C_rho(w, 0.25, fine, t_samples=ts), rel=1e-4)


def test_C_rho_small_t_tends_to_one():
    w = WeightFunction.exponential(1.0)
    g = SpaceTimeGrid(10.0, 2001, 1.0)
    ts = np.geomspace(g.dx**2, 1e-2, 6)
    excess = C_rho_profile(w, ts, g) - 1.0
    # leading behaviour m sqrt(4t/pi) at the kink
    assert np.all(np.diff(excess) > 0)
    assert np.all(excess <= 1.2 * (np.sqrt(4 * ts / math.pi) + ts))
    assert excess[0] < 0.011


def test_C_rho_polynomial_monotone():
    w = WeightFunction.polynomial(1)
    g = SpaceTimeGrid(10.0, 401, 1.0)
    ts = np.linspace(g.dx**2, 1.0, 12)
    prof = C_rho_profile(w, ts, g)
    assert np.all(np.isfinite(prof))
    assert np.all(np.diff(prof) >= -1e-12)


def test_C_rho_below_weighted_kernel_bound():
    # heat kernel variance 2t corresponds to a = 4 in the exp(-|x-y|^2/(a t)) form
    mhat = 0.2
    w = WeightFunction.exponential(mhat)
    g = SpaceTimeGrid(10.0, 401, 1.0)
    for T in (0.1, 0.5, 1.0):
        bound = gauss_weight_constant(4.0) / math.sqrt(4 * math.pi) * math.exp(mhat**2 * T)
        assert estimate_C_rho(w, T, g) <= bound


def test_C_rho_resolution_error():
    g = SpaceTimeGrid(10.0, 101, 1.0)
    with pytest.raises(ResolutionError):
        estimate_C_rho(WeightFunction.exponential(1), 1.0, g, t_samples=[1e-6])
