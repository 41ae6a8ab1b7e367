import math

import numpy as np
import pytest

from conftest import make_config
from sburgers.diagnostics import (
    R1_from_sups, compute_R1, energy_bound_check, exceedance_curve, exceedance_stat,
    initial_condition_sensitivity, poincare_check, poincare_constant, random_bump,
)
from sburgers.errors import ConfigurationError, DomainError, InvalidInputError
from sburgers.ou import OUConfig, simulate_ou
from sburgers.solver import run_batch, simulate_path
from sburgers.weights import SpaceTimeGrid


def test_R1_zero_and_scaling():
    assert R1_from_sups(0, 0, 0, 6.0, 0.1) == 0.0
    eps = (0.5, 0.5, 0.5)
    a3 = 4 * 6.0 / (3 * 0.25) + 2 * 0.1 / (3 * 0.25)
    a4 = 0.05 + 1 + 6.0
    a6 = 4 / (3 * 0.25)
    assert R1_from_sups(1, 0, 0, 6.0, 0.1, eps) == pytest.approx(a3)
    assert R1_from_sups(0, 1, 0, 6.0, 0.1, eps) == pytest.approx(a4)
    assert R1_from_sups(0, 0, 1, 6.0, 0.1, eps) == pytest.approx(a6)
    # homogeneity of each term under doubling the suprema
    assert R1_from_sups(2, 0, 0, 6.0, 0.1, eps) == pytest.approx(8 * a3)
    assert R1_from_sups(0, 2, 0, 6.0, 0.1, eps) == pytest.approx(16 * a4)
    assert R1_from_sups(0, 0, 2, 6.0, 0.1, eps) == pytest.approx(64 * a6)


def test_R1_needs_norms():
    c = make_config(T=0.2)
    up = simulate_path(c)
    with pytest.raises(ConfigurationError):
        compute_R1(up, c.k, c.weight.Cstar)
    eta = simulate_ou(OUConfig(0.0, c), up)
    assert compute_R1(eta, c.k, c.weight.Cstar, upto=0) == 0.0
    assert compute_R1(eta, c.k, c.weight.Cstar) > 0


def test_energy_zero_noise_is_pure_decay():
    c = make_config(T=0.5, sigma="constant_zero")
    up = simulate_path(c)
    eta = simulate_ou(OUConfig(0.0, c), up)
    rep = energy_bound_check(up, eta, c)
    assert rep.R1_value == 0.0
    assert rep.holds and rep.slack >= 1.0


def test_energy_zero_everything():
    c = make_config(T=0.2, sigma="constant_zero", u0=np.zeros(64))
    up = simulate_path(c)
    rep = energy_bound_check(up, simulate_ou(OUConfig(0.0, c), up), c)
    assert np.all(rep.lhs == 0) and rep.slack == math.inf


def test_energy_holds_on_small_ensemble():
    c = make_config(T=1.0)
    up, ep, _, _ = run_batch(c, range(20), alphas=(0.0,))
    for u, e in zip(up, ep[0.0]):
        assert energy_bound_check(u, e, c).holds


def test_energy_rejects_damped_eta():
    c = make_config(T=0.2)
    up = simulate_path(c)
    with pytest.raises(ConfigurationError):
        energy_bound_check(up, simulate_ou(OUConfig(1.0, c), up), c)


def test_poincare_constant_values():
    assert poincare_constant(0.0) == 0.5
    assert poincare_constant(0.2) == pytest.approx(0.49)
    with pytest.raises(DomainError):
        poincare_constant(math.sqrt(2))
    with pytest.raises(DomainError):
        poincare_constant(-0.1)


@pytest.fixture(scope="module")
def fine():
    return SpaceTimeGrid(10.0, 1024, 1.0)


def test_poincare_random_bumps(fine):
    rng = np.random.default_rng(7)
    for _ in range(100):
        r = poincare_check(random_bump(rng, fine), 0.2, fine)
        assert r["holds"]


def test_poincare_scaling_and_reflection(fine):
    u = random_bump(np.random.default_rng(1), fine)
    a = poincare_check(u, 0.2, fine)
    b = poincare_check(3.0 * u, 0.2, fine)
    r = poincare_check(u[::-1].copy(), 0.2, fine)
    assert b["lhs"] == pytest.approx(9 * a["lhs"], rel=1e-12)
    assert b["rhs"] == pytest.approx(9 * a["rhs"], rel=1e-12)
    assert r["lhs"] == pytest.approx(a["lhs"], rel=1e-12)
    assert r["rhs"] == pytest.approx(a["rhs"], rel=1e-12)


def test_poincare_sine_bump_oracle():
    # u = sin(pi (x+h)/(2h)) on [-h, h] with mhat = 0: ratio (pi/2h)^2 against 1/2
    g = SpaceTimeGrid(4.0, 4001, 1.0)
    h = 1.0
    u = np.where(np.abs(g.x) <= h, np.sin(math.pi * (g.x + h) / (2 * h)), 0.0)
    r = poincare_check(u, 0.0, g)
    # the kinks at +-h cost O(dx) in the difference quotient
    assert r["lhs"] / (r["rhs"] / 0.5) == pytest.approx((math.pi / 2) ** 2, rel=5 * g.dx)


def test_poincare_fails_for_wide_support():
    g = SpaceTimeGrid(10.0, 1024, 1.0)
    u = np.where(np.abs(g.x) < 8, np.cos(math.pi * g.x / 16) ** 2, 0.0)
    assert not poincare_check(u, 0.2, g)["holds"]


def test_poincare_guard(fine):
    u = np.zeros(fine.nx)
    u[1] = 1.0
    with pytest.raises(DomainError):
        poincare_check(u, 0.2, fine)
    with pytest.raises(InvalidInputError):
        poincare_check(np.zeros(5), 0.2, fine)


@pytest.fixture(scope="module")
def ens():
    c = make_config(T=1.0)
    up, _, _, _ = run_batch(c, range(30))
    return up


def test_exceedance_monotone(ens):
    stats, R_eps = exceedance_curve(ens, np.linspace(0, 3, 31), eps=0.05)
    f = [s.frequency for s in stats]
    assert all(a >= b for a, b in zip(f, f[1:]))
    assert exceedance_stat(ens, 0.0).frequency == pytest.approx(1.0)
    assert R_eps is not None and exceedance_stat(ens, R_eps).frequency <= 0.05
    assert exceedance_stat(ens, 1e9).frequency == 0.0


def test_exceedance_mixed_horizons(ens):
    other = simulate_path(make_config(T=0.5))
    with pytest.raises(InvalidInputError):
        exceedance_stat(list(ens) + [other], 1.0)


def test_sensitivity_identical_start():
    c = make_config(T=0.3)
    r = initial_condition_sensitivity(c, c.u0, c.u0.copy(), N=100.0, ensemble=5)
    assert r["numerator"] == 0.0 and math.isnan(r["ratio"])


def test_sensitivity_heat_ratio_below_Crho():
    from sburgers.weights import estimate_C_rho
    c = make_config(T=0.5, k=0.0, sigma="constant_zero", flux=False)
    u2 = c.u0 + 0.1 * np.exp(-(c.grid.x - 1) ** 2)
    u2[0] = u2[-1] = 0
    r = initial_condition_sensitivity(c, c.u0, u2, N=100.0, ensemble=3)
    assert 0 < r["ratio"] <= estimate_C_rho(c.weight, c.grid.T, c.grid)


def test_sensitivity_gap_scaling():
    c = make_config(T=0.3)
    d = 1e-4 * np.exp(-c.grid.x**2)
    d[0] = d[-1] = 0
    r1 = initial_condition_sensitivity(c, c.u0, c.u0 + d, N=100.0, ensemble=5)
    r2 = initial_condition_sensitivity(c, c.u0, c.u0 + 2 * d, N=100.0, ensemble=5)
    assert r2["gap"] == pytest.approx(4 * r1["gap"])
    assert r2["ratio"] == pytest.approx(r1["ratio"], rel=1e-2)
