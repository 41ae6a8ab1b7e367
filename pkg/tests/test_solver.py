import math

import numpy as np
import pytest

from conftest import make_config
from sburgers.errors import BlowUpError, InvalidInputError
from sburgers.kernel import apply_semigroup
from sburgers.noise import NoiseSlab, sample_increments
from sburgers.solver import (
    ImplicitHeat, SolutionPath, Stepper, picard_mild_solve, relative_weighted_distance, run_batch,
    simulate_path, step, stopping_time_tau_N, truncate_pi_N, validate_config,
)
from sburgers.weights import SpaceTimeGrid, WeightFunction, weighted_norm


def zero_slab(c, n=0):
    return NoiseSlab(n, np.zeros(c.grid.nx), c.grid.dt * c.grid.dx)


def rows(rep):
    return {r["name"]: r for r in rep["thresholds"]}


def test_validate_reference_config():
    rep = validate_config(make_config(k=6.0))
    r = rows(rep)
    assert rep["ok"] and rep["long_time_ok"]
    assert r["mhat_threshold"]["threshold"] == pytest.approx(3 * 0.49 / (4 * 0.7 + 1), rel=1e-12)
    assert r["k_weighted_energy"]["threshold"] == pytest.approx(4 / (1.47 - 0.2 - 0.56), rel=1e-3)
    assert r["k_weighted_energy"]["threshold"] == pytest.approx(5.634, abs=1e-3)


def test_validate_zero_damping_fails():
    rep = validate_config(make_config(k=0.0))
    assert not rep["ok"]
    assert not rows(rep)["k_existence"]["passed"]


def test_validate_large_mhat_fails():
    rep = validate_config(make_config(m=0.5, mhat=1.0, beta=1.0))
    r = rows(rep)
    assert r["mhat_threshold"]["threshold"] == pytest.approx(0.25)
    assert not r["mhat_threshold"]["passed"]
    assert not rep["long_time_ok"]


def test_validate_sigma_decay():
    rep = validate_config(make_config(beta=0.05))
    assert not rows(rep)["sigma_decay_2beta"]["passed"]


def test_truncation():
    g = SpaceTimeGrid(5.0, 101, 1.0)
    w = WeightFunction.exponential(0.1)
    u = np.exp(-g.x**2)
    n = weighted_norm(u, 2, w, g)
    assert np.array_equal(truncate_pi_N(u, 2 * n, w, g), u)
    v = truncate_pi_N(u, n / 2, w, g)
    assert weighted_norm(v, 2, w, g) == pytest.approx(n / 2, rel=1e-12)
    assert np.allclose(v / np.linalg.norm(v), u / np.linalg.norm(u))
    stack = truncate_pi_N(np.stack([u, 4 * u]), 2 * n, w, g)
    assert np.array_equal(stack[0], u)
    assert weighted_norm(stack[1], 2, w, g) == pytest.approx(2 * n)


def test_step_zero_fixed_point():
    c = make_config(u0=lambda x: 0 * x)
    out = step(c.u0, sample_increments(0, c.grid, 0), c)
    assert np.all(out == 0)


def test_step_is_implicit_heat():
    c = make_config(k=0.0, flux=False, sigma="constant_zero")
    out = step(c.u0, zero_slab(c), c)
    A = ImplicitHeat(c.grid).dense_matrix()
    ref = np.zeros(c.grid.nx)
    ref[1:-1] = np.linalg.solve(A, c.u0[1:-1])
    assert np.max(np.abs(out - ref)) < 1e-10


def test_step_constant_state_damping():
    cval = 0.7
    c = make_config(u0=lambda x: cval + 0 * x, sigma="constant_zero", k=6.0)
    out = step(c.u0, zero_slab(c), c)
    mid = slice(25, -25)
    expected = cval - c.grid.dt * c.k * cval**2
    # the implicit heat solve perturbs the constant only near the boundary
    assert np.allclose(out[mid], expected, rtol=1e-6)


def test_step_blow_up_error():
    c = make_config()
    bad = np.full(c.grid.nx, np.inf)
    with pytest.raises(BlowUpError) as exc:
        step(c.u0, NoiseSlab(5, bad, 1.0), c)
    assert exc.value.step == 5


def test_simulate_zero():
    c = make_config(u0=lambda x: 0 * x, sigma="constant_zero")
    p = simulate_path(c)
    assert np.all(p.states == 0) and np.all(p.norms_2rho == 0)


def test_simulate_heat_against_semigroup():
    errs = []
    for nx in (64, 128):
        c = make_config(L=10.0, nx=nx, T=0.5, k=0.0, flux=False, sigma="constant_zero")
        p = simulate_path(c)
        ref = apply_semigroup(0.5, c.u0, c.grid)
        errs.append(np.max(np.abs(p.final_state - ref)))
    dx = 20 / 63
    assert errs[0] < dx**2
    assert errs[1] < errs[0]


def test_simulate_same_seed_identical():
    c = make_config(seed=17)
    a, b = simulate_path(c), simulate_path(c)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.norms_2rhohat, b.norms_2rhohat)


def test_batch_rows_independent_of_batch():
    c = make_config(T=0.2)
    alone = run_batch(c, [3], keep_states=True)[0][0]
    mixed = run_batch(c, [9, 3, 1], keep_states=True)[0][1]
    assert np.array_equal(alone.states, mixed.states)


def test_batch_resume_bit_identical():
    c = make_config(T=0.2)
    full = run_batch(c, [0, 1])[2]
    _, _, U, _ = run_batch(c, [0, 1], stop_step=3)
    _, _, U2, _ = run_batch(c, [0, 1], u_start=U, start_step=3)
    assert np.array_equal(full, U2)


def test_ou_companion_consistency():
    # with sigma fixed along the path, v = u - eta solves the noise-free equation
    c = make_config(T=0.3)
    up, ep, U, E = run_batch(c, [4], keep_states=True, alphas=(0.0,))
    v = up[0].states - ep[0.0][0].states
    assert np.allclose(weighted_norm(v, 2, c.weight, c.grid), ep[0.0][0].extra_norms["v2_rho"])


def test_stopping_time():
    g = SpaceTimeGrid(1.0, 11, 0.2)
    p = SolutionPath(g, 0, np.array([0.0, 0.1, 0.2]), np.array([1.0, 2.0, 3.0]), np.zeros(3))
    assert stopping_time_tau_N(p, 2.5) == pytest.approx(0.2)
    assert stopping_time_tau_N(p, 10.0) is None
    assert stopping_time_tau_N(p, 1e-12) == 0.0


def test_truncated_paths_agree_before_tau():
    c = make_config(T=0.5, u0=lambda x: 3 * np.exp(-x**2 / 2))
    n0 = weighted_norm(c.u0, 2, c.weight, c.grid)
    N, M = 0.5 * n0, 2.0 * n0
    pN = simulate_path(c.replace(truncation_N=N))
    pM = simulate_path(c.replace(truncation_N=M))
    pass_N = np.nonzero(pM.norms_2rho >= N)[0]
    tau = pass_N[0] if pass_N.size else c.grid.nt + 1
    assert np.array_equal(pN.states[: tau + 1], pM.states[: tau + 1])


def test_tau_frequency_decays():
    c = make_config(T=0.5, u0=lambda x: 2 * np.exp(-x**2 / 2), k=6.0)
    up, _, _, _ = run_batch(c, range(200))
    sup = np.array([p.norms_2rho.max() for p in up])
    N = np.quantile(sup, 0.5)
    f1, f2 = np.mean(sup >= N), np.mean(sup >= 2 * N)
    assert f2 <= f1 / 2 + 2 * math.sqrt(f1 * (1 - f1) / 200)


def test_moment_grows_at_most_affinely():
    vals = []
    for a in (0.5, 1.0, 2.0):
        c = make_config(T=0.5, u0=lambda x, a=a: a * np.exp(-x**2 / 2))
        up, _, _, _ = run_batch(c, range(60))
        m = np.mean([p.norms_2rho.max() ** 2 for p in up])
        vals.append((weighted_norm(c.u0, 2, c.weight, c.grid) ** 2, m))
    for u0sq, m in vals:
        assert m <= 2.0 * (1.0 + u0sq)


def test_picard_heat_one_iteration():
    c = make_config(T=0.1, nx=64, k=0.0, flux=False, sigma="constant_zero")
    res = picard_mild_solve(c)
    assert res.iterations == 1
    assert np.allclose(res.state, apply_semigroup(0.1, c.u0, c.grid))


def test_picard_matches_stepper_and_contracts():
    c = make_config(T=0.1, nx=128, N=10.0, seed=2)
    res = picard_mild_solve(c)
    d = np.asarray(res.distances)
    assert np.all(np.diff(d[1:]) < 0)
    path = simulate_path(c)
    assert relative_weighted_distance(res.state, path.final_state, c.weight, c.grid) <= 0.05


def test_picard_discrepancy_refines():
    ds = []
    for nx in (32, 64, 128):
        c = make_config(T=0.1, nx=nx, sigma="constant_zero", u0=lambda x: np.exp(-x**2 / 2))
        res = picard_mild_solve(c)
        ds.append(relative_weighted_distance(res.state, simulate_path(c).final_state, c.weight, c.grid))
    assert ds[0] > ds[1] > ds[2]


def test_picard_rejects_unknown_quadrature():
    with pytest.raises(InvalidInputError):
        picard_mild_solve(make_config(T=0.05), noise_quadrature="trapezoid")


def test_config_rejects_bad_u0():
    with pytest.raises(InvalidInputError):
        make_config(u0=lambda x: np.full_like(x, np.nan))
