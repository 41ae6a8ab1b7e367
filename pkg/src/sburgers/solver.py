"""Time stepping for the damped stochastic Burgers equation

    du = (u_xx - k|u|u - (u^2/2)_x) dt + sigma(x, u) W(dx, dt)

on [-L, L] with zero Dirichlet data, plus the Picard iteration of the
discrete mild (Duhamel) form used as an independent cross-check.

The step is semi-implicit Euler-Maruyama: diffusion implicit, damping and
convection (local Lax-Friedrichs flux on u^2/2) explicit, noise entering
as sigma * dW / dx. With a truncation level N the nonlinear terms and
sigma see pi_N(u), the radial projection onto the weighted ball of
radius N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, InvalidInputError, IterationError
from .kernel import cell_average_matrix, deriv_semigroup_matrix, semigroup_matrix
from .noise import SigmaCoefficient, increments_batch, sample_increments, sigma_eval
from .weights import SpaceTimeGrid, WeightFunction, eval_weight, weighted_norm

# epsilon_2, epsilon_3, epsilon_4 of the energy estimate
EPS_POLICY = (0.01, 0.01, 0.01)


@dataclass(frozen=True)
class SimulationConfig:
    grid: SpaceTimeGrid
    k: float
    weight: WeightFunction
    weight_hat: WeightFunction
    sigma: SigmaCoefficient
    u0: np.ndarray
    truncation_N: float | None = None
    seed: int = 0
    flux: bool = True

    def __post_init__(self):
        u0 = np.array(self.u0, dtype=float)
        if u0.shape != (self.grid.nx,):
            raise InvalidInputError(f"u0 must have {self.grid.nx} nodes, got {u0.shape}")
        if not np.all(np.isfinite(u0)):
            raise InvalidInputError("u0 has non-finite values")
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        if self.k < 0:
            raise InvalidInputError("damping k must be nonnegative")
        if self.truncation_N is not None and not self.truncation_N > 0:
            raise InvalidInputError("truncation_N must be positive")

    def replace(self, **changes):
        return replace(self, **changes)


def delta_threshold(Cstar, k, eps=EPS_POLICY):
    e2, e3, e4 = eps
    return 2.0 * Cstar * e3 / 3.0 + 4.0 * e4 / 3.0 + 4.0 * k * e2 / 3.0


def validate_config(c, eps=EPS_POLICY):
    """Evaluate every constant constraint and report each threshold.

    Returns ``{"ok": bool, "long_time_ok": bool, "thresholds": [rows]}`` where
    each row is ``{"name", "value", "threshold", "relation", "passed"}``.
    """
    from .diagnostics import poincare_constant

    rows = []

    def add(name, value, threshold, relation, long_time=False):
        if relation == "<=":
            passed = value <= threshold
        elif relation == "<":
            passed = value < threshold
        elif relation == ">=":
            passed = value >= threshold
        else:
            passed = value > threshold
        rows.append({"name": name, "value": float(value), "threshold": float(threshold),
                     "relation": relation, "passed": bool(passed), "long_time": long_time})

    g = c.grid
    add("grid_dt", g.dt, 0.5 * g.dx**2, "<=")
    Cs = c.weight.Cstar
    k = c.k
    delta = delta_threshold(Cs, k, eps)
    add("k_existence", k, Cs / 3.0 + delta, ">=")

    mhat = c.weight_hat.m if c.weight_hat.kind == "exponential" else math.nan
    add("sigma_decay_2beta", 2.0 * c.sigma.b_decay, mhat if math.isfinite(mhat) else 0.0, ">")

    exp_weights = c.weight.kind == "exponential" and c.weight_hat.kind == "exponential"
    if exp_weights:
        add("Cstar_bounded", Cs, 0.6, "<", True)
        k_bp = max(Cs / 3.0 + delta, 4.0 / (3.0 - 5.0 * Cs) if Cs < 0.6 else math.inf)
        add("k_bounded_prob", k, k_bp, ">", True)
        add("m_below_mhat", c.weight.m, mhat, "<", True)
        if mhat < math.sqrt(2.0):
            Ct = poincare_constant(mhat)
            add("mhat_threshold", mhat, min(3.0 * Ct / (4.0 * math.sqrt(Ct) + 1.0), math.sqrt(2.0)),
                "<", True)
            denom = 3.0 * Ct - mhat - 4.0 * mhat * math.sqrt(Ct)
            dhat = delta_threshold(mhat, k, eps)
            kt = max(mhat / 3.0 + dhat, 4.0 / denom if denom > 0 else math.inf)
            add("k_weighted_energy", k, kt, ">", True)
        else:
            add("mhat_threshold", mhat, math.sqrt(2.0), "<", True)
    ok = all(r["passed"] for r in rows)
    lt_ok = exp_weights and all(r["passed"] for r in rows if r["long_time"])
    return {"ok": ok, "long_time_ok": bool(lt_ok), "thresholds": rows}


def truncate_pi_N(u, N, w, grid):
    """Radial projection onto {||u||_{2,rho} <= N}; row-wise on stacks."""
    if not N > 0:
        raise InvalidInputError("N must be positive")
    u = np.asarray(u, dtype=float)
    nrm = weighted_norm(u, 2, w, grid)
    scale = np.where(nrm > N, N / np.where(nrm > 0, nrm, 1.0), 1.0)
    if u.ndim == 1:
        return u if scale == 1.0 else u * float(scale)
    return u * scale[:, None]


def flux_divergence(u, dx):
    """Conservative local Lax-Friedrichs difference of u^2/2 at interior nodes.

    Input (..., nx), output (..., nx - 2).
    """
    ul, ur = u[..., :-1], u[..., 1:]
    a = np.maximum(np.abs(ul), np.abs(ur))
    F = 0.25 * (ul * ul + ur * ur) - 0.5 * a * (ur - ul)
    return (F[..., 1:] - F[..., :-1]) / dx


class ImplicitHeat:
    """Solver for (I - dt D2) v = d on interior nodes, zero boundary values.

    The Thomas factors are precomputed; the sweep is elementwise across a
    batch, so each row's result is independent of the batch it sits in.
    """

    def __init__(self, grid):
        n = grid.nx - 2
        r = grid.dt / grid.dx**2
        self.n = n
        self.r = r
        b = 1.0 + 2.0 * r
        cp = np.empty(n)
        denom = np.empty(n)
        denom[0] = b
        cp[0] = -r / b
        for i in range(1, n):
            denom[i] = b + r * cp[i - 1]
            cp[i] = -r / denom[i]
        self.cp = cp
        self.denom = denom

    def solve(self, d):
        """d: (P, nx) right-hand sides (boundary entries ignored)."""
        P = d.shape[0]
        dd = np.ascontiguousarray(d[:, 1:-1].T)
        cp, den, r = self.cp, self.denom, self.r
        dd[0] /= den[0]
        for i in range(1, self.n):
            dd[i] += r * dd[i - 1]
            dd[i] /= den[i]
        for i in range(self.n - 2, -1, -1):
            dd[i] -= cp[i] * dd[i + 1]
        out = np.zeros((P, d.shape[1]))
        out[:, 1:-1] = dd.T
        return out

    def dense_matrix(self):
        n, r = self.n, self.r
        return (np.diag(np.full(n, 1 + 2 * r)) + np.diag(np.full(n - 1, -r), 1)
                + np.diag(np.full(n - 1, -r), -1))


class Stepper:
    """Batched one-step map shared by the path, ensemble and OU drivers."""

    def __init__(self, c):
        self.c = c
        self.grid = c.grid
        self.heat = ImplicitHeat(c.grid)
        self.x = c.grid.x

    def effective(self, U):
        c = self.c
        if c.truncation_N is None:
            return U
        return truncate_pi_N(U, c.truncation_N, c.weight, c.grid)

    def forcing(self, Ut, dW):
        """sigma(x, u~) dW / dx."""
        if self.c.sigma.is_zero:
            return np.zeros_like(Ut)
        return sigma_eval(self.c.sigma, self.x, Ut) * dW / self.grid.dx

    def advance(self, U, dW):
        """Return (U_next, forcing) for a batch U of shape (P, nx)."""
        c, g = self.c, self.grid
        Ut = self.effective(U)
        rhs = U.copy()
        if c.k != 0:
            rhs -= g.dt * c.k * np.abs(Ut) * Ut
        if c.flux:
            rhs[:, 1:-1] -= g.dt * flux_divergence(Ut, g.dx)
        f = self.forcing(Ut, dW)
        rhs += f
        return self.heat.solve(rhs), f

    def advance_ou(self, E, f, alpha):
        return self.heat.solve((1.0 - alpha * self.grid.dt) * E + f)


def step(u, slab, c):
    """One semi-implicit Euler-Maruyama step of a single grid function."""
    u = np.asarray(u, dtype=float)
    out, _ = Stepper(c).advance(u[None, :], np.asarray(slab.increments)[None, :])
    if not np.all(np.isfinite(out)):
        raise BlowUpError(slab.step_index)
    return out[0]


@dataclass
class SolutionPath:
    grid: SpaceTimeGrid
    seed: int
    times: np.ndarray
    norms_2rho: np.ndarray
    norms_2rhohat: np.ndarray
    states: np.ndarray | None = None
    tau_N_step: int | None = None
    extra_norms: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    alpha: float | None = None

    @property
    def final_state(self):
        if self.states is None:
            raise InvalidInputError("path was recorded without states")
        return self.states[-1]


# norms recorded for eta paths: (p, weight tag)
OU_NORMS = tuple((p, tag) for p in (2, 3, 4, 6) for tag in ("rho", "rhohat"))
# norms of v = u - eta recorded alongside
V_NORMS = {"v2_rho": (2, "rho"), "v2_rhohat": (2, "rhohat"), "v3_rhohat": (3, "rhohat")}


class _Recorder:
    def __init__(self, c, P, nsteps, keep_states, observables, ou=False):
        self.c = c
        self.keep = keep_states
        self.n2 = np.empty((nsteps, P))
        self.n2h = np.empty((nsteps, P))
        self.states = np.empty((nsteps, P, c.grid.nx)) if keep_states else None
        self.obs = {o.key: np.empty((nsteps, P)) for o in observables}
        self.observables = observables
        self.ou = ou
        self.extra = {}
        if ou:
            keys = [f"{p}_{tag}" for p, tag in OU_NORMS] + list(V_NORMS)
            self.extra = {k: np.empty((nsteps, P)) for k in keys}

    def record(self, i, U, U_ref=None):
        """U_ref, for OU recorders, is the paired u state (v = u - eta is logged)."""
        c = self.c
        if self.ou:
            for p, tag in OU_NORMS:
                w = c.weight if tag == "rho" else c.weight_hat
                self.extra[f"{p}_{tag}"][i] = weighted_norm(U, p, w, c.grid)
            if U_ref is None:
                for key in V_NORMS:
                    self.extra[key][i] = np.nan
            else:
                V = U_ref - U
                for key, (p, tag) in V_NORMS.items():
                    w = c.weight if tag == "rho" else c.weight_hat
                    self.extra[key][i] = weighted_norm(V, p, w, c.grid)
            self.n2[i] = self.extra["2_rho"][i]
            self.n2h[i] = self.extra["2_rhohat"][i]
        else:
            self.n2[i] = weighted_norm(U, 2, c.weight, c.grid)
            self.n2h[i] = weighted_norm(U, 2, c.weight_hat, c.grid)
        if self.keep:
            self.states[i] = U
        for o in self.observables:
            self.obs[o.key][i] = o.evaluate(U, c)

    def paths(self, seeds, times, alpha=None):
        out = []
        N = self.c.truncation_N
        for j, s in enumerate(seeds):
            n2 = self.n2[:, j].copy()
            tau = None
            if N is not None and alpha is None:
                hit = np.nonzero(n2 >= N)[0]
                tau = int(hit[0]) if hit.size else None
            out.append(SolutionPath(
                grid=self.c.grid, seed=int(s), times=times, norms_2rho=n2,
                norms_2rhohat=self.n2h[:, j].copy(),
                states=None if self.states is None else self.states[:, j].copy(),
                tau_N_step=tau,
                extra_norms={k: v[:, j].copy() for k, v in self.extra.items()},
                observables={k: v[:, j].copy() for k, v in self.obs.items()},
                alpha=alpha,
            ))
        return out


def _check_finite(U, n, seeds):
    if not np.all(np.isfinite(U)):
        bad = [s for s, row in zip(seeds, U) if not np.all(np.isfinite(row))]
        raise BlowUpError(n, f"non-finite state at step {n} for seeds {bad}")


def run_batch(c, seeds, keep_states=False, observables=(), alphas=(), u_start=None,
              eta_start=None, start_step=0, stop_step=None, record_every=1):
    """Advance a batch of paths (one per seed) with optional OU companions.

    Returns ``(u_paths, eta_paths, U_last, E_last)`` where ``eta_paths`` maps
    each alpha to its list of paths. Norms are recorded every
    ``record_every`` steps (always including the first and last).
    """
    g = c.grid
    seeds = [int(s) for s in seeds]
    P = len(seeds)
    stop = g.nt if stop_step is None else stop_step
    steps = list(range(start_step, stop + 1, record_every))
    if steps[-1] != stop:
        steps.append(stop)
    rec_at = {n: i for i, n in enumerate(steps)}
    stepper = Stepper(c)
    U = np.tile(c.u0, (P, 1)) if u_start is None else np.array(u_start, dtype=float)
    E = {a: (np.zeros((P, g.nx)) if eta_start is None else np.array(eta_start[a], dtype=float))
         for a in alphas}
    rec = _Recorder(c, P, len(steps), keep_states, observables)
    erec = {a: _Recorder(c, P, len(steps), keep_states, (), ou=True) for a in alphas}
    if start_step in rec_at:
        rec.record(0, U)
        for a in alphas:
            erec[a].record(0, E[a], U)
    for n in range(start_step, stop):
        dW = increments_batch(seeds, g, n)
        U, f = stepper.advance(U, dW)
        _check_finite(U, n + 1, seeds)
        for a in alphas:
            E[a] = stepper.advance_ou(E[a], f, a)
        i = rec_at.get(n + 1)
        if i is not None:
            rec.record(i, U)
            for a in alphas:
                erec[a].record(i, E[a], U)
    times = np.array(steps, dtype=float) * g.dt
    u_paths = rec.paths(seeds, times)
    eta_paths = {a: erec[a].paths(seeds, times, alpha=a) for a in alphas}
    return u_paths, eta_paths, U, E


def simulate_path(c, keep_states=True, observables=()):
    """Single path from ``c.u0`` with noise keyed on ``c.seed``."""
    paths, _, _, _ = run_batch(c, [c.seed], keep_states=keep_states, observables=observables)
    return paths[0]


def stopping_time_tau_N(p, N):
    """First recorded time with ||u||_{2,rho} >= N, or None."""
    hit = np.nonzero(np.asarray(p.norms_2rho) >= N)[0]
    return float(p.times[hit[0]]) if hit.size else None


@dataclass
class PicardResult:
    state: np.ndarray
    trajectory: np.ndarray
    distances: list
    iterations: int


def picard_mild_solve(c, max_iter=60, tol=1e-10, noise_quadrature="cell_average"):
    """Fixed point of the discrete mild operator on the grid time axis.

    u^{j+1}(t_n) = S(t_n) u0 + sum_{m<n} [ -k S(t_n - t_m)(|v_m| v_m) dt
                   + 1/2 S^(t_n - t_m - dt/2)(v_m^2) dt + Q_{n-m} sigma(v_m) dW_m / dx ]

    with v_m = pi_N u^j(t_m) and S^ the derivative semigroup, evaluated at
    the cell-midpoint lag to stay off its singularity. The stochastic term
    uses Q_l = kernel averaged over the lag cell [(l-1)dt, l dt] and over the
    source cell (``noise_quadrature="cell_average"``), or Q_l = S(l dt)
    (``"left"``). Iteration starts from the free heat evolution and stops once
    the sup over time of the weighted L2 distance between iterates is < tol.
    """
    g = c.grid
    nt, dt, dx = g.nt, g.dt, g.dx
    S = [None] + [semigroup_matrix(l * dt, g) for l in range(1, nt + 1)]
    Sh = [None] + [deriv_semigroup_matrix((l - 0.5) * dt, g, min_width=0.5)
                   for l in range(1, nt + 1)] if c.flux else None
    if noise_quadrature == "cell_average":
        Q = [None] + [cell_average_matrix((l - 1) * dt, l * dt, g) for l in range(1, nt + 1)]
    elif noise_quadrature == "left":
        Q = S
    else:
        raise InvalidInputError(f"unknown noise quadrature {noise_quadrature!r}")
    dW = np.array([sample_increments(c.seed, g, m).increments for m in range(nt)])
    x = g.x

    base = np.empty((nt + 1, g.nx))
    base[0] = c.u0
    for l in range(1, nt + 1):
        base[l] = c.u0 @ S[l].T

    def operator(U):
        V = U[:-1]
        if c.truncation_N is not None:
            V = truncate_pi_N(V, c.truncation_N, c.weight, g)
        out = base.copy()
        damp = -dt * c.k * np.abs(V) * V if c.k != 0 else None
        noise = sigma_eval(c.sigma, x, V) * dW / dx if not c.sigma.is_zero else None
        for l in range(1, nt + 1):
            if damp is not None:
                out[l:] += damp[: nt + 1 - l] @ S[l].T
            if noise is not None:
                out[l:] += noise[: nt + 1 - l] @ Q[l].T
            if Sh is not None:
                out[l:] += (0.5 * dt * V[: nt + 1 - l] ** 2) @ Sh[l].T
        return out

    U = base
    distances = []
    for j in range(1, max_iter + 1):
        Un = operator(U)
        d = float(np.max(weighted_norm(Un - U, 2, c.weight, g)))
        distances.append(d)
        U = Un
        if not np.all(np.isfinite(U)):
            raise IterationError(j, math.inf)
        if d < tol:
            return PicardResult(U[-1].copy(), U, distances, j)
    raise IterationError(max_iter, distances[-1])


def relative_weighted_distance(a, b, w, grid):
    return float(weighted_norm(a - b, 2, w, grid) / weighted_norm(b, 2, w, grid))
