"""A-priori estimates checked on simulated paths.

Covers the energy bound for v = u - eta, the weighted Poincare inequality,
time-averaged exceedance of weighted-norm balls and the sensitivity of
paired paths to the initial condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, InvalidInputError
from .noise import increments_batch
from .solver import EPS_POLICY, Stepper
from .weights import weighted_norm


def compute_R1(eta_path, k, Cstar, eps=EPS_POLICY, upto=None):
    """R_1(eta) from the recorded rho-norms of eta.

    ``upto`` limits the suprema to the first ``upto + 1`` records; by default
    they run over the whole path.
    """
    e2, e3, e4 = eps
    try:
        n3, n4, n6 = (np.asarray(eta_path.extra_norms[f"{p}_rho"]) for p in (3, 4, 6))
    except KeyError as exc:
        raise ConfigurationError(f"eta path lacks norm record {exc.args[0]}") from None
    if upto is not None:
        n3, n4, n6 = n3[: upto + 1], n4[: upto + 1], n6[: upto + 1]
    return R1_from_sups(float(n3.max()), float(n4.max()), float(n6.max()), k, Cstar, eps)


def R1_from_sups(s3, s4, s6, k, Cstar, eps=EPS_POLICY):
    e2, e3, e4 = eps
    a3 = 4.0 * k / (3.0 * e2**2) + 2.0 * Cstar / (3.0 * e3**2)
    a4 = Cstar / 2.0 + 1.0 + k
    a6 = 4.0 / (3.0 * e4**2)
    return a3 * s3**3 + a4 * s4**4 + a6 * s6**6


def _running_R1(eta_path, k, Cstar, eps):
    n3, n4, n6 = (np.maximum.accumulate(np.asarray(eta_path.extra_norms[f"{p}_rho"]))
                  for p in (3, 4, 6))
    return R1_from_sups(n3, n4, n6, k, Cstar, eps)


@dataclass(frozen=True)
class EnergyReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    R1_value: float
    slack_factor: float

    @property
    def slack(self):
        """Smallest rhs / lhs over steps (inf when v vanishes)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.lhs > 0, self.rhs / self.lhs, np.inf)
        return float(r.min())

    @property
    def holds(self):
        return bool(np.all(self.lhs <= self.slack_factor * self.rhs))


def energy_exponent(Cstar, k):
    return 2.0 * Cstar**2 / 3.0 + Cstar / 2.0 + k


def energy_bound_check(u_path, eta_path, c, slack_factor=2.0, eps=EPS_POLICY):
    """||v(t)||^2 against (||u0||^2 + t R_1) exp(t (2C*^2/3 + C*/2 + k)), per step.

    eta must be the plain convolution (alpha = 0) driven by the same noise.
    R_1 at time t uses suprema over [0, t], which is the sharper reading.
    """
    if eta_path.alpha not in (None, 0, 0.0):
        raise ConfigurationError("energy bound needs the alpha = 0 convolution")
    if not np.array_equal(u_path.times, eta_path.times):
        raise ConfigurationError("u and eta paths live on different time axes")
    if "v2_rho" in eta_path.extra_norms and np.all(np.isfinite(eta_path.extra_norms["v2_rho"])):
        v2 = np.asarray(eta_path.extra_norms["v2_rho"])
    elif u_path.states is not None and eta_path.states is not None:
        v2 = weighted_norm(u_path.states - eta_path.states, 2, c.weight, c.grid)
    else:
        raise ConfigurationError("need recorded v norms or stored states")
    Cs = c.weight.Cstar
    t = np.asarray(u_path.times)
    R1 = _running_R1(eta_path, c.k, Cs, eps)
    u0 = weighted_norm(c.u0, 2, c.weight, c.grid) ** 2
    rhs = (u0 + t * R1) * np.exp(t * energy_exponent(Cs, c.k))
    return EnergyReport(t, v2**2, rhs, float(R1[-1]), slack_factor)


def poincare_constant(mhat):
    """Bounded-region constant (2 - mhat^2) / 4."""
    if not 0 <= mhat < math.sqrt(2.0):
        raise DomainError(f"need 0 <= mhat < sqrt(2), got {mhat}")
    return (2.0 - mhat * mhat) / 4.0


def poincare_check(u, mhat, grid, guard=3):
    """Discrete int |u_x|^2 rhohat against C~ int |u|^2 rhohat.

    u_x by central differences at interior nodes. The outer ``guard`` nodes
    on each side must be zero.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.nx,):
        raise InvalidInputError(f"expected {grid.nx} nodes")
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    edge = np.concatenate([u[:guard], u[-guard:]])
    if np.any(np.abs(edge) > 1e-14 * max(scale, 1.0)):
        raise DomainError("support reaches the boundary guard")
    rho = np.exp(mhat * np.abs(grid.x))
    ux = (u[2:] - u[:-2]) / (2.0 * grid.dx)
    lhs = float(np.sum(ux * ux * rho[1:-1]) * grid.dx)
    rhs = float(poincare_constant(mhat) * np.sum(u * u * rho) * grid.dx)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs >= rhs}


def random_bump(rng, grid, max_support=math.pi):
    """Gaussian times a smooth cutoff, supported on an interval of length <= max_support."""
    half = 0.5 * rng.uniform(0.3, 1.0) * max_support
    centre = rng.uniform(-grid.L + half + 0.5, grid.L - half - 0.5)
    y = (grid.x - centre) / half
    inside = np.abs(y) < 1
    cut = np.zeros_like(y)
    cut[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
    width = rng.uniform(0.2, 2.0) * half
    shift = rng.uniform(-0.5, 0.5) * half
    return rng.uniform(0.1, 10.0) * cut * np.exp(-((grid.x - centre - shift) / width) ** 2)


@dataclass(frozen=True)
class ExceedanceStat:
    R: float
    T: float
    frequency: float


def exceedance_stat(paths, R, weight="rhohat"):
    """Time-and-ensemble average of 1{||u(t)|| > R} over t > 0."""
    paths = list(paths)
    Ts = {float(p.times[-1]) for p in paths}
    if len(Ts) != 1:
        raise InvalidInputError(f"paths have different horizons {sorted(Ts)}")
    norms = np.array([(p.norms_2rhohat if weight == "rhohat" else p.norms_2rho)[1:] for p in paths])
    return ExceedanceStat(float(R), Ts.pop(), float(np.mean(norms > R)))


def exceedance_curve(paths, R_grid, eps=0.05, weight="rhohat"):
    """Stats over an increasing R grid and the smallest R with frequency <= eps."""
    stats = [exceedance_stat(paths, R, weight) for R in sorted(R_grid)]
    R_eps = next((s.R for s in stats if s.frequency <= eps), None)
    return stats, R_eps


def initial_condition_sensitivity(c, u01, u02, N, ensemble, seed0=0):
    """E ||u1 - u2||^2_{2,rho} at T (stopped at the first exit of either path
    from the N-ball), divided by ||u01 - u02||^2_{2,rho}."""
    u01 = np.asarray(u01, dtype=float)
    u02 = np.asarray(u02, dtype=float)
    gap0 = weighted_norm(u01 - u02, 2, c.weight, c.grid) ** 2
    g = c.grid
    seeds = [seed0 + i for i in range(int(ensemble))]
    st = Stepper(c)
    U1 = np.tile(u01, (len(seeds), 1))
    U2 = np.tile(u02, (len(seeds), 1))
    live = np.ones(len(seeds), dtype=bool)
    stopped = 0
    for n in range(g.nt):
        dW = increments_batch(seeds, g, n)
        A, _ = st.advance(U1, dW)
        B, _ = st.advance(U2, dW)
        U1[live] = A[live]
        U2[live] = B[live]
        out = (weighted_norm(U1, 2, c.weight, g) >= N) | (weighted_norm(U2, 2, c.weight, g) >= N)
        stopped += int(np.sum(live & out))
        live &= ~out
    num = weighted_norm(U1 - U2, 2, c.weight, g) ** 2
    mean = float(num.mean())
    return {
        "numerator": mean,
        "gap": float(gap0),
        "ratio": mean / gap0 if gap0 > 0 else math.nan,
        "stopped": stopped,
        "ensemble": len(seeds),
    }
