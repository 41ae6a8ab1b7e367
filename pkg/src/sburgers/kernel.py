"""Heat kernel G(t, x) = (4 pi t)^(-1/2) exp(-x^2 / (4t)) and its semigroups.

``apply_semigroup`` is S(t) phi = G(t) * phi; ``apply_deriv_semigroup`` is
the operator psi -> int dG(t, x - y)/dy psi(y) dy, i.e. -S(t) psi' for
smooth psi. Both are direct windowed sums on the grid with zero extension
outside [-L, L].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import DomainError, ResolutionError
from .weights import eval_weight

INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)
# window half-width in units of sqrt(4t); Gaussian tail ~ exp(-64)
WINDOW = 8.0


def eval_G(t, x):
    if not np.all(np.asarray(t) > 0):
        raise DomainError("heat kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    out = np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * math.pi * t)
    return out if out.ndim else float(out)


def dG_dt(t, z):
    """dG/dt at separation z = x - y."""
    return eval_G(t, z) * (z * z / (4.0 * t * t) - 0.5 / t)


def dG_dy(t, z):
    """d/dy of G(t, x - y), with z = x - y."""
    return eval_G(t, z) * z / (2.0 * t)


def d2G_dydt(t, z):
    return eval_G(t, z) * (z / (2.0 * t * t)) * (z * z / (4.0 * t) - 1.5)


def _check_resolution(t, dx, min_width=1.0):
    if math.sqrt(4.0 * t) < min_width * dx:
        raise ResolutionError(f"sqrt(4t)={math.sqrt(4.0 * t):.3e} below dx={dx:.3e}")


@lru_cache(maxsize=64)
def _operator(kind, t, nx, dx):
    n = np.arange(nx)
    z = (n[:, None] - n[None, :]) * dx
    if kind == "S":
        mat = eval_G(t, z)
    else:
        mat = dG_dy(t, z)
    half = WINDOW * math.sqrt(4.0 * t)
    mat[np.abs(z) > half] = 0.0
    mat *= dx
    mat.setflags(write=False)
    return mat


def semigroup_matrix(t, grid, min_width=1.0):
    """Dense matrix of S(t) on the grid nodes (windowed, zero-extended).

    Raises ResolutionError when sqrt(4t) < min_width * dx.
    """
    _check_resolution(t, grid.dx, min_width)
    return _operator("S", float(t), grid.nx, grid.dx)


def deriv_semigroup_matrix(t, grid, min_width=1.0):
    _check_resolution(t, grid.dx, min_width)
    return _operator("dS", float(t), grid.nx, grid.dx)


def apply_semigroup(t, phi, grid):
    if not t > 0:
        raise DomainError("t must be positive")
    phi = np.asarray(phi, dtype=float)
    return phi @ semigroup_matrix(t, grid).T


def apply_deriv_semigroup(t, phi, grid):
    if not t > 0:
        raise DomainError("t must be positive")
    phi = np.asarray(phi, dtype=float)
    return phi @ deriv_semigroup_matrix(t, grid).T


@lru_cache(maxsize=64)
def _cell_average(t0, t1, nx, dx, nodes):
    v, wv = np.polynomial.legendre.leggauss(nodes)
    v = 0.5 * (v + 1.0)
    wv = 0.5 * wv
    # s = t0 + (t1 - t0) v^2 keeps the integrand smooth when t0 = 0
    s = t0 + (t1 - t0) * v * v
    jac = 2.0 * v * wv
    n = np.arange(nx)
    z = (n[:, None] - n[None, :]) * dx
    mat = np.zeros((nx, nx))
    for si, ji in zip(s, jac):
        r = 2.0 * math.sqrt(si)
        mat += ji * 0.5 * (special.erf((z + 0.5 * dx) / r) - special.erf((z - 0.5 * dx) / r))
    mat.setflags(write=False)
    return mat


def cell_average_matrix(t0, t1, grid, nodes=32):
    """Kernel averaged over lags [t0, t1] and over each source cell.

    Entry (i, j) is (1/(t1-t0)) int_{t0}^{t1} int_{cell j} G(s, x_i - y) dy ds.
    Applied to a cell-averaged white-noise slab this is the conditional mean
    of the stochastic integral over one time step.
    """
    if not (0 <= t0 < t1):
        raise DomainError("need 0 <= t0 < t1")
    return _cell_average(float(t0), float(t1), grid.nx, grid.dx, nodes)


@dataclass(frozen=True)
class KernelBoundReport:
    bound_id: str
    K: float
    C: float
    max_violation: float
    sample_count: int

    @property
    def ok(self):
        return self.max_violation <= 0.0


# |d^m_t d^n_y G| = t^{-(1+2m+n)/2} * profile(z), z = (x - y) / sqrt(t)
_PROFILES = {
    "G_bound": (0.5, lambda z: INV_SQRT_4PI * np.exp(-z * z / 4.0)),
    "dGdt": (1.5, lambda z: INV_SQRT_4PI * np.exp(-z * z / 4.0) * np.abs(z * z / 4.0 - 0.5)),
    "dGdy": (1.0, lambda z: INV_SQRT_4PI * np.exp(-z * z / 4.0) * np.abs(z) / 2.0),
    "d2Gdydt": (
        2.0,
        lambda z: INV_SQRT_4PI * np.exp(-z * z / 4.0) * np.abs(z / 2.0 * (z * z / 4.0 - 1.5)),
    ),
}

_EXACT = {
    "G_bound": lambda t, z: eval_G(t, z),
    "dGdt": dG_dt,
    "dGdy": dG_dy,
    "d2Gdydt": d2G_dydt,
}


def minimal_K(bound_id, C=0.125):
    """sup_z profile(z) * exp(C z^2) by a dense scan refined with Brent."""
    _, prof = _PROFILES[bound_id]
    f = lambda z: prof(z) * np.exp(C * z * z)
    zs = np.linspace(0.0, 20.0, 20001)
    vals = f(zs)
    i = int(np.argmax(vals))
    lo, hi = zs[max(i - 1, 0)], zs[min(i + 1, zs.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda z: -f(z), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        return float(max(vals[i], -res.fun))
    return float(vals[i])


def verify_kernel_bounds(t_samples, x_samples, C=0.125, rtol=1e-12):
    """Check |d^m_t d^n_y G(t, x)| <= K t^{-p} exp(-C x^2 / t) on all (t, x) pairs.

    K is the minimal witness from a 1-d maximisation for the fixed C.
    """
    t = np.asarray(t_samples, dtype=float)
    x = np.asarray(x_samples, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t samples must be positive")
    t, x = np.broadcast_arrays(t, x)
    reports = []
    for bound_id, (power, _) in _PROFILES.items():
        K = minimal_K(bound_id, C)
        lhs = np.abs(_EXACT[bound_id](t, x))
        rhs = K * t**-power * np.exp(-C * x * x / t)
        viol = float(np.max(lhs - rhs * (1 + rtol)))
        reports.append(KernelBoundReport(bound_id, K, C, viol, int(t.size)))
    return reports


def gauss_weight_constant(a):
    """C with int t^{-1/2} e^{-|x-y|^2/(a t)} rho_hat(y) dy <= C e^{mhat^2 a t/4} rho_hat(x).

    Over the whole line the Gaussian integral contributes twice the half-line
    value, giving 2 sqrt(a pi).
    """
    return 2.0 * math.sqrt(a * math.pi)


def gauss_weight_lhs(mhat, a, t, x, dx=None):
    """Left side by a midpoint sum on a lattice wide enough for the Gaussian."""
    from .weights import WeightFunction

    s = math.sqrt(a * t)
    if dx is None:
        dx = s / 64.0
    K = int(math.ceil(9.0 * s / dx))
    k = np.arange(-K, K + 1) * dx
    g = np.exp(-k * k / (a * t)) / math.sqrt(t)
    if mhat == 0:
        return float(g.sum() * dx)
    w = WeightFunction.exponential(mhat)
    return float(eval_weight(w, x + k) @ g * dx)


def verify_lemma42(mhat, a, t_samples, x_samples, rtol=1e-9):
    if mhat < 0:
        raise DomainError("mhat must be nonnegative")
    t = np.asarray(t_samples, dtype=float)
    x = np.asarray(x_samples, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    C = gauss_weight_constant(a) if mhat > 0 else math.sqrt(a * math.pi)
    worst = -np.inf
    for ti, xi in zip(t.ravel(), x.ravel()):
        lhs = gauss_weight_lhs(mhat, a, ti, xi)
        rho_x = math.exp(mhat * abs(xi)) if mhat > 0 else 1.0
        rhs = C * math.exp(mhat * mhat * a * ti / 4.0) * rho_x
        worst = max(worst, lhs - rhs * (1 + rtol))
    return KernelBoundReport("lemma42", C, 1.0 / a, float(worst), int(t.size))
