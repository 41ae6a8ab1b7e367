"""Weight functions, grids and weighted L^p norms.

Two weight families are supported, ``exp(m|x|)`` and ``(1 + x^2)^r``.
Grid functions are plain numpy arrays whose last axis runs over the
``nx`` nodes of a :class:`SpaceTimeGrid`; integrals use the midpoint
(cell-centred) rule, which on the uniform node set is ``sum(f) * dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidInputError, ResolutionError

# exp(40) ~ 2.4e17, comfortably inside double range even after squaring
MAX_EXP_ARG = 40.0


@dataclass(frozen=True)
class WeightFunction:
    kind: str = "exponential"
    m: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        if self.kind == "exponential":
            if not self.m > 0:
                raise InvalidInputError(f"exponential weight needs m > 0, got {self.m}")
        elif self.kind == "polynomial":
            if not self.r >= 1:
                raise InvalidInputError(f"polynomial weight needs r >= 1, got {self.r}")
        else:
            raise InvalidInputError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def exponential(cls, m):
        return cls("exponential", m=float(m))

    @classmethod
    def polynomial(cls, r):
        return cls("polynomial", r=float(r))

    @property
    def Cstar(self):
        """Constant with |rho'| <= Cstar * rho."""
        return self.m if self.kind == "exponential" else self.r

    def __call__(self, x):
        return eval_weight(self, x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            return np.sign(x) * self.m * eval_weight(self, x)
        return 2.0 * self.r * x * (1.0 + x * x) ** (self.r - 1.0)

    def to_dict(self):
        if self.kind == "exponential":
            return {"kind": self.kind, "m": self.m}
        return {"kind": self.kind, "r": self.r}


def eval_weight(w, x):
    x = np.asarray(x, dtype=float)
    if w.kind == "exponential":
        out = np.exp(np.minimum(w.m * np.abs(x), MAX_EXP_ARG))
    else:
        out = (1.0 + x * x) ** w.r
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid on [-L, L] x [0, T].

    ``dt`` defaults to the stability limit ``dx^2 / 2``; it is shrunk so that
    an integer number of steps lands exactly on ``T``.
    """

    L: float
    nx: int
    T: float
    dt: float | None = None
    nt: int = field(init=False)

    def __post_init__(self):
        if not (self.L > 0 and self.T > 0):
            raise InvalidInputError("grid needs L > 0 and T > 0")
        if int(self.nx) != self.nx or self.nx < 3:
            raise InvalidInputError(f"grid needs an integer nx >= 3, got {self.nx}")
        dx = 2.0 * self.L / (self.nx - 1)
        limit = 0.5 * dx * dx
        dt = limit if self.dt is None else float(self.dt)
        if not dt > 0:
            raise InvalidInputError("dt must be positive")
        if dt > limit * (1 + 1e-12):
            raise InvalidInputError(f"dt={dt:.3e} exceeds the diffusion limit dx^2/2={limit:.3e}")
        nt = max(1, math.ceil(self.T / dt - 1e-9))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", nt)
        object.__setattr__(self, "dt", self.T / nt)

    @property
    def dx(self):
        return 2.0 * self.L / (self.nx - 1)

    @property
    def x(self):
        return np.linspace(-self.L, self.L, self.nx)

    @property
    def times(self):
        return np.arange(self.nt + 1) * self.dt

    def with_horizon(self, T):
        """Same spacing and step, different horizon."""
        return SpaceTimeGrid(self.L, self.nx, T, dt=self.dt)

    def to_dict(self):
        return {"L": self.L, "nx": self.nx, "T": self.T, "dt": self.dt}


def _finite(u):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InvalidInputError("grid function has non-finite values")
    return u


def weighted_integral(f, w, grid):
    """Midpoint quadrature of f * rho over the grid (last axis)."""
    return np.sum(np.asarray(f) * eval_weight(w, grid.x), axis=-1) * grid.dx


def weighted_norm(u, p, w, grid):
    """Discrete ``||u||_{p,rho} = (sum |u_j|^p rho(x_j) dx)^(1/p)``.

    Works row-wise on a stack of grid functions.
    """
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    u = _finite(u)
    if u.shape[-1] != grid.nx:
        raise InvalidInputError(f"expected {grid.nx} nodes, got {u.shape[-1]}")
    a = np.abs(u)
    powered = a * a if p == 2 else a**p
    return weighted_integral(powered, w, grid) ** (1.0 / p)


def check_weight_admissible(w, half_width=10.0, samples=1024):
    """Sample |rho'| / rho on a uniform cloud and compare with Cstar."""
    xs = np.linspace(-half_width, half_width, samples)
    ratio = np.abs(w.derivative(xs)) / eval_weight(w, xs)
    max_ratio = float(ratio.max())
    return {
        "Cstar": w.Cstar,
        "max_ratio": max_ratio,
        "ok": bool(max_ratio <= w.Cstar * (1 + 1e-12)),
    }


def _kernel_mass_ratio(w, t, x, dx):
    # (G(t) * rho)(x) / rho(x) by midpoint sums on the lattice x + k dx
    K = int(math.ceil(8.0 * math.sqrt(4.0 * t) / dx))
    k = np.arange(-K, K + 1) * dx
    g = np.exp(-k * k / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
    y = x[:, None] + k[None, :]
    return (eval_weight(w, y) @ g) * dx / eval_weight(w, x)


def estimate_C_rho(w, T, grid, t_samples=None):
    """Empirical ``C_rho(T) = max_{t<=T, x} (G(t) * rho)(x) / rho(x)``.

    The convolution integral runs over the whole line (rho is known in
    closed form), sampled on the grid spacing.
    """
    if not T > 0:
        raise DomainError("T must be positive")
    dx = grid.dx
    if t_samples is None:
        t_lo = min(T, dx * dx)
        t_samples = np.geomspace(t_lo, T, 24) if T > t_lo else np.array([T])
    t_samples = np.asarray(t_samples, dtype=float)
    if np.any(np.sqrt(4.0 * t_samples) < dx):
        raise ResolutionError(
            f"sqrt(4 t)={math.sqrt(4.0 * t_samples.min()):.3e} below dx={dx:.3e}"
        )
    x = grid.x
    return float(max(_kernel_mass_ratio(w, t, x, dx).max() for t in t_samples))


def C_rho_profile(w, t_samples, grid):
    """Per-t maxima used by estimate_C_rho (for monotonicity checks)."""
    dx = grid.dx
    return np.array([_kernel_mass_ratio(w, t, grid.x, dx).max() for t in t_samples])
