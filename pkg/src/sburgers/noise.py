"""Brownian-sheet increments and the multiplicative noise coefficient.

Increments are generated by a counter-based generator (Philox) keyed on
the path seed, with the time-step index placed in the counter. A slab is
therefore a pure function of ``(seed, step_index, grid)``: paths can be
advanced in any order, split across workers, or resumed from a
checkpoint without changing a single bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidInputError

SIGMA_KINDS = ("bounded_sin", "saturating", "constant_zero")


@dataclass(frozen=True)
class NoiseSlab:
    step_index: int
    increments: np.ndarray
    variance: float


def _generator(seed, step_index):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidInputError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, int(step_index), 0, 0]))


def sample_increments(seed, grid, step_index):
    """i.i.d. N(0, dt dx) increments, one per node, for time step ``step_index``."""
    if not 0 <= step_index < grid.nt:
        raise InvalidInputError(f"step_index {step_index} outside [0, {grid.nt})")
    var = grid.dt * grid.dx
    z = _generator(seed, step_index).standard_normal(grid.nx)
    z *= math.sqrt(var)
    z.setflags(write=False)
    return NoiseSlab(int(step_index), z, var)


def increments_batch(seeds, grid, step_index):
    """Stack of slabs for several paths at one step, shape (len(seeds), nx)."""
    out = np.empty((len(seeds), grid.nx))
    scale = math.sqrt(grid.dt * grid.dx)
    for i, s in enumerate(seeds):
        out[i] = _generator(s, step_index).standard_normal(grid.nx)
    out *= scale
    return out


@dataclass(frozen=True)
class SigmaCoefficient:
    """sigma(x, u) with |sigma| <= b(x) = exp(-beta |x|)."""

    kind: str = "bounded_sin"
    b_decay: float = 1.0
    lipschitz: float = 1.0

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise InvalidInputError(f"unknown sigma kind {self.kind!r}")
        if not self.b_decay > 0:
            raise InvalidInputError("b_decay must be positive")

    @property
    def is_zero(self):
        return self.kind == "constant_zero"

    def b(self, x):
        return np.exp(-self.b_decay * np.abs(np.asarray(x, dtype=float)))

    def __call__(self, x, u):
        return sigma_eval(self, x, u)

    def to_dict(self):
        return {"kind": self.kind, "beta": self.b_decay, "lipschitz": self.lipschitz}


def sigma_eval(s, x, u):
    u = np.asarray(u, dtype=float)
    if s.kind == "constant_zero":
        out = np.zeros(np.broadcast(np.asarray(x), u).shape)
    elif s.kind == "bounded_sin":
        out = s.b(x) * np.sin(u)
    else:
        out = s.b(x) * u / (1.0 + np.abs(u))
    return out if out.ndim else float(out)


def b_norm_squared(s, mhat):
    """||b||^2 in L^2 weighted by exp(mhat |x|), by quadrature; inf if divergent."""
    rate = 2.0 * s.b_decay - mhat
    if rate <= 0:
        return math.inf
    val, _ = integrate.quad(lambda x: math.exp(-rate * x), 0.0, math.inf)
    return 2.0 * val


def check_A1(s, sample_count, mhat, seed=0, spread=10.0):
    """Randomised check of |sigma| <= b and the Lipschitz bound, plus b in L^2_rhohat."""
    if sample_count < 1:
        raise InvalidInputError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-spread, spread, sample_count)
    u = rng.standard_normal(sample_count) * rng.choice([0.1, 1.0, 10.0, 100.0], sample_count)
    v = u + rng.standard_normal(sample_count) * rng.choice([1e-3, 0.1, 1.0, 10.0], sample_count)
    su, sv = sigma_eval(s, x, u), sigma_eval(s, x, v)
    bound_ok = bool(np.all(np.abs(su) <= s.b(x) * (1 + 1e-12)))
    lip_ok = bool(np.all(np.abs(su - sv) <= s.lipschitz * np.abs(u - v) * (1 + 1e-12) + 1e-300))
    nb2 = b_norm_squared(s, mhat)
    integrable = math.isfinite(nb2)
    return {
        "bound_ok": bound_ok,
        "lipschitz_ok": lip_ok,
        "integrable": integrable,
        "b_norm": math.sqrt(nb2),
        "b_norm_sq": nb2,
        "ok": bound_ok and lip_ok and integrable,
    }
