"""Time-averaged empirical laws of scalar observables and their diagnostics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError, InvalidInputError
from .weights import weighted_norm

OBS_KINDS = ("norm_2rho", "norm_2rhohat", "point_eval", "mode_projection")
BURN_IN = 1.0


@dataclass(frozen=True)
class Observable:
    """Scalar function of a grid state.

    ``param`` is x0 for point_eval (nearest node) and the sine-mode index j
    for mode_projection, sin(j pi (x + L) / (2L)) on [-L, L].
    """

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in OBS_KINDS:
            raise InvalidInputError(f"unknown observable {self.kind!r}")
        if self.kind == "mode_projection" and (int(self.param) != self.param or self.param < 1):
            raise InvalidInputError("mode index must be a positive integer")

    @classmethod
    def norm(cls, weight="rho"):
        return cls("norm_2rho" if weight == "rho" else "norm_2rhohat")

    @property
    def key(self):
        if self.kind in ("norm_2rho", "norm_2rhohat"):
            return self.kind
        if self.kind == "point_eval":
            return f"point_eval({self.param:g})"
        return f"mode_projection({int(self.param)})"

    @property
    def description(self):
        return {
            "norm_2rho": "weighted L2 norm under rho",
            "norm_2rhohat": "weighted L2 norm under rhohat",
            "point_eval": f"u at the node nearest x = {self.param:g}",
            "mode_projection": f"sine-mode coefficient j = {int(self.param)}",
        }[self.kind]

    def evaluate(self, U, c):
        """Row-wise on a stack (P, nx); returns shape (P,)."""
        g = c.grid
        U = np.atleast_2d(U)
        if self.kind == "norm_2rho":
            return weighted_norm(U, 2, c.weight, g)
        if self.kind == "norm_2rhohat":
            return weighted_norm(U, 2, c.weight_hat, g)
        if self.kind == "point_eval":
            if abs(self.param) > g.L:
                raise DomainError(f"x0={self.param} outside the domain")
            return U[:, int(np.argmin(np.abs(g.x - self.param)))].copy()
        phi = np.sin(int(self.param) * math.pi * (g.x + g.L) / (2.0 * g.L))
        # row-wise sum rather than a matrix product: batch-size independent bits
        return np.sum(U * phi, axis=-1) * (g.dx / g.L)


class EmpiricalMeasure:
    """Weighted point masses on the line, held in canonical (sorted) order."""

    def __init__(self, values, weights=None):
        v = np.asarray(values, dtype=float).ravel()
        w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise InvalidInputError("values and weights differ in length")
        if v.size == 0:
            raise InvalidInputError("empty measure")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise InvalidInputError("non-finite sample")
        if np.any(w <= 0):
            raise InvalidInputError("weights must be positive")
        order = np.lexsort((w, v))
        self.values = v[order]
        self.weights = w[order]
        self.values.setflags(write=False)
        self.weights.setflags(write=False)
        self.total_weight = math.fsum(self.weights)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return (isinstance(other, EmpiricalMeasure)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.weights, other.weights))

    def merge(self, other):
        return EmpiricalMeasure(np.concatenate([self.values, other.values]),
                                np.concatenate([self.weights, other.weights]))

    def mean(self):
        return float(np.dot(self.values, self.weights) / self.total_weight)

    def variance(self):
        m = self.mean()
        return float(np.dot((self.values - m) ** 2, self.weights) / self.total_weight)

    def quantile(self, q):
        """Left-continuous inverse of the weighted CDF."""
        if not 0 <= q <= 1:
            raise InvalidInputError("q must lie in [0, 1]")
        cdf = np.cumsum(self.weights) / self.total_weight
        i = int(np.searchsorted(cdf, q - 1e-15, side="left"))
        return float(self.values[min(i, len(self) - 1)])

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["value", "weight"])
        for v, w in zip(self.values, self.weights):
            wr.writerow([repr(float(v)), repr(float(w))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["value", "weight"]:
            raise InvalidInputError("expected a value,weight header")
        data = np.array(rows[1:], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1])


def _values(path, obs):
    if obs.key in path.observables:
        return np.asarray(path.observables[obs.key])
    if obs.kind == "norm_2rho":
        return np.asarray(path.norms_2rho)
    if obs.kind == "norm_2rhohat":
        return np.asarray(path.norms_2rhohat)
    raise InvalidInputError(f"path has no record of {obs.key}")


def time_average_law(paths, obs, t_lo, t_hi):
    """Law of obs(u(t)) pooled over paths and recorded times in (t_lo, t_hi].

    The window is open on the left so adjacent windows partition the samples.
    """
    if not (0 <= t_lo < t_hi):
        raise DomainError("need 0 <= t_lo < t_hi")
    vals = []
    for p in paths:
        t = np.asarray(p.times)
        if t_hi > t[-1] + 1e-9:
            raise DomainError(f"t_hi={t_hi} beyond horizon {t[-1]}")
        tol = 1e-9 * max(1.0, t[-1])
        sel = (t > t_lo + tol) & (t <= t_hi + tol)
        vals.append(_values(p, obs)[sel])
    vals = np.concatenate(vals) if vals else np.empty(0)
    if vals.size == 0:
        raise DomainError(f"no samples in ({t_lo}, {t_hi}]")
    return EmpiricalMeasure(vals)


def wasserstein1(mu1, mu2):
    return float(stats.wasserstein_distance(mu1.values, mu2.values, mu1.weights, mu2.weights))


def stationarity_report(paths, obs, T=None, shift_frac=0.1):
    paths = list(paths)
    if T is None:
        T = float(paths[0].times[-1])
    if T < 4:
        raise DomainError("stationarity needs T >= 4")
    d_half = wasserstein1(time_average_law(paths, obs, T / 2, 0.75 * T),
                          time_average_law(paths, obs, 0.75 * T, T))
    s = shift_frac * T
    a, b = [], []
    for p in paths:
        t = np.asarray(p.times)
        v = _values(p, obs)
        dt = t[1] - t[0]
        lag = int(round(s / dt))
        sel = np.nonzero((t > T / 2 + 1e-9 * T) & (t + lag * dt <= T + 1e-9 * T))[0]
        a.append(v[sel])
        b.append(v[sel + lag])
    d_shift = wasserstein1(EmpiricalMeasure(np.concatenate(a)), EmpiricalMeasure(np.concatenate(b)))
    return {"T": T, "d_half": d_half, "d_shift": d_shift}


def tightness_report(paths, radii, burn_in=BURN_IN, weight="rhohat"):
    """Fraction of post-burn-in samples outside the weighted-norm ball of radius r."""
    norms = []
    for p in paths:
        n = p.norms_2rhohat if weight == "rhohat" else p.norms_2rho
        norms.append(np.asarray(n)[np.asarray(p.times) > burn_in])
    norms = np.concatenate(norms)
    if norms.size == 0:
        raise DomainError("no samples after burn-in")
    return [{"r": float(r), "tail_mass": float(np.mean(norms > r))} for r in radii]
