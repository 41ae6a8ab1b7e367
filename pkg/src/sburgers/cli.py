"""Command-line driver: run suites, parameter sweeps and checkpoint resumption.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration or
checkpoint error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, io, kernel, measure, noise, ou, solver, weights
from .errors import BlowUpError, CheckpointError, ConfigurationError, InvalidInputError, SBurgersError

SUITES = ("solve", "verify_kernels", "energy", "ou_moments", "invariant_measure", "full")
SWEEPABLE = ("alpha", "R", "nx", "dt", "k", "seed")
WORKERS_ENV = "SBURGERS_WORKERS"
CHECK_HEADER = ["check_id", "parameters", "lhs", "rhs", "slack", "verdict"]


@dataclass
class Check:
    check_id: str
    parameters: dict
    lhs: float
    rhs: float
    relation: str = "<="

    @property
    def slack(self):
        """Margin in favour of the check: positive iff it passes (ties aside)."""
        if self.relation in ("<=", "<"):
            return self.rhs - self.lhs
        return self.lhs - self.rhs

    @property
    def verdict(self):
        a, b = self.lhs, self.rhs
        if any(isinstance(v, float) and math.isnan(v) for v in (a, b)):
            return False
        return {"<=": a <= b, "<": a < b, ">=": a >= b, ">": a > b}[self.relation]

    def row(self):
        return [self.check_id, self.parameters, self.lhs, self.rhs, self.slack,
                "pass" if self.verdict else "fail"]


@dataclass
class SuiteResult:
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)


def worker_count():
    v = os.environ.get(WORKERS_ENV)
    if v is None:
        return os.cpu_count() or 1
    try:
        n = int(v)
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {v!r}") from None
    return max(1, n)


def _chunk(seq, n):
    n = max(1, min(n, len(seq)))
    size = math.ceil(len(seq) / n)
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def _batch_job(args):
    c, seeds, kw = args
    return solver.run_batch(c, seeds, **kw)[:2]


def run_ensemble(c, seeds, workers=None, **kw):
    """run_batch split over seed chunks; rows are independent, so the result
    does not depend on the chunking."""
    workers = worker_count() if workers is None else workers
    chunks = _chunk(list(seeds), workers)
    jobs = [(c, ch, kw) for ch in chunks]
    if len(jobs) == 1:
        results = [_batch_job(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as ex:
            results = list(ex.map(_batch_job, jobs))
    u_paths, eta = [], {}
    for up, ep in results:
        u_paths.extend(up)
        for a, lst in ep.items():
            eta.setdefault(a, []).extend(lst)
    return u_paths, eta


# -- suites ----------------------------------------------------------------


def _validation(cfg, c, out, result, gate=None):
    """Write validation.csv; with gate in {"base", "long_time", "all"} add rows as checks."""
    rep = solver.validate_config(c)
    rows = rep["thresholds"]
    io.write_csv(out / "validation.csv", ["name", "value", "threshold", "relation", "passed", "long_time"],
                 [[r["name"], r["value"], r["threshold"], r["relation"], r["passed"], r["long_time"]]
                  for r in rows])
    result.files.append("validation.csv")
    if gate is None:
        return rep
    for r in rows:
        if gate == "base" and r["long_time"]:
            continue
        result.checks.append(Check(f"validate:{r['name']}", {}, r["value"], r["threshold"], r["relation"]))
    return rep


def _heat_oracle(cfg, c):
    u0 = cfg["u0"]
    if not (c.sigma.is_zero and c.k == 0 and not c.flux and u0["kind"] == "gaussian"):
        return None
    a, w, x0 = u0.get("amplitude", 1.0), u0.get("width", 1.0), u0.get("center", 0.0)
    s2 = w * w + 2.0 * c.grid.T
    return a * w / math.sqrt(s2) * np.exp(-((c.grid.x - x0) ** 2) / (2.0 * s2))


def _solve_segments(c, seeds, record_every, start_step, stop_step, U, norms, checkpoint, every, header):
    """Advance from start_step to stop_step in checkpointed segments."""
    g = c.grid
    every = max(record_every, (every // record_every) * record_every) if every else g.nt
    n = start_step
    while n < stop_step:
        m = min(stop_step, n + every)
        if m < g.nt:
            m = max(n + record_every, (m // record_every) * record_every)
        up, _, U, _ = solver.run_batch(c, seeds, u_start=U, start_step=n, stop_step=m,
                                       record_every=record_every)
        seg = np.stack([np.stack([p.norms_2rho, p.norms_2rhohat], axis=-1) for p in up])
        seg_steps = np.rint(up[0].times / g.dt).astype(int)
        keep = seg_steps > n
        norms["steps"] = np.concatenate([norms["steps"], seg_steps[keep]])
        norms["values"] = np.concatenate([norms["values"], seg[:, keep]], axis=1)
        n = m
        if checkpoint is not None:
            hdr = dict(header, step=n)
            io.write_checkpoint(checkpoint, hdr, {
                "U": U, "steps": norms["steps"].astype(float), "norms": norms["values"],
            })
    return U, norms


def suite_solve(cfg, out, seeds, state=None, stop_after=None):
    result = SuiteResult()
    c = io.build_sim_config(cfg, seeds[0])
    _validation(cfg, c, out, result)
    g = c.grid
    sp = cfg["suite_params"]
    record_every = int(sp.get("record_every", 1))
    every = int(sp.get("checkpoint_every", 0))
    ckpt = out / "checkpoint.sbrg"
    header = {"config": cfg, "config_hash": io.config_hash(cfg), "seeds": seeds,
              "suite": "solve", "nt": g.nt, "record_every": record_every}
    if state is None:
        U = np.tile(c.u0, (len(seeds), 1))
        init = np.stack([weights.weighted_norm(U, 2, c.weight, g),
                         weights.weighted_norm(U, 2, c.weight_hat, g)], axis=-1)
        norms = {"steps": np.array([0]), "values": init[:, None, :]}
        start = 0
    else:
        U, norms, start = state
    stop = g.nt if stop_after is None else min(g.nt, int(stop_after))
    try:
        U, norms = _solve_segments(c, seeds, record_every, start, stop, U, norms, ckpt,
                                   every or (stop - start), header)
    except BlowUpError as exc:
        result.checks.append(Check("no_blowup", {"step": exc.step}, 1.0, 0.0))
        return result
    if stop < g.nt:
        return None
    times = norms["steps"] * g.dt
    rows = []
    for j, s in enumerate(seeds):
        for i, st in enumerate(norms["steps"]):
            rows.append([s, int(st), times[i], norms["values"][j, i, 0], norms["values"][j, i, 1]])
    io.write_csv(out / "norms.csv", ["seed", "step", "t", "norm_2rho", "norm_2rhohat"], rows)
    io.write_csv(out / "final_state.csv", ["seed", "x", "u"],
                 [[s, x, u] for j, s in enumerate(seeds) for x, u in zip(g.x, U[j])])
    result.files += ["norms.csv", "final_state.csv"]
    result.checks.append(Check("no_blowup", {"seeds": len(seeds)}, 0.0, 0.0))
    exact = _heat_oracle(cfg, c)
    if exact is not None:
        err = float(np.max(np.abs(U - exact)))
        result.checks.append(Check("heat_oracle", {"nx": g.nx, "T": g.T}, err,
                                   float(sp.get("heat_tol", 1e-3))))
    for s in seeds[: int(sp.get("picard_seeds", 0))]:
        cs = c.replace(seed=s)
        pic = solver.picard_mild_solve(cs)
        d = solver.relative_weighted_distance(pic.state, _final(cs), c.weight, g)
        result.checks.append(Check("picard_discrepancy", {"seed": s, "nx": g.nx}, d,
                                   float(sp.get("picard_tol", 0.05))))
        dist = np.asarray(pic.distances)
        worst = float(np.max(np.diff(dist[1:]))) if dist.size > 2 else -1.0
        result.checks.append(Check("picard_decreasing", {"seed": s, "iterations": pic.iterations},
                                   worst, 0.0, "<"))
    result.files.append("checkpoint.sbrg")
    return result


def _final(c):
    up, _, U, _ = solver.run_batch(c, [c.seed])
    return U[0]


def suite_verify_kernels(cfg, out, seeds):
    result = SuiteResult()
    c = io.build_sim_config(cfg, seeds[0])
    _validation(cfg, c, out, result)
    sp = cfg["suite_params"]
    n = int(sp.get("kernel_samples", 10000))
    rng = np.random.default_rng(int(sp.get("sample_seed", 0)))
    t = np.exp(rng.uniform(math.log(1e-3), math.log(10.0), n))
    x = rng.uniform(-10.0, 10.0, n)
    rows = []
    for rep in kernel.verify_kernel_bounds(t, x):
        rows.append([rep.bound_id, rep.K, rep.C, rep.max_violation, rep.sample_count])
        result.checks.append(Check(f"kernel:{rep.bound_id}", {"K": rep.K, "C": rep.C, "samples": n},
                                   rep.max_violation, 0.0))
    io.write_csv(out / "kernel_bounds.csv", ["bound_id", "K", "C", "max_violation", "samples"], rows)
    result.files.append("kernel_bounds.csv")
    wh = c.weight_hat
    if wh.kind == "exponential":
        a = 4.0
        m = int(sp.get("weighted_kernel_samples", 200))
        rep = kernel.verify_lemma42(wh.m, a, np.exp(rng.uniform(math.log(1e-2), 0.0, m)),
                                    rng.uniform(-10.0, 10.0, m))
        result.checks.append(Check("lemma42", {"mhat": wh.m, "a": a, "C": rep.K}, rep.max_violation, 0.0))
    for tag, w in (("rho", c.weight), ("rhohat", c.weight_hat)):
        adm = weights.check_weight_admissible(w)
        result.checks.append(Check(f"weight_admissible:{tag}", w.to_dict(), adm["max_ratio"],
                                   adm["Cstar"] * (1 + 1e-12)))
        if w.kind == "exponential":
            T = c.grid.T
            Cr = weights.estimate_C_rho(w, T, c.grid)
            result.checks.append(Check(f"C_rho:{tag}", {"T": T, **w.to_dict()}, Cr,
                                       2.0 * math.exp(w.m**2 * T)))
    a1 = noise.check_A1(c.sigma, int(sp.get("sigma_samples", 10000)),
                        wh.m if wh.kind == "exponential" else 0.0)
    result.checks.append(Check("sigma_A1", c.sigma.to_dict(), 0.0 if a1["ok"] else 1.0, 0.0))
    if wh.kind == "exponential" and wh.m < math.sqrt(2.0):
        pg = weights.SpaceTimeGrid(10.0, 1024, 1.0)
        m = int(sp.get("poincare_samples", 100))
        reps = [diagnostics.poincare_check(diagnostics.random_bump(rng, pg), wh.m, pg) for _ in range(m)]
        bad = sum(not r["holds"] for r in reps)
        worst = min(r["lhs"] / r["rhs"] for r in reps)
        result.checks.append(Check("poincare", {"mhat": wh.m, "bumps": m, "worst_ratio": worst},
                                   float(bad), 0.0))
    return result


def suite_energy(cfg, out, seeds):
    result = SuiteResult()
    c = io.build_sim_config(cfg, seeds[0])
    _validation(cfg, c, out, result, gate="base")
    sp = cfg["suite_params"]
    up, ep = run_ensemble(c, seeds, alphas=(0.0,), record_every=int(sp.get("record_every", 1)))
    slack_factor = float(sp.get("slack_factor", 2.0))
    rows, held = [], 0
    for u, e in zip(up, ep[0.0]):
        rep = diagnostics.energy_bound_check(u, e, c, slack_factor)
        held += rep.holds
        rows.append([u.seed, rep.R1_value, rep.slack, rep.holds])
    io.write_csv(out / "energy.csv", ["seed", "R1", "min_rhs_over_lhs", "holds"], rows)
    result.files.append("energy.csv")
    frac = held / len(seeds)
    result.checks.append(Check("energy_fraction", {"paths": len(seeds), "slack_factor": slack_factor},
                               frac, float(sp.get("energy_fraction", 0.95)), ">="))
    return result


def suite_ou_moments(cfg, out, seeds):
    result = SuiteResult()
    c = io.build_sim_config(cfg, seeds[0])
    _validation(cfg, c, out, result)
    oc = cfg["ou"]
    alphas = tuple(sorted(float(a) for a in oc["alphas"]))
    if not alphas:
        raise ConfigurationError("ou.alphas: empty")
    _, ep = run_ensemble(c, seeds, alphas=alphas)
    mhat = c.weight_hat.m if c.weight_hat.kind == "exponential" else 0.0
    reps = [ou.moment_report(ep[a]) for a in alphas]
    rows = []
    for r in reps:
        try:
            shape = ou.moment_decay_bound(r["alpha"], mhat)
        except SBurgersError:
            shape = math.inf
        rows.append([r["alpha"], r["n"], r["sup_moment"], r["stderr"], shape])
        result.checks.append(Check("ou_moment_alpha", {"alpha": r["alpha"], "stderr": r["stderr"]},
                                   r["sup_moment"], math.inf, "<"))
    io.write_csv(out / "ou_moments.csv", ["alpha", "n", "sup_moment", "stderr", "bound_shape"], rows)
    result.files.append("ou_moments.csv")
    for r0, r1 in zip(reps, reps[1:]):
        tol = 2.0 * math.hypot(r0["stderr"], r1["stderr"])
        result.checks.append(Check("ou_nonincreasing", {"alphas": [r0["alpha"], r1["alpha"]]},
                                   r1["sup_moment"] - r0["sup_moment"], tol))
    if len(reps) > 1 and alphas[-1] >= 8 * alphas[0] > 0:
        result.checks.append(Check("ou_decay_ratio", {"alphas": [alphas[0], alphas[-1]]},
                                   reps[-1]["sup_moment"] / reps[0]["sup_moment"],
                                   float(cfg["suite_params"].get("decay_ratio", 0.5))))
    tail_rows = []
    for a in alphas:
        for row in ou.chebyshev_tail_check(ep[a]):
            tail_rows.append([a, row["factor"], row["R"], row["tail"], row["bound"]])
            result.checks.append(Check("chebyshev_tail", {"alpha": a, "factor": row["factor"]},
                                       row["tail"], row["bound"]))
    io.write_csv(out / "chebyshev.csv", ["alpha", "factor", "R", "tail", "bound"], tail_rows)
    result.files.append("chebyshev.csv")
    nf = int(oc.get("factorization_seeds", 0))
    frows = []
    for s in seeds[:nf]:
        cs = c.replace(seed=s)
        path = solver.simulate_path(cs)
        fc = ou.factorization_check(ou.OUConfig(0.0, cs), path, oc["alpha_frac"], oc["q"])
        frows.append([s, fc["steps"], fc["space_time"], fc["terminal"], fc["max_pointwise"], fc["Y_lq"]])
        result.checks.append(Check("factorization", {"seed": s, "steps": fc["steps"],
                                                     "alpha_frac": oc["alpha_frac"]},
                                   fc["space_time"], float(cfg["suite_params"].get("factorization_tol", 0.05))))
    if frows:
        io.write_csv(out / "factorization.csv",
                     ["seed", "steps", "space_time", "terminal", "max_pointwise", "Y_lq"], frows)
        result.files.append("factorization.csv")
    return result


OBSERVABLES = (measure.Observable("norm_2rho"), measure.Observable("norm_2rhohat"),
               measure.Observable("point_eval", 0.0), measure.Observable("mode_projection", 1))


def suite_invariant_measure(cfg, out, seeds):
    result = SuiteResult()
    c = io.build_sim_config(cfg, seeds[0])
    _validation(cfg, c, out, result, gate="all")
    g = c.grid
    sp = cfg["suite_params"]
    rec = int(sp.get("record_every", max(1, int(round(0.05 / g.dt)))))
    burn = float(sp.get("burn_in", measure.BURN_IN))
    if g.T <= burn:
        raise ConfigurationError(f"grid.T={g.T} must exceed the burn-in {burn}")
    up, _ = run_ensemble(c, seeds, record_every=rec, observables=OBSERVABLES[2:])
    eps = float(sp.get("epsilon", 0.05))
    R_grid = sp.get("R_grid") or list(np.geomspace(1e-3, 10.0, 41))
    stats, R_eps = diagnostics.exceedance_curve(up, R_grid, eps)
    io.write_csv(out / "exceedance.csv", ["R", "T", "frequency"], [[s.R, s.T, s.frequency] for s in stats])
    freqs = np.array([s.frequency for s in stats])
    rise = float(np.max(np.diff(freqs))) if freqs.size > 1 else 0.0
    result.checks.append(Check("exceedance_monotone", {"points": len(stats)}, rise, 0.0))
    result.checks.append(Check("exceedance_R_eps", {"epsilon": eps, "R": R_eps, "paths": len(seeds)},
                               float(freqs.min()), eps))
    tight = measure.tightness_report(up, R_grid, burn_in=burn)
    io.write_csv(out / "tightness.csv", ["r", "tail_mass"], [[t["r"], t["tail_mass"]] for t in tight])
    masses = np.array([t["tail_mass"] for t in tight])
    result.checks.append(Check("tightness_monotone", {"radii": len(tight)},
                               float(np.max(np.diff(masses))) if masses.size > 1 else 0.0, 0.0))
    srows = []
    for obs in OBSERVABLES:
        law = measure.time_average_law(up, obs, burn, g.T)
        (out / f"measure_{obs.kind}.csv").write_text(law.to_csv())
        result.files.append(f"measure_{obs.kind}.csv")
        if g.T >= 4:
            st = measure.stationarity_report(up, obs, g.T)
            srows.append([obs.key, st["T"], st["d_half"], st["d_shift"]])
    io.write_csv(out / "stationarity.csv", ["observable", "T", "d_half", "d_shift"], srows)
    result.files += ["exceedance.csv", "tightness.csv", "stationarity.csv"]
    return result


def suite_full(cfg, out, seeds):
    result = SuiteResult()
    c = io.build_sim_config(cfg, seeds[0])
    _validation(cfg, c, out, result, gate="all")
    for name, fn in (("solve", suite_solve), ("verify_kernels", suite_verify_kernels),
                     ("energy", suite_energy), ("ou_moments", suite_ou_moments),
                     ("invariant_measure", suite_invariant_measure)):
        sub = out / name
        sub.mkdir(parents=True, exist_ok=True)
        r = fn(cfg, sub, seeds)
        _write_checks(sub, r.checks)
        result.checks += [Check(f"{name}/{k.check_id}", k.parameters, k.lhs, k.rhs, k.relation)
                          for k in r.checks]
        result.files += [f"{name}/{f}" for f in r.files + ["checks.csv"]]
    return result


SUITE_FUNCS = {
    "solve": suite_solve, "verify_kernels": suite_verify_kernels, "energy": suite_energy,
    "ou_moments": suite_ou_moments, "invariant_measure": suite_invariant_measure, "full": suite_full,
}


# -- orchestration ---------------------------------------------------------


def _write_checks(out, checks):
    io.write_csv(out / "checks.csv", CHECK_HEADER, [k.row() for k in checks])


def _manifest(out, cfg, seeds, suite, files, status):
    digests = {}
    for f in sorted(set(files)):
        p = out / f
        if p.exists():
            digests[f] = hashlib.sha256(p.read_bytes()).hexdigest()
    man = {"config_hash": io.config_hash(cfg), "seeds": seeds, "suite": suite,
           "output_dir": str(out), "status": status, "files": digests}
    (out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return man


def _finish(out, cfg, seeds, suite, result):
    _write_checks(out, result.checks)
    files = result.files + ["checks.csv"]
    ok = all(k.verdict for k in result.checks)
    _manifest(out, cfg, seeds, suite, files, "pass" if ok else "fail")
    for k in result.checks:
        if not k.verdict:
            print(f"FAIL {k.check_id} lhs={k.lhs!r} rhs={k.rhs!r}", file=sys.stderr)
    return 0 if ok else 1


def _resolve_seeds(cfg, n=None, seed_list=None):
    if seed_list:
        return [int(s) for s in seed_list]
    if n is not None:
        return list(range(int(n)))
    return io.seed_list(cfg)


def run(config_path, suite, out_dir, seeds=None, stop_after=None):
    """Execute one suite; returns the process exit code."""
    try:
        if suite not in SUITES:
            raise ConfigurationError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
        cfg = io.load_config(config_path)
        if seeds is not None:
            cfg["seeds"] = list(seeds)
        return run_cfg(cfg, suite, out_dir, stop_after=stop_after)
    except (ConfigurationError, CheckpointError, InvalidInputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


def run_cfg(cfg, suite, out_dir, stop_after=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = io.seed_list(cfg)
    if stop_after is not None and suite != "solve":
        raise ConfigurationError("--stop-after applies to the solve suite only")
    if suite == "solve":
        result = suite_solve(cfg, out, seeds, stop_after=stop_after)
        if result is None:
            _manifest(out, cfg, seeds, suite, ["checkpoint.sbrg", "validation.csv"], "interrupted")
            return 0
    else:
        result = SUITE_FUNCS[suite](cfg, out, seeds)
    return _finish(out, cfg, seeds, suite, result)


def resume(checkpoint_path, config_path=None):
    try:
        header, arrays = io.read_checkpoint(checkpoint_path)
        cfg = header["config"]
        if io.config_hash(cfg) != header.get("config_hash"):
            raise CheckpointError("config hash does not match the embedded config")
        if config_path is not None and io.config_hash(io.load_config(config_path)) != header["config_hash"]:
            raise CheckpointError("config hash differs from the supplied config")
        out = Path(checkpoint_path).parent
        seeds = [int(s) for s in header["seeds"]]
        step = int(header["step"])
        state = (arrays["U"], {"steps": arrays["steps"].astype(int), "values": arrays["norms"]}, step)
        result = suite_solve(cfg, out, seeds, state=state)
        return _finish(out, cfg, seeds, "solve", result)
    except (CheckpointError, ConfigurationError, KeyError, ValueError) as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 2


def _apply_sweep(cfg, param, value):
    cfg = copy.deepcopy(cfg)
    if param == "alpha":
        cfg["ou"]["alphas"] = [float(value)]
    elif param == "R":
        cfg["suite_params"]["R_grid"] = [float(value)]
    elif param == "nx":
        cfg["grid"]["nx"] = int(value)
    elif param == "dt":
        cfg["grid"]["dt"] = float(value)
    elif param == "k":
        cfg["k"] = float(value)
    else:
        cfg["seeds"] = [int(value)]
    return cfg


def sweep(config_path, param, values, suite, out_dir):
    try:
        if param not in SWEEPABLE:
            raise ConfigurationError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEPABLE)}")
        if suite not in SUITES:
            raise ConfigurationError(f"unknown suite {suite!r}")
        base = io.load_config(config_path)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, codes = [], []
    for v in values:
        sub = out / f"{param}={io.fmt(v)}"
        cfg = _apply_sweep(base, param, v)
        try:
            code = run_cfg(cfg, suite, sub)
        except (ConfigurationError, InvalidInputError) as exc:
            print(f"configuration error in {sub.name}: {exc}", file=sys.stderr)
            code = 2
        codes.append(code)
        checks = sub / "checks.csv"
        if code == 2 or not checks.exists():
            rows.append([param, v, code, "config_error", "", "", "", "", ""])
            continue
        for r in io.read_csv(checks):
            rows.append([param, v, code, r["check_id"], r["parameters"], r["lhs"], r["rhs"],
                         r["slack"], r["verdict"]])
    io.write_csv(out / "sweep.csv", ["param", "value", "exit_code", "check_id", "parameters", "lhs", "rhs",
                                     "slack", "verdict"], rows)
    return 2 if 2 in codes else (1 if 1 in codes else 0)


def _number(s):
    v = float(s)
    return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v


def build_parser():
    p = argparse.ArgumentParser(prog="sburgers", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one suite")
    r.add_argument("--config")
    r.add_argument("--suite", default="solve")
    r.add_argument("--out", default="out")
    g = r.add_mutually_exclusive_group()
    g.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    g.add_argument("--seed-list", help="comma-separated seeds")
    r.add_argument("--resume", metavar="PATH", help="continue from a checkpoint")
    r.add_argument("--stop-after", type=int, metavar="STEP",
                   help="solve suite: checkpoint and stop after this step")
    s = sub.add_parser("sweep", help="one sub-run per parameter value")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--suite", default="solve")
    s.add_argument("--out", default="out")
    c = sub.add_parser("resume", help="continue an interrupted solve run")
    c.add_argument("checkpoint")
    c.add_argument("--config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "resume":
        return resume(args.checkpoint, args.config)
    if args.command == "sweep":
        try:
            values = [_number(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            print(f"configuration error: bad --values {args.values!r}", file=sys.stderr)
            return 2
        return sweep(args.config, args.param, values, args.suite, args.out)
    if args.resume:
        return resume(args.resume, args.config)
    if not args.config:
        print("configuration error: --config is required", file=sys.stderr)
        return 2
    seeds = None
    if args.seed_list:
        try:
            seeds = [int(v) for v in args.seed_list.split(",") if v.strip()]
        except ValueError:
            print(f"configuration error: bad --seed-list {args.seed_list!r}", file=sys.stderr)
            return 2
    elif args.seeds is not None:
        seeds = list(range(args.seeds))
    return run(args.config, args.suite, args.out, seeds=seeds, stop_after=args.stop_after)


if __name__ == "__main__":
    sys.exit(main())
